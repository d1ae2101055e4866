#include "hyperod/uncertainty.hpp"

#include <algorithm>
#include <limits>
#include <locale>
#include <numeric>
#include <ostream>

#include "hyperod/jacobi.hpp"

namespace hyperod {

namespace {

using DD = DoubleDouble;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Shift that brings max|v| into [0.5, 1), or 0 for an all-zero vector.
int unit_shift(const std::vector<DD>& v) {
  const double m = to_double(max_abs(v));
  if (m == 0.0) return 0;
  int e = 0;
  std::frexp(m, &e);
  return e;
}

void scale_all(std::vector<DD>& v, int shift) {
  if (shift == 0) return;
  for (auto& x : v) x = ldexp(x, -shift);
}

double log_dd(const DD& v) { return v.hi > 0.0 ? log(v) : (v.hi == 0.0 ? -kInf : std::nan("")); }

}  // namespace

template <class Real>
ScaledDesign design_block(const BasicTangentState<Real>& s, NormalMode mode) {
  const std::size_t d = s.dim();
  const bool with_k = mode != NormalMode::CaseA;
  const bool aux = mode == NormalMode::AuxiliaryG;
  int e = s.F_exp;
  if (with_k && !s.dk_zero) e = std::max(e, s.dk_exp);
  if (aux) e = std::max(e, 0);
  ScaledDesign out;
  out.D = Matrix<DD>(aux ? d + 1 : d, with_k ? d + 1 : d, DD(0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.D(i, j) = ldexp(DD(s.F(i, j)), s.F_exp - e);
    if (with_k && !s.dk_zero) out.D(i, d) = ldexp(DD(s.dk[i]), s.dk_exp - e);
  }
  if (aux) out.D(d, d) = ldexp(DD(1.0), -e);
  const int shift = unit_shift(out.D.data());
  scale_all(out.D.data(), shift);
  out.exp = e + shift;
  return out;
}

template ScaledDesign design_block<double>(const BasicTangentState<double>&, NormalMode);
template ScaledDesign design_block<DD>(const BasicTangentState<DD>&, NormalMode);

// ------------------------------------------------------------ accumulator

SymmetricAccumulator::SymmetricAccumulator(std::size_t d, NormalMode mode)
    : d_(d), dim_(mode == NormalMode::CaseA ? d : d + 1), mode_(mode) {
  if (d < 1) {
    throw Error(ErrorCode::InvalidArgument, "SymmetricAccumulator: dimension must be at least 1");
  }
  M_.assign(dim_ * (dim_ + 1) / 2, DD(0.0));
  R_ = Matrix<DD>(dim_, dim_, DD(0.0));
}

std::size_t SymmetricAccumulator::packed(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // rows 0..i−1 hold dim, dim−1, … entries
  return i * dim_ - i * (i - 1) / 2 + (j - i);
}

const DD& SymmetricAccumulator::scaled(std::size_t i, std::size_t j) const { return M_[packed(i, j)]; }

Matrix<DD> SymmetricAccumulator::scaled_matrix() const {
  Matrix<DD> out(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) out(i, j) = scaled(i, j);
  }
  return out;
}

Matrix<DD> SymmetricAccumulator::true_matrix() const {
  Matrix<DD> out = scaled_matrix();
  for (auto& v : out.data()) v = ldexp(v, M_exp_);
  return out;
}

void SymmetricAccumulator::add_shell(const std::vector<ScaledDesign>& blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "add_shell: no design blocks");
  }
  for (const auto& b : blocks) {
    if (b.D.cols() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "add_shell: design block has the wrong width");
    }
  }
  // Shell term: both signs summed at their common scale first.
  int eT = std::numeric_limits<int>::min();
  for (const auto& b : blocks) eT = std::max(eT, 2 * b.exp);
  std::vector<DD> T(M_.size(), DD(0.0));
  for (const auto& b : blocks) {
    const int shift = 2 * b.exp - eT;
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = i; j < dim_; ++j) {
        DD s(0.0);
        for (std::size_t r = 0; r < b.D.rows(); ++r) s += b.D(r, i) * b.D(r, j);
        T[packed(i, j)] += ldexp(s, shift);
      }
    }
  }
  bool dropped = false;
  if (N_ < 0) {
    M_ = T;
    M_exp_ = eT;
  } else {
    const int gap = eT - M_exp_;
    if (gap * std::numbers::ln2 < -kDropLogGap) {
      ++truncated_;
      dropped = true;
    } else if (gap > 0) {
      scale_all(M_, gap);
      M_exp_ = eT;
      for (std::size_t i = 0; i < M_.size(); ++i) M_[i] += T[i];
    } else {
      for (std::size_t i = 0; i < M_.size(); ++i) M_[i] += ldexp(T[i], gap);
    }
  }
  const int shift = unit_shift(M_);
  scale_all(M_, shift);
  M_exp_ += shift;

  if (!dropped) {
    for (const auto& b : blocks) {
      for (std::size_t r = 0; r < b.D.rows(); ++r) {
        Vec<DD> row(dim_);
        for (std::size_t j = 0; j < dim_; ++j) row[j] = b.D(r, j);
        add_row(std::move(row), b.exp);
      }
    }
    const int rs = unit_shift(R_.data());
    scale_all(R_.data(), rs);
    R_exp_ += rs;
  }
  ++N_;
}

void SymmetricAccumulator::add_row(Vec<DD> row, int exp) {
  if (to_double(max_abs(row)) == 0.0) return;
  if (R_empty_) {
    R_exp_ = exp;
    R_empty_ = false;
  }
  const int c = std::max(R_exp_, exp);
  if (c != R_exp_) {
    scale_all(R_.data(), c - R_exp_);
    R_exp_ = c;
  }
  scale_all(row, c - exp);
  for (std::size_t j = 0; j < dim_; ++j) {
    if (row[j].hi == 0.0) continue;
    const DD a = R_(j, j);
    const DD b = row[j];
    const DD m = std::max(abs(a), abs(b));
    const DD an = a / m;
    const DD bn = b / m;
    const DD r = m * sqrt(an * an + bn * bn);
    const DD cs = a / r;
    const DD sn = b / r;
    R_(j, j) = r;
    row[j] = DD(0.0);
    for (std::size_t l = j + 1; l < dim_; ++l) {
      const DD x = R_(j, l);
      const DD y = row[l];
      R_(j, l) = cs * x + sn * y;
      row[l] = cs * y - sn * x;
    }
  }
}

// ------------------------------------------------------------ eigenvalues

namespace {

EigenReport finish_report(std::vector<DD> values, Matrix<DD> vectors, int exp, int sweeps) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  EigenReport rep;
  rep.exponent = exp;
  rep.sweeps = sweeps;
  rep.eigenvectors = Matrix<DD>(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const DD v = values[order[c]];
    rep.mantissas.push_back(v);
    rep.log_eigenvalues.push_back(log_dd(v) + exp * std::numbers::ln2);
    for (std::size_t r = 0; r < n; ++r) rep.eigenvectors(r, c) = vectors(r, order[c]);
  }
  rep.log_condition = rep.log_eigenvalues.back() - rep.log_eigenvalues.front();
  return rep;
}

}  // namespace

EigenReport eigen(const SymmetricAccumulator& acc) {
  if (acc.empty()) {
    throw Error(ErrorCode::InvalidArgument, "eigen: accumulator holds no shells");
  }
  // One-sided Jacobi: rotate columns of R until mutually orthogonal; the
  // squared column norms are then the eigenvalues of RᵀR.
  const std::size_t n = acc.dim();
  Matrix<DD> W = acc.r_factor();
  Matrix<DD> V = Matrix<DD>::identity(n);
  constexpr double kTol = 1e-31;
  constexpr int kMaxSweeps = 60;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        DD alpha(0.0);
        DD beta(0.0);
        DD gamma(0.0);
        for (std::size_t r = 0; r < n; ++r) {
          alpha += W(r, p) * W(r, p);
          beta += W(r, q) * W(r, q);
          gamma += W(r, p) * W(r, q);
        }
        if (gamma.hi == 0.0 || alpha.hi == 0.0 || beta.hi == 0.0) continue;
        if (abs(gamma) <= DD(kTol) * sqrt(alpha) * sqrt(beta)) continue;
        rotated = true;
        const DD zeta = (beta - alpha) / (DD(2.0) * gamma);
        DD t;
        if (std::abs(zeta.hi) > 1e150) {
          t = DD(1.0) / (DD(2.0) * zeta);
        } else {
          t = DD(1.0) / (abs(zeta) + sqrt(DD(1.0) + zeta * zeta));
          if (zeta.hi < 0.0) t = -t;
        }
        const DD c = DD(1.0) / sqrt(DD(1.0) + t * t);
        const DD s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const DD wp = W(r, p);
          const DD wq = W(r, q);
          W(r, p) = c * wp - s * wq;
          W(r, q) = s * wp + c * wq;
          const DD vp = V(r, p);
          const DD vq = V(r, q);
          V(r, p) = c * vp - s * vq;
          V(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps) {
    throw Error(ErrorCode::NonConvergence, "eigen: one-sided Jacobi did not converge in 60 sweeps");
  }
  std::vector<DD> values(n, DD(0.0));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) values[c] += W(r, c) * W(r, c);
  }
  return finish_report(std::move(values), std::move(V), 2 * acc.r_exponent(), sweep);
}

EigenReport eigen_of_matrix(const Matrix<DD>& M, int exp) {
  const auto eig = jacobi_eigen(M);
  const double top = std::max(std::abs(to_double(eig.values.front())), std::abs(to_double(eig.values.back())));
  std::vector<DD> values = eig.values;
  for (auto& v : values) {
    if (to_double(v) < -1e-28 * top) {
      throw Error(ErrorCode::NegativeEigenvalue, "eigen: negative eigenvalue in a normal matrix");
    }
    if (v.hi < 0.0) v = DD(0.0);
  }
  return finish_report(std::move(values), eig.vectors, exp, eig.sweeps);
}

EigenReport eigen_of_entries(const SymmetricAccumulator& acc) {
  if (acc.empty()) {
    throw Error(ErrorCode::InvalidArgument, "eigen: accumulator holds no shells");
  }
  return eigen_of_matrix(acc.scaled_matrix(), acc.exponent());
}

EigenReport covariance_from(const EigenReport& normal) {
  const std::size_t n = normal.dim();
  EigenReport cov;
  cov.exponent = -normal.exponent;
  cov.sweeps = normal.sweeps;
  cov.log_condition = normal.log_condition;
  cov.eigenvectors = Matrix<DD>(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = n - 1 - c;
    cov.log_eigenvalues.push_back(-normal.log_eigenvalues[src]);
    const DD m = normal.mantissas[src];
    cov.mantissas.push_back(m.hi == 0.0 ? DD(kInf) : DD(1.0) / m);
    for (std::size_t r = 0; r < n; ++r) cov.eigenvectors(r, c) = normal.eigenvectors(r, src);
  }
  return cov;
}

EigenReport covariance_eigen(const SymmetricAccumulator& acc) {
  if (acc.empty()) {
    throw Error(ErrorCode::InvalidArgument, "covariance_eigen: accumulator holds no shells");
  }
  if (acc.mode() != NormalMode::CaseA && acc.shells() < 1) {
    throw Error(ErrorCode::RankDeficient, "covariance_eigen: the parameter column vanishes at N = 0");
  }
  EigenReport normal = eigen(acc);
  if (!std::isfinite(normal.log_eigenvalues.front()) || normal.log_condition > kRankDeficientLogSpread) {
    throw Error(ErrorCode::RankDeficient, "covariance_eigen: normal matrix is numerically singular");
  }
  return covariance_from(normal);
}

// ------------------------------------------------------------ ellipsoids

double ConfidenceEllipsoid::normalized_distance2(const Vec<double>& displacement) const {
  if (displacement.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "ellipsoid: displacement has the wrong dimension");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    double proj = 0.0;
    for (std::size_t r = 0; r < dim(); ++r) proj += to_double(directions(r, i)) * displacement[r];
    acc += proj * proj * std::exp(-2.0 * log_semi_axes[i]);
  }
  return acc;
}

ConfidenceEllipsoid ellipsoid(const EigenReport& covariance, const Vec<double>& center, double sigma) {
  const std::size_t n = covariance.dim();
  if (center.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "ellipsoid: center has the wrong dimension");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "ellipsoid: sigma must be positive and finite");
  }
  ConfidenceEllipsoid e;
  e.center = center;
  e.sigma = sigma;
  e.directions = covariance.eigenvectors;
  const double log_sigma = std::log(sigma);
  for (double l : covariance.log_eigenvalues) e.log_semi_axes.push_back(log_sigma + 0.5 * l);
  // Γ_jj = Σ_i λ_i v_{ji}², summed as log-sum-exp.
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> terms;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::abs(to_double(covariance.eigenvectors(j, i)));
      if (v > 0.0) terms.push_back(covariance.log_eigenvalues[i] + 2.0 * std::log(v));
    }
    const double top = terms.empty() ? -kInf : *std::max_element(terms.begin(), terms.end());
    double lse = top;
    if (std::isfinite(top)) {
      double s = 0.0;
      for (double t : terms) s += std::exp(t - top);
      lse = top + std::log(s);
    }
    e.log_marginals.push_back(log_sigma + 0.5 * lse);
  }
  return e;
}

// ------------------------------------------------------------ decay series

DecaySeries decay_series(const ParametricMap& map, double k, const PhasePoint& x0, long N_max, NormalMode mode,
                         long stride) {
  if (N_max < 2) {
    throw Error(ErrorCode::InvalidArgument, "decay_series: N_max must be at least 2");
  }
  if (stride < 1) {
    throw Error(ErrorCode::InvalidArgument, "decay_series: stride must be at least 1");
  }
  DecaySeries out;
  out.mode = mode;
  out.N_max = N_max;
  out.stride = stride;
  SymmetricAccumulator acc(map.dim(), mode);
  TangentStateDD plus;
  const auto emit = [&]() {
    const long N = acc.shells();
    const EigenReport normal = eigen(acc);
    const EigenReport cov = covariance_from(normal);
    const std::size_t n = normal.dim();
    DecayRow row;
    row.N = N;
    row.log_lambda = cov.log_eigenvalues;
    row.log_delta_min = normal.log_eigenvalues.front();
    row.log_condition = normal.log_condition;
    const double top = normal.log_eigenvalues.back();
    for (std::size_t i = 0; i < n; ++i) {
      const double l = normal.log_eigenvalues[n - 1 - i];
      row.trusted.push_back(std::isfinite(l) && top - l <= kTrustLogSpread);
    }
    if (std::isfinite(row.log_delta_min)) {
      row.log_marginals = ellipsoid(cov, Vec<double>(n, 0.0)).log_marginals;
    } else {
      row.log_marginals.assign(n, kInf);
    }
    out.rows.push_back(std::move(row));
  };
  propagate<DD>(map, k, x0, N_max, [&](const TangentStateDD& s) {
    if (s.n == 0) {
      acc.accumulate_shell(s, s);
    } else if (s.n > 0) {
      plus = s;
    } else {
      acc.accumulate_shell(plus, s);
      const long N = acc.shells();
      if (N % stride == 0 || N == N_max) emit();
    }
  });
  out.truncated = acc.truncated();
  return out;
}

void write_decay_csv(std::ostream& os, const DecaySeries& series) {
  const auto old_locale = os.imbue(std::locale::classic());
  const auto old_precision = os.precision(17);
  os << "N,mode,i,log10_lambda_i,trusted\n";
  for (const auto& row : series.rows) {
    for (std::size_t i = 0; i < row.log_lambda.size(); ++i) {
      os << row.N << ',' << to_string(series.mode) << ',' << (i + 1) << ','
         << row.log_lambda[i] / std::numbers::ln10 << ',' << (row.trusted[i] ? 1 : 0) << '\n';
    }
  }
  os.precision(old_precision);
  os.imbue(old_locale);
}

}  // namespace hyperod
