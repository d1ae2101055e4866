#include "hyperod/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hyperod/error.hpp"
#include "hyperod/jacobi.hpp"

namespace hyperod {

std::string to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

namespace {

double log_abs_det(Matrix<double> a) {
  const std::size_t n = a.rows();
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    }
    if (a(piv, c) == 0.0) return -std::numeric_limits<double>::infinity();
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
    }
    acc += std::log(std::abs(a(c, c)));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return acc;
}

/// Modified Gram-Schmidt with one reorthogonalisation pass; overwrites y
/// with Q and returns the (positive) diagonal of R.
Vec<double> orthonormalize(Matrix<double>& y) {
  const std::size_t n = y.rows();
  const std::size_t m = y.cols();
  Vec<double> diag(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double before = 0.0;
    for (std::size_t r = 0; r < n; ++r) before += y(r, j) * y(r, j);
    before = std::sqrt(before);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += y(r, i) * y(r, j);
        for (std::size_t r = 0; r < n; ++r) y(r, j) -= proj * y(r, i);
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += y(r, j) * y(r, j);
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm) || norm < 1e-280 * std::max(before, 1e-280)) {
      throw Error(ErrorCode::DegenerateFrame,
                  "lyapunov_qr: tangent frame collapsed (reorth_every too large for this orbit)");
    }
    for (std::size_t r = 0; r < n; ++r) y(r, j) /= norm;
    diag[j] = norm;
  }
  return diag;
}

using StepFn = std::function<Matrix<double>()>;

SpectrumResult run_qr(std::size_t dim, long n_steps, int reorth_every, Direction dir, const StepFn& next_jacobian) {
  if (n_steps < 100) {
    throw Error(ErrorCode::InvalidArgument, "lyapunov_qr: n_steps must be at least 100");
  }
  if (reorth_every < 1 || reorth_every > 10) {
    throw Error(ErrorCode::InvalidArgument, "lyapunov_qr: reorth_every must lie in [1, 10]");
  }
  constexpr int kWindows = 10;
  const long window = n_steps / kWindows;
  Matrix<double> frame = Matrix<double>::identity(dim);
  Vec<double> total(dim, 0.0);
  Vec<double> window_sum(dim, 0.0);
  std::vector<Vec<double>> window_estimates;
  double log_det = 0.0;
  long since_qr = 0;
  for (long step = 1; step <= n_steps; ++step) {
    const Matrix<double> J = next_jacobian();
    log_det += log_abs_det(J);
    frame = J * frame;
    ++since_qr;
    const bool window_end = step % window == 0 && static_cast<long>(window_estimates.size()) < kWindows;
    if (since_qr == reorth_every || window_end || step == n_steps) {
      const Vec<double> r = orthonormalize(frame);
      for (std::size_t i = 0; i < dim; ++i) {
        const double l = std::log(r[i]);
        total[i] += l;
        window_sum[i] += l;
      }
      since_qr = 0;
    }
    if (window_end) {
      Vec<double> est(dim);
      for (std::size_t i = 0; i < dim; ++i) est[i] = window_sum[i] / static_cast<double>(window);
      window_estimates.push_back(est);
      window_sum.assign(dim, 0.0);
    }
  }
  SpectrumResult out;
  out.n_steps = n_steps;
  out.direction = dir;
  out.mean_log_det = log_det / static_cast<double>(n_steps);
  out.exponents.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) out.exponents[i] = total[i] / static_cast<double>(n_steps);
  // Window estimates are indexed by frame column, like `total`.
  double worst = 0.0;
  for (std::size_t i = 0; i < dim && window_estimates.size() > 1; ++i) {
    double mean = 0.0;
    for (const auto& w : window_estimates) mean += w[i];
    mean /= static_cast<double>(window_estimates.size());
    double var = 0.0;
    for (const auto& w : window_estimates) var += (w[i] - mean) * (w[i] - mean);
    var /= static_cast<double>(window_estimates.size() - 1);
    worst = std::max(worst, std::sqrt(var));
  }
  out.residual = worst;
  std::sort(out.exponents.begin(), out.exponents.end());
  return out;
}

StepFn orbit_steps(const ParametricMap& map, double k, const PhasePoint& x0, Direction dir, bool extended) {
  auto x = std::make_shared<PhasePoint>(make_point(map, x0.coords));
  const std::size_t d = map.dim();
  return [&map, k, x, dir, extended, d]() {
    Matrix<double> J;
    Vec<double> jk;
    if (dir == Direction::Forward) {
      J = jac_x(map, k, *x);
      if (extended) jk = jac_k(map, k, *x);
      *x = eval(map, k, *x);
    } else {
      *x = inverse_eval(map, k, *x);
      J = map.jacobian_state_inverse(k, x->coords);
      if (extended) jk = J * jac_k(map, k, *x);
    }
    if (!extended) return J;
    Matrix<double> G(d + 1, d + 1, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) G(i, j) = J(i, j);
      G(i, d) = dir == Direction::Forward ? jk[i] : -jk[i];
    }
    G(d, d) = 1.0;
    return G;
  };
}

}  // namespace

SpectrumResult lyapunov_qr(const ParametricMap& map, double k, const PhasePoint& x0, const SpectrumOptions& opt) {
  return run_qr(map.dim(), opt.n_steps, opt.reorth_every, opt.direction,
                orbit_steps(map, k, x0, opt.direction, false));
}

std::pair<SpectrumResult, SpectrumResult> forward_backward_check(const ParametricMap& map, double k,
                                                                 const PhasePoint& x0, long n_steps,
                                                                 int reorth_every) {
  return {lyapunov_qr(map, k, x0, {n_steps, reorth_every, Direction::Forward}),
          lyapunov_qr(map, k, x0, {n_steps, reorth_every, Direction::Backward})};
}

SpectrumResult extended_spectrum(const ParametricMap& map, double k, const PhasePoint& x0, long n_steps,
                                 int reorth_every) {
  return run_qr(map.dim() + 1, n_steps, reorth_every, Direction::Forward,
                orbit_steps(map, k, x0, Direction::Forward, true));
}

FitResult lyapunov_indicator(const ParametricMap& map, double k, const PhasePoint& x0, long n_steps,
                             Direction direction) {
  if (n_steps < 3) {
    throw Error(ErrorCode::InvalidArgument, "lyapunov_indicator: need at least 3 iterations");
  }
  const StepFn next = orbit_steps(map, k, x0, direction, false);
  Matrix<double> product = Matrix<double>::identity(map.dim());
  double log_scale = 0.0;
  std::vector<std::pair<double, double>> series;
  series.reserve(static_cast<std::size_t>(n_steps));
  for (long n = 1; n <= n_steps; ++n) {
    product = next() * product;
    const double m = max_abs(product);
    for (auto& v : product.data()) v /= m;
    log_scale += std::log(m);
    const auto eig = jacobi_eigen(product.transpose() * product);
    series.emplace_back(static_cast<double>(n), log_scale + 0.5 * std::log(eig.values.back()));
  }
  return fit_rate(series, FitModel::Exponential);
}

std::vector<MultiplicityGroup> merge_multiplicities(const SpectrumResult& s, double tol) {
  std::vector<MultiplicityGroup> groups;
  for (double e : s.exponents) {
    if (!groups.empty() && std::abs(e - groups.back().exponent) < tol) {
      auto& g = groups.back();
      g.exponent = (g.exponent * g.multiplicity + e) / (g.multiplicity + 1);
      ++g.multiplicity;
    } else {
      groups.push_back({e, 1});
    }
  }
  return groups;
}

}  // namespace hyperod
