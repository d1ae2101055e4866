#include "hyperod/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hyperod/error.hpp"
#include "hyperod/jacobi.hpp"

namespace hyperod {

std::string to_decimal(const BigRational& q, int digits) {
  if (digits < 1) {
    throw Error(ErrorCode::InvalidArgument, "to_decimal: digits must be positive");
  }
  if (q == 0) return "0";
  const mp_bitcnt_t bits = static_cast<mp_bitcnt_t>(digits) * 4 + 64;
  mpf_class f(q, bits);
  mp_exp_t exp10 = 0;
  std::string mant = f.get_str(exp10, 10, static_cast<std::size_t>(digits));
  std::string sign;
  if (!mant.empty() && mant[0] == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  // f = 0.mant × 10^exp10
  std::ostringstream os;
  os << sign;
  if (exp10 > 0 && exp10 <= digits) {
    const auto e = static_cast<std::size_t>(exp10);
    if (mant.size() <= e) {
      os << mant << std::string(e - mant.size(), '0');
    } else {
      os << mant.substr(0, e) << '.' << mant.substr(e);
    }
  } else if (exp10 <= 0 && exp10 > -6) {
    os << "0." << std::string(static_cast<std::size_t>(-exp10), '0') << mant;
  } else {
    os << mant[0];
    if (mant.size() > 1) os << '.' << mant.substr(1);
    os << 'e' << (exp10 - 1);
  }
  return os.str();
}

RationalMatrix to_rational(const IntMatrix& A) {
  RationalMatrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.data().size(); ++i) {
    out.data()[i] = BigRational(mpz_class(static_cast<long>(A.data()[i])));
  }
  return out;
}

RationalMatrix rational_inverse(const RationalMatrix& M) {
  if (!M.square()) {
    throw Error(ErrorCode::DimensionMismatch, "rational_inverse: matrix is not square");
  }
  const std::size_t n = M.rows();
  RationalMatrix a = M;
  RationalMatrix inv = RationalMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a(piv, c) == 0) ++piv;
    if (piv == n) {
      throw Error(ErrorCode::SingularMatrix, "rational_inverse: matrix is singular");
    }
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(c, j), a(piv, j));
        std::swap(inv(c, j), inv(piv, j));
      }
    }
    const BigRational p = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= p;
      inv(c, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a(r, c) == 0) continue;
      const BigRational f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

RationalMatrix rational_power(const RationalMatrix& A, long n) {
  RationalMatrix base = n < 0 ? rational_inverse(A) : A;
  unsigned long e = n < 0 ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  RationalMatrix out = RationalMatrix::identity(A.rows());
  while (e) {
    if (e & 1UL) out = out * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return out;
}

// ------------------------------------------------------------ fitting

FitResult fit_rate(const std::vector<std::pair<double, double>>& series, FitModel model) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(series.size());
  double first = std::numeric_limits<double>::infinity();
  double last = -first;
  for (const auto& [t, y] : series) {
    if (!std::isfinite(t) || !std::isfinite(y)) continue;
    first = std::min(first, t);
    last = std::max(last, t);
    if (model == FitModel::Polynomial) {
      if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "fit_rate: polynomial model needs positive abscissas");
      }
      pts.emplace_back(std::log(t), y);
    } else {
      pts.emplace_back(t, y);
    }
  }
  if (pts.size() < 3) {
    throw Error(ErrorCode::InsufficientData, "fit_rate: fewer than 3 usable points");
  }
  const double n = static_cast<double>(pts.size());
  double mt = 0.0;
  double my = 0.0;
  for (const auto& [t, y] : pts) {
    mt += t;
    my += y;
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (const auto& [t, y] : pts) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(stt > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "fit_rate: abscissas are constant");
  }
  FitResult r;
  r.slope = sty / stt;
  r.intercept = my - r.slope * mt;
  r.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 1.0;
  r.first = first;
  r.last = last;
  r.n_points = pts.size();
  return r;
}

// ------------------------------------------------------------ affine oracles

namespace {

RationalMatrix one_minus(const RationalMatrix& A) {
  RationalMatrix m = RationalMatrix::identity(A.rows()) - A;
  return m;
}

}  // namespace

RationalVector fixed_offset(const RationalMatrix& A, const RationalVector& b) {
  if (!A.square() || A.rows() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "fixed_offset: A and b disagree in dimension");
  }
  try {
    return rational_inverse(one_minus(A)) * b;
  } catch (const Error&) {
    throw Error(ErrorCode::SingularMatrix, "fixed_offset: 1 - A is singular");
  }
}

CatIterate cat_iterate_exact(const RationalMatrix& A, const RationalVector& b, const BigRational& k,
                             const RationalVector& x, long n) {
  if (x.size() != A.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "cat_iterate_exact: point has the wrong dimension");
  }
  const RationalVector w = fixed_offset(A, b);
  CatIterate out;
  out.power = rational_power(A, n);
  out.dk = one_minus(out.power) * w;
  out.point = out.power * x;
  for (std::size_t i = 0; i < x.size(); ++i) out.point[i] += k * out.dk[i];
  return out;
}

std::vector<CaseALimit> cat_case_a_limits(const AffineTorusMap& map) {
  if (!map.symmetric()) {
    throw Error(ErrorCode::InvalidArgument, "cat_case_a_limits: the sharp limits need a symmetric A");
  }
  const IntMatrix& A = map.A();
  const std::size_t d = A.rows();
  std::vector<double> deltas;
  if (d == 2) {
    const double t = static_cast<double>(A(0, 0) + A(1, 1));
    const double det = static_cast<double>(map.determinant());
    const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det));
    const double big = t >= 0.0 ? 0.5 * (t + disc) : 0.5 * (t - disc);
    deltas = {big, det / big};
  } else {
    deltas = jacobi_eigen(A.cast<double>()).values;
  }
  std::vector<CaseALimit> out;
  for (double delta : deltas) {
    const double g = std::log(std::abs(delta));
    if (!(std::abs(g) > 1e-9)) {
      throw Error(ErrorCode::InvalidArgument, "cat_case_a_limits: eigenvalue on the unit circle");
    }
    // 1 − |δ|^{−2} for |δ| > 1, 1 − |δ|^2 for |δ| < 1
    out.push_back({delta, g, -std::expm1(-2.0 * std::abs(g))});
  }
  // λ^(1) is the reciprocal of the largest normal-matrix eigenvalue, which
  // comes from the largest |γ|.
  std::stable_sort(out.begin(), out.end(),
                   [](const CaseALimit& a, const CaseALimit& b) { return std::abs(a.exponent) > std::abs(b.exponent); });
  return out;
}

std::vector<double> cat_case_a_ratio(const AffineTorusMap& map, long N) {
  if (N < 0) {
    throw Error(ErrorCode::InvalidArgument, "cat_case_a_ratio: N must be non-negative");
  }
  std::vector<double> out;
  for (const auto& lim : cat_case_a_limits(map)) {
    // S = ρ^{2N}(1 − q^{2N+1})/(1 − q) with ρ = e^{|γ|}, q = ρ^{−2}
    const double two_g = 2.0 * std::abs(lim.exponent);
    out.push_back(std::expm1(-two_g) / std::expm1(-two_g * static_cast<double>(2 * N + 1)));
  }
  return out;
}

double CaseBBound::bound(long N) const { return prefactor.get_d() / static_cast<double>(2 * N + 1); }

double CaseBBound::log_bound(long N) const {
  return std::log(prefactor.get_d()) - std::log(static_cast<double>(2 * N + 1));
}

CaseBBound cat_case_b_bound(const AffineTorusMap& map, long certify_n) {
  const RationalVector& b = map.b();
  if (std::all_of(b.begin(), b.end(), [](const BigRational& q) { return q == 0; })) {
    throw Error(ErrorCode::InvalidArgument, "cat_case_b_bound: b = 0 makes the bound degenerate");
  }
  const RationalMatrix A = to_rational(map.A());
  const std::size_t d = A.rows();
  CaseBBound out;
  out.w = fixed_offset(A, b);
  out.w_norm2 = dot(out.w, out.w);
  out.prefactor = (out.w_norm2 + 1) / out.w_norm2;
  out.v0 = out.w;
  out.v0.emplace_back(1);

  RationalMatrix G(d + 1, d + 1, BigRational(0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) G(i, j) = A(i, j);
    G(i, d) = b[i];
  }
  G(d, d) = 1;
  RationalVector v = out.v0;
  for (long n = 1; n <= certify_n; ++n) {
    v = G * v;
    if (v != out.v0) {
      throw Error(ErrorCode::InvalidArgument, "cat_case_b_bound: (w, 1) is not fixed by G^" + std::to_string(n));
    }
    out.certified_up_to = n;
  }
  return out;
}

RationalMatrix exact_normal_matrix(const RationalMatrix& A, const RationalVector& b, const BigRational& k, long N,
                                   NormalMode mode) {
  (void)k;  // the design blocks A^n and (1 − A^n)w do not depend on k or x
  if (N < 0) {
    throw Error(ErrorCode::InvalidArgument, "exact_normal_matrix: N must be non-negative");
  }
  if (N > kExactNormalGuard) {
    throw Error(ErrorCode::CostGuard,
                "exact_normal_matrix: N exceeds the exact-arithmetic guard of " + std::to_string(kExactNormalGuard));
  }
  const std::size_t d = A.rows();
  const std::size_t dim = mode == NormalMode::CaseA ? d : d + 1;
  const std::size_t rows = mode == NormalMode::AuxiliaryG ? d + 1 : d;
  RationalVector w;
  if (mode != NormalMode::CaseA) w = fixed_offset(A, b);
  const RationalMatrix Ainv = rational_inverse(A);
  RationalMatrix C(dim, dim, BigRational(0));

  auto add = [&](const RationalMatrix& P) {
    RationalMatrix D(rows, dim, BigRational(0));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) D(i, j) = P(i, j);
    }
    if (mode != NormalMode::CaseA) {
      const RationalVector dk = one_minus(P) * w;
      for (std::size_t i = 0; i < d; ++i) D(i, d) = dk[i];
    }
    if (mode == NormalMode::AuxiliaryG) D(d, d) = 1;
    C = C + D.transpose() * D;
  };

  add(RationalMatrix::identity(d));
  RationalMatrix fwd = RationalMatrix::identity(d);
  RationalMatrix bwd = RationalMatrix::identity(d);
  for (long n = 1; n <= N; ++n) {
    fwd = A * fwd;
    bwd = Ainv * bwd;
    add(fwd);
    add(bwd);
  }
  return C;
}

RationalMatrix exact_normal_matrix(const AffineTorusMap& map, const BigRational& k, long N, NormalMode mode) {
  return exact_normal_matrix(to_rational(map.A()), map.b(), k, N, mode);
}

BigRational rayleigh_numerator(const RationalMatrix& M, const RationalVector& v) {
  if (!M.square() || M.rows() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rayleigh_numerator: shape mismatch");
  }
  return dot(v, M * v);
}

// ------------------------------------------------------------ polynomials

namespace {

using Poly = RationalVector;  // constant term first

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly out(a.size() + b.size() - 1, BigRational(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  trim(out);
  return out;
}

Poly poly_add(Poly a, const Poly& b, int sign) {
  if (a.size() < b.size()) a.resize(b.size(), BigRational(0));
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (sign > 0) {
      a[i] += b[i];
    } else {
      a[i] -= b[i];
    }
  }
  trim(a);
  return a;
}

Poly derivative(const Poly& p) {
  Poly out;
  for (std::size_t i = 1; i < p.size(); ++i) out.push_back(p[i] * static_cast<long>(i));
  trim(out);
  return out;
}

/// Quotient and remainder of a / b.
std::pair<Poly, Poly> poly_divmod(Poly a, const Poly& b) {
  trim(a);
  if (b.empty()) {
    throw Error(ErrorCode::InvalidArgument, "polynomial division by zero");
  }
  if (a.size() < b.size()) return {{}, a};
  Poly q(a.size() - b.size() + 1, BigRational(0));
  while (a.size() >= b.size() && !a.empty()) {
    const std::size_t shift = a.size() - b.size();
    const BigRational f = a.back() / b.back();
    q[shift] = f;
    for (std::size_t i = 0; i < b.size(); ++i) a[i + shift] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  trim(q);
  return {q, a};
}

Poly poly_gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    const BigRational lead = a.back();
    for (auto& c : a) c /= lead;
  }
  return a;
}

BigRational poly_eval(const Poly& p, const BigRational& x) {
  BigRational acc = 0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

/// det of a matrix of polynomials by expansion along the first row.
Poly poly_det(const std::vector<std::vector<Poly>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  Poly acc;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].empty()) continue;
    std::vector<std::vector<Poly>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Poly> row;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != c) row.push_back(m[r][j]);
      }
      minor.push_back(std::move(row));
    }
    acc = poly_add(acc, poly_mul(m[0][c], poly_det(minor)), c % 2 == 0 ? 1 : -1);
  }
  return acc;
}

int sign_changes(const std::vector<Poly>& seq, const BigRational& x) {
  int changes = 0;
  int last = 0;
  for (const auto& p : seq) {
    const int s = sgn(poly_eval(p, x));
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace

RationalVector characteristic_polynomial(const RationalMatrix& M) {
  if (!M.square() || M.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "characteristic_polynomial: matrix is not square");
  }
  const std::size_t n = M.rows();
  std::vector<std::vector<Poly>> m(n, std::vector<Poly>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Poly p{-M(i, j)};
      if (i == j) p.push_back(BigRational(1));
      trim(p);
      m[i][j] = std::move(p);
    }
  }
  return poly_det(m);
}

RationalInterval exact_smallest_eigen_interval(const RationalMatrix& M, int bits) {
  if (!M.square()) {
    throw Error(ErrorCode::DimensionMismatch, "exact_smallest_eigen_interval: matrix is not square");
  }
  if (M.rows() > 4) {
    throw Error(ErrorCode::InvalidArgument, "exact_smallest_eigen_interval: dimension above 4");
  }
  if (bits < 1) {
    throw Error(ErrorCode::InvalidArgument, "exact_smallest_eigen_interval: bits must be positive");
  }
  const std::size_t n = M.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (M(i, j) != M(j, i)) {
        throw Error(ErrorCode::InvalidArgument, "exact_smallest_eigen_interval: matrix is not symmetric");
      }
    }
  }
  // Square-free part: same roots, all simple, so the Sturm count is exact.
  const Poly p = characteristic_polynomial(M);
  const Poly g = poly_gcd(p, derivative(p));
  const Poly sf = poly_divmod(p, g).first;
  std::vector<Poly> sturm{sf, derivative(sf)};
  while (true) {
    Poly r = poly_divmod(sturm[sturm.size() - 2], sturm.back()).second;
    if (r.empty()) break;
    for (auto& c : r) c = -c;
    sturm.push_back(std::move(r));
  }
  auto roots_in = [&](const BigRational& a, const BigRational& b) {
    return sign_changes(sturm, a) - sign_changes(sturm, b);
  };

  // Gershgorin: every eigenvalue lies in [−B, B].
  BigRational B = 0;
  for (std::size_t i = 0; i < n; ++i) {
    BigRational row = 0;
    for (std::size_t j = 0; j < n; ++j) row += abs(M(i, j));
    B = std::max(B, row);
  }
  RationalInterval iv{-B - 1, B};
  const BigRational one(1);
  BigRational tol = one;
  mpq_div_2exp(tol.get_mpq_t(), one.get_mpq_t(), static_cast<mp_bitcnt_t>(bits));
  while (true) {
    BigRational mag = 0;
    if (sgn(iv.lower) >= 0) {
      mag = iv.lower;
    } else if (sgn(iv.upper) <= 0) {
      mag = -iv.upper;
    }
    if (iv.upper - iv.lower <= tol * std::max(one, mag)) break;
    const BigRational mid = iv.midpoint();
    if (roots_in(iv.lower, mid) >= 1) {
      iv.upper = mid;
    } else {
      iv.lower = mid;
    }
  }
  return iv;
}

}  // namespace hyperod
