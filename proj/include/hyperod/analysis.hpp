#pragma once

// Exact oracles for affine torus maps C_k(x) = Ax + kb (closed-form orbits,
// exact normal matrices, the sharp case-A limits and the case-B lower
// bound), certified eigenvalue isolation, and decay-rate fitting.

#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "hyperod/dynamics.hpp"
#include "hyperod/matrix.hpp"
#include "hyperod/normal_mode.hpp"

namespace hyperod {

using BigRational = mpq_class;
using RationalMatrix = Matrix<BigRational>;
using RationalVector = Vec<BigRational>;

/// Decimal rendering with `digits` significant digits.
[[nodiscard]] std::string to_decimal(const BigRational& q, int digits = 40);

[[nodiscard]] RationalMatrix to_rational(const IntMatrix& A);
/// Exact inverse by Gauss-Jordan elimination; throws SingularMatrix.
[[nodiscard]] RationalMatrix rational_inverse(const RationalMatrix& M);
/// A^n for any integer n (negative powers through the exact inverse).
[[nodiscard]] RationalMatrix rational_power(const RationalMatrix& A, long n);

// ------------------------------------------------------------ fitting

enum class FitModel { Exponential, Polynomial };

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double first = 0.0;  // abscissa window
  double last = 0.0;
  std::size_t n_points = 0;
};

/// Ordinary least squares of y on t (Exponential) or of y on log t
/// (Polynomial, slope = order α).
[[nodiscard]] FitResult fit_rate(const std::vector<std::pair<double, double>>& series, FitModel model);

// ------------------------------------------------------------ affine oracles

struct CatIterate {
  RationalVector point;   // lift of C_k^n(x), not wrapped
  RationalMatrix power;   // A^n
  RationalVector dk;      // (1 − A^n)w
};

/// w = (1 − A)^{-1} b.
[[nodiscard]] RationalVector fixed_offset(const RationalMatrix& A, const RationalVector& b);

[[nodiscard]] CatIterate cat_iterate_exact(const RationalMatrix& A, const RationalVector& b, const BigRational& k,
                                           const RationalVector& x, long n);

struct CaseALimit {
  double eigenvalue = 0.0;  // δ_i of A
  double exponent = 0.0;    // γ_i = log|δ_i|
  double limit = 0.0;       // lim λ^(i)_N / e^{−2|γ_i|N}
};

/// One entry per covariance eigenvalue index (λ^(1) <= … <= λ^(d)).
/// Requires A symmetric.
[[nodiscard]] std::vector<CaseALimit> cat_case_a_limits(const AffineTorusMap& map);

/// λ^(i)_N / e^{−2|γ_i|N} from the exact geometric sums Σ_{|n|<=N} δ_i^{2n},
/// with δ_i^{2N} factored out analytically.
[[nodiscard]] std::vector<double> cat_case_a_ratio(const AffineTorusMap& map, long N);

struct CaseBBound {
  RationalVector w;
  BigRational w_norm2;
  BigRational prefactor;     // (|w|^2 + 1) / |w|^2
  RationalVector v0;         // (w, 1)
  long certified_up_to = 0;  // G^n v0 = v0 verified exactly for 1 <= n <= this
  /// Lower bound on the largest case-B covariance eigenvalue.
  [[nodiscard]] double bound(long N) const;
  [[nodiscard]] double log_bound(long N) const;
};

[[nodiscard]] CaseBBound cat_case_b_bound(const AffineTorusMap& map, long certify_n = 20);

inline constexpr long kExactNormalGuard = 60;

/// Exact Σ_{|n|<=N} D_nᵀ D_n with the closed-form design blocks.
[[nodiscard]] RationalMatrix exact_normal_matrix(const RationalMatrix& A, const RationalVector& b,
                                                 const BigRational& k, long N, NormalMode mode);
[[nodiscard]] RationalMatrix exact_normal_matrix(const AffineTorusMap& map, const BigRational& k, long N,
                                                 NormalMode mode);

/// v^T M v exactly.
[[nodiscard]] BigRational rayleigh_numerator(const RationalMatrix& M, const RationalVector& v);

struct RationalInterval {
  BigRational lower;
  BigRational upper;
  [[nodiscard]] BigRational midpoint() const { return (lower + upper) / 2; }
  [[nodiscard]] bool contains(const BigRational& q) const { return lower <= q && q <= upper; }
};

/// Coefficients (constant term first) of det(λ·1 − M), by cofactor expansion.
[[nodiscard]] RationalVector characteristic_polynomial(const RationalMatrix& M);

/// Certified enclosure (lower, upper] of the smallest eigenvalue of a
/// symmetric rational matrix (dim <= 4), of width <= 2^-bits·max(1, |root|).
[[nodiscard]] RationalInterval exact_smallest_eigen_interval(const RationalMatrix& M, int bits = 64);

}  // namespace hyperod
