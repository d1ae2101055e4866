#pragma once

// Normal matrices C_N (initial conditions), C̃_N (initial conditions plus
// parameter) and C^g_N (extended map) in double-double with a global binary
// scale, their eigenstructure, covariance eigenvalues and confidence
// ellipsoids.
//
// Besides the entries of the normal matrix the accumulator keeps a
// triangular factor R with RᵀR = C, updated row by row with Givens
// rotations. Eigenvalues are read off R by one-sided Jacobi, which resolves
// small eigenvalues far below ε·|C|; the plain two-sided route on the
// entries is kept as a cross-check.

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "hyperod/double_double.hpp"
#include "hyperod/dynamics.hpp"
#include "hyperod/error.hpp"
#include "hyperod/matrix.hpp"
#include "hyperod/normal_mode.hpp"
#include "hyperod/tangent.hpp"

namespace hyperod {

/// Above this spread (natural log) between the largest and a smaller
/// normal-matrix eigenvalue, the smaller one is flagged untrusted.
inline const double kTrustLogSpread = 62.0 * std::numbers::ln10;
/// covariance_eigen refuses matrices whose spread exceeds this.
inline const double kRankDeficientLogSpread = 60.0 * std::numbers::ln10;
/// Shell terms smaller than this (natural log, relative to the
/// accumulator) are dropped.
inline const double kDropLogGap = 400.0 * std::numbers::ln10;

/// Design block D with true value 2^exp · D.
struct ScaledDesign {
  Matrix<DoubleDouble> D;
  int exp = 0;
};

template <class Real>
ScaledDesign design_block(const BasicTangentState<Real>& s, NormalMode mode);

class SymmetricAccumulator {
 public:
  SymmetricAccumulator(std::size_t d, NormalMode mode);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t state_dim() const { return d_; }
  [[nodiscard]] NormalMode mode() const { return mode_; }
  /// Completed shells minus one: −1 when empty, 0 after the n = 0 shell.
  [[nodiscard]] long shells() const { return N_; }
  [[nodiscard]] bool empty() const { return N_ < 0; }
  /// Natural log of the common scale: true matrix = e^{logscale}·M.
  [[nodiscard]] double logscale() const { return M_exp_ * std::numbers::ln2; }
  [[nodiscard]] int exponent() const { return M_exp_; }
  [[nodiscard]] long truncated() const { return truncated_; }

  /// Scaled entry M(i, j) (upper triangle mirrored).
  [[nodiscard]] const DoubleDouble& scaled(std::size_t i, std::size_t j) const;
  [[nodiscard]] Matrix<DoubleDouble> scaled_matrix() const;
  /// e^{logscale}·M; may overflow for very long orbits.
  [[nodiscard]] Matrix<DoubleDouble> true_matrix() const;

  /// Triangular factor with true value 2^{r_exponent}·R.
  [[nodiscard]] const Matrix<DoubleDouble>& r_factor() const { return R_; }
  [[nodiscard]] int r_exponent() const { return R_exp_; }

  /// Adds the shell {+n, −n} with n = shells() + 1. The first shell is the
  /// n = 0 state, passed as both arguments and counted once.
  template <class Real>
  void accumulate_shell(const BasicTangentState<Real>& s_plus, const BasicTangentState<Real>& s_minus) {
    const long n = N_ + 1;
    if (n == 0) {
      if (s_plus.n != 0 || s_minus.n != 0) {
        throw Error(ErrorCode::InvalidArgument, "accumulate_shell: the first shell is n = 0");
      }
      add_shell({design_block(s_plus, mode_)});
    } else {
      if (s_plus.n != n || s_minus.n != -n) {
        throw Error(ErrorCode::InvalidArgument,
                    "accumulate_shell: expected states for n = ±" + std::to_string(n));
      }
      add_shell({design_block(s_plus, mode_), design_block(s_minus, mode_)});
    }
  }

  void add_shell(const std::vector<ScaledDesign>& blocks);

 private:
  [[nodiscard]] std::size_t packed(std::size_t i, std::size_t j) const;
  void add_row(Vec<DoubleDouble> row, int exp);

  std::size_t d_;
  std::size_t dim_;
  NormalMode mode_;
  long N_ = -1;
  std::vector<DoubleDouble> M_;  // packed upper triangle, row by row
  int M_exp_ = 0;
  Matrix<DoubleDouble> R_;
  int R_exp_ = 0;
  bool R_empty_ = true;
  long truncated_ = 0;
};

struct EigenReport {
  std::vector<double> log_eigenvalues;  // ascending; −inf for a zero eigenvalue
  /// Full-precision values: eigenvalue i = mantissas[i]·2^exponent.
  std::vector<DoubleDouble> mantissas;
  int exponent = 0;
  Matrix<DoubleDouble> eigenvectors;    // column i pairs with log_eigenvalues[i]
  /// log of the largest over the smallest eigenvalue.
  double log_condition = 0.0;
  int sweeps = 0;

  [[nodiscard]] std::size_t dim() const { return log_eigenvalues.size(); }
};

/// Eigenvalues of the true normal matrix from the triangular factor.
[[nodiscard]] EigenReport eigen(const SymmetricAccumulator& acc);
/// Two-sided cyclic Jacobi on the scaled entries (cross-check route);
/// throws NegativeEigenvalue below −1e-28 relative.
[[nodiscard]] EigenReport eigen_of_entries(const SymmetricAccumulator& acc);
/// Two-sided Jacobi on an explicit symmetric matrix with true value
/// 2^exp·M.
[[nodiscard]] EigenReport eigen_of_matrix(const Matrix<DoubleDouble>& M, int exp = 0);

/// Eigen report of the covariance Γ = C^{-1}: negated, reversed logs. No
/// inversion is formed.
[[nodiscard]] EigenReport covariance_eigen(const SymmetricAccumulator& acc);
[[nodiscard]] EigenReport covariance_from(const EigenReport& normal);

struct ConfidenceEllipsoid {
  Vec<double> center;
  double sigma = 1.0;
  std::vector<double> log_semi_axes;  // ascending
  Matrix<DoubleDouble> directions;    // column i is the axis of log_semi_axes[i]
  std::vector<double> log_marginals;  // per coordinate

  [[nodiscard]] std::size_t dim() const { return center.size(); }
  /// (p − c)ᵀ Γ^{-1} (p − c) / σ² for a displacement p − c.
  [[nodiscard]] double normalized_distance2(const Vec<double>& displacement) const;
  [[nodiscard]] bool contains_displacement(const Vec<double>& displacement) const {
    return normalized_distance2(displacement) <= 1.0;
  }
};

[[nodiscard]] ConfidenceEllipsoid ellipsoid(const EigenReport& covariance, const Vec<double>& center,
                                            double sigma = 1.0);

struct DecayRow {
  long N = 0;
  std::vector<double> log_lambda;  // covariance eigenvalues, ascending
  std::vector<bool> trusted;       // per entry of log_lambda
  double log_delta_min = 0.0;      // smallest normal-matrix eigenvalue
  double log_condition = 0.0;
  std::vector<double> log_marginals;  // σ = 1
};

struct DecaySeries {
  NormalMode mode = NormalMode::CaseA;
  long N_max = 0;
  long stride = 1;
  std::vector<DecayRow> rows;
  long truncated = 0;
};

/// One two-sided propagation in double-double; a row at every stride-th
/// shell and at N_max (case B and the extended mode start at N = 1).
[[nodiscard]] DecaySeries decay_series(const ParametricMap& map, double k, const PhasePoint& x0, long N_max,
                                       NormalMode mode, long stride = 1);

/// Columns N, mode, i, log10_lambda_i, trusted.
void write_decay_csv(std::ostream& os, const DecaySeries& series);

}  // namespace hyperod
