#pragma once

// Lyapunov spectra by the discrete QR method, the forward/backward symmetry
// check, and the spectrum of the extended map g(x, k) = (f_k(x), k).

#include <string>
#include <utility>
#include <vector>

#include "hyperod/analysis.hpp"
#include "hyperod/dynamics.hpp"

namespace hyperod {

enum class Direction { Forward, Backward };

[[nodiscard]] std::string to_string(Direction d);

struct SpectrumResult {
  std::vector<double> exponents;  // ascending, with multiplicity
  long n_steps = 0;
  Direction direction = Direction::Forward;
  /// Standard deviation of per-window estimates (ten windows), maximised
  /// over the exponents.
  double residual = 0.0;
  /// (1/n)·Σ log|det J| along the orbit; equals the exponent sum exactly up
  /// to rounding.
  double mean_log_det = 0.0;
};

struct SpectrumOptions {
  long n_steps = 100000;
  int reorth_every = 1;
  Direction direction = Direction::Forward;
};

[[nodiscard]] SpectrumResult lyapunov_qr(const ParametricMap& map, double k, const PhasePoint& x0,
                                         const SpectrumOptions& opt);

/// Forward spectrum and the spectrum of f^{-1} along the backward orbit.
[[nodiscard]] std::pair<SpectrumResult, SpectrumResult> forward_backward_check(const ParametricMap& map, double k,
                                                                               const PhasePoint& x0, long n_steps,
                                                                               int reorth_every = 1);

/// QR method on the (d+1)-dimensional Jacobian [[F, ∂f/∂k], [0, 1]].
[[nodiscard]] SpectrumResult extended_spectrum(const ParametricMap& map, double k, const PhasePoint& x0,
                                               long n_steps, int reorth_every = 1);

/// Finite-horizon indicator: least-squares slope of log σ_max(F^n) against n
/// for n = 1..n_steps.
[[nodiscard]] FitResult lyapunov_indicator(const ParametricMap& map, double k, const PhasePoint& x0, long n_steps,
                                           Direction direction = Direction::Forward);

struct MultiplicityGroup {
  double exponent = 0.0;
  int multiplicity = 0;
};

/// Groups exponents closer than `tol` (diagnostic only).
[[nodiscard]] std::vector<MultiplicityGroup> merge_multiplicities(const SpectrumResult& s, double tol = 1e-3);

}  // namespace hyperod
