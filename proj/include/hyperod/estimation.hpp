#pragma once

// Synthetic observations and least-squares orbit determination by
// Gauss-Newton differential corrections, estimating x (case A) or (x, k)
// (case B).

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperod/dynamics.hpp"
#include "hyperod/matrix.hpp"
#include "hyperod/normal_mode.hpp"
#include "hyperod/uncertainty.hpp"

namespace hyperod {

/// SplitMix64 stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

/// Standard normal deviates by Box-Muller over SplitMix64; both values of
/// each pair are used, cosine branch first.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct ObservationSeries {
  long N = 0;
  std::vector<Vec<double>> obs;  // index n + N for n = −N..N
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<Vec<double>> x_true;
  std::optional<double> k_true;

  [[nodiscard]] const Vec<double>& at(long n) const { return obs.at(static_cast<std::size_t>(n + N)); }
  [[nodiscard]] std::size_t epochs() const { return obs.size(); }
};

/// Wrapped orbit points f^n_k(x) for n = −N..N (index n + N).
[[nodiscard]] std::vector<Vec<double>> orbit(const ParametricMap& map, double k, const PhasePoint& x, long N);

/// Noise is drawn for n = −N..N in increasing order, coordinates in order.
[[nodiscard]] ObservationSeries synthesize(const ParametricMap& map, double k_true, const PhasePoint& x_true, long N,
                                           double noise_sigma, std::uint64_t seed);

/// ξ_n = obs_n − f^n_k(x), each periodic coordinate wrapped to (−P/2, P/2].
[[nodiscard]] std::vector<Vec<double>> residuals(const ParametricMap& map, double k, const PhasePoint& x,
                                                 const ObservationSeries& obs);

/// (1 / (2N+1)) Σ |ξ_n|².
[[nodiscard]] double target(const ParametricMap& map, double k, const PhasePoint& x, const ObservationSeries& obs);

struct NormalEquations {
  Matrix<double> C;  // Σ Dᵀ D
  Vec<double> rhs;   // Σ Dᵀ ξ
  double target = 0.0;
};

/// Normal matrix and right-hand side in double; D = F^n (case A) or
/// [F^n | ∂f^n/∂k] (case B).
[[nodiscard]] NormalEquations normal_equations(const ParametricMap& map, double k, const PhasePoint& x,
                                               const ObservationSeries& obs, NormalMode mode);

struct SolveConfig {
  int max_iter = 50;
  double tol_step = 1e-12;
  double divergence_norm = 1e3;
  /// Halve the step (up to 20 times) while the target increases.
  bool step_halving = false;
  /// Confidence scale of the reported ellipsoid.
  double sigma = 1.0;
};

struct FitSolution {
  Vec<double> center;  // x, or (x, k) in case B
  NormalMode mode = NormalMode::CaseA;
  bool converged = false;
  int iterations = 0;
  double rms = 0.0;
  ConfidenceEllipsoid ellipsoid;
  std::vector<double> step_history;
};

/// Gauss-Newton iteration Δ = C^{-1} Σ Dᵀξ. Throws Diverged and
/// SingularNormal.
[[nodiscard]] FitSolution solve(const ParametricMap& map, const ObservationSeries& obs, const PhasePoint& x_init,
                                double k_init, NormalMode mode, const SolveConfig& cfg = {});

/// Normal matrix at (x, k) accumulated in double-double.
[[nodiscard]] SymmetricAccumulator accumulate_normal(const ParametricMap& map, double k, const PhasePoint& x, long N,
                                                     NormalMode mode);

}  // namespace hyperod
