#include "hyperod/estimation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>

#include "hyperod/error.hpp"
#include "hyperod/tangent.hpp"

namespace hyperod {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - rng_.uniform();  // (0, 1]
  const double u2 = rng_.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::vector<Vec<double>> orbit(const ParametricMap& map, double k, const PhasePoint& x, long N) {
  if (N < 0) {
    throw Error(ErrorCode::InvalidArgument, "orbit: N must be non-negative");
  }
  const PhasePoint x0 = make_point(map, x.coords);
  std::vector<Vec<double>> out(static_cast<std::size_t>(2 * N + 1));
  out[static_cast<std::size_t>(N)] = x0.coords;
  PhasePoint fwd = x0;
  PhasePoint bwd = x0;
  for (long n = 1; n <= N; ++n) {
    fwd = eval(map, k, fwd);
    bwd = inverse_eval(map, k, bwd);
    out[static_cast<std::size_t>(N + n)] = fwd.coords;
    out[static_cast<std::size_t>(N - n)] = bwd.coords;
  }
  return out;
}

ObservationSeries synthesize(const ParametricMap& map, double k_true, const PhasePoint& x_true, long N,
                             double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "synthesize: noise_sigma must be finite and non-negative");
  }
  ObservationSeries s;
  s.N = N;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  s.x_true = make_point(map, x_true.coords).coords;
  s.k_true = k_true;
  s.obs = orbit(map, k_true, x_true, N);
  if (noise_sigma > 0.0) {
    GaussianStream g(seed);
    for (auto& p : s.obs) {
      for (auto& c : p) c += noise_sigma * g.next();
      p = map.topology().wrap(p);
    }
  }
  return s;
}

std::vector<Vec<double>> residuals(const ParametricMap& map, double k, const PhasePoint& x,
                                   const ObservationSeries& obs) {
  const auto model = orbit(map, k, x, obs.N);
  std::vector<Vec<double>> out(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const Vec<double>& o = obs.obs.at(i);
    if (o.size() != map.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "residuals: observation has the wrong dimension");
    }
    Vec<double> diff(o.size());
    for (std::size_t j = 0; j < o.size(); ++j) diff[j] = o[j] - model[i][j];
    out[i] = map.topology().wrap_nearest(std::move(diff));
  }
  return out;
}

double target(const ParametricMap& map, double k, const PhasePoint& x, const ObservationSeries& obs) {
  const auto xi = residuals(map, k, x, obs);
  double s = 0.0;
  for (const auto& v : xi) s += dot(v, v);
  return s / static_cast<double>(xi.size());
}

NormalEquations normal_equations(const ParametricMap& map, double k, const PhasePoint& x,
                                 const ObservationSeries& obs, NormalMode mode) {
  if (mode == NormalMode::AuxiliaryG) {
    throw Error(ErrorCode::InvalidArgument, "normal_equations: the extended mode is not an estimation problem");
  }
  const std::size_t d = map.dim();
  const std::size_t p = mode == NormalMode::CaseA ? d : d + 1;
  NormalEquations ne;
  ne.C = Matrix<double>(p, p, 0.0);
  ne.rhs = Vec<double>(p, 0.0);
  const auto add = [&](const TangentState& s) {
    const Matrix<double> F = s.true_F();
    const Vec<double> dk = s.true_dk();
    Vec<double> diff(d);
    const Vec<double>& o = obs.at(s.n);
    for (std::size_t j = 0; j < d; ++j) diff[j] = o[j] - s.x.coords[j];
    const Vec<double> xi = map.topology().wrap_nearest(std::move(diff));
    Matrix<double> D(d, p, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) D(i, j) = F(i, j);
      if (p > d) D(i, d) = dk[i];
    }
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        for (std::size_t i = 0; i < d; ++i) ne.C(a, b) += D(i, a) * D(i, b);
      }
      for (std::size_t i = 0; i < d; ++i) ne.rhs[a] += D(i, a) * xi[i];
    }
    ne.target += dot(xi, xi);
  };
  if (obs.N == 0) {
    add(TangentState::origin(make_point(map, x.coords)));
  } else {
    propagate<double>(map, k, x, obs.N, add);
  }
  ne.target /= static_cast<double>(2 * obs.N + 1);
  return ne;
}

namespace {

/// Cholesky solve of C Δ = r; throws SingularNormal on a non-positive or
/// negligible pivot.
Vec<double> cholesky_solve(const Matrix<double>& C, const Vec<double>& r) {
  const std::size_t n = C.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(C(i, i)));
  Matrix<double> L(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = C(j, j);
    for (std::size_t m = 0; m < j; ++m) s -= L(j, m) * L(j, m);
    if (!(s > 1e-15 * max_diag * static_cast<double>(n)) || !std::isfinite(s)) {
      throw Error(ErrorCode::SingularNormal, "solve: normal matrix is singular (rank-deficient design)");
    }
    L(j, j) = std::sqrt(s);
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = C(i, j);
      for (std::size_t m = 0; m < j; ++m) t -= L(i, m) * L(j, m);
      L(i, j) = t / L(j, j);
    }
  }
  Vec<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = r[i];
    for (std::size_t m = 0; m < i; ++m) t -= L(i, m) * y[m];
    y[i] = t / L(i, i);
  }
  Vec<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double t = y[i];
    for (std::size_t m = i + 1; m < n; ++m) t -= L(m, i) * x[m];
    x[i] = t / L(i, i);
  }
  return x;
}

}  // namespace

SymmetricAccumulator accumulate_normal(const ParametricMap& map, double k, const PhasePoint& x, long N,
                                       NormalMode mode) {
  SymmetricAccumulator acc(map.dim(), mode);
  if (N == 0) {
    const auto s = TangentStateDD::origin(make_point(map, x.coords));
    acc.accumulate_shell(s, s);
    return acc;
  }
  TangentStateDD plus;
  propagate<DoubleDouble>(map, k, x, N, [&](const TangentStateDD& s) {
    if (s.n == 0) {
      acc.accumulate_shell(s, s);
    } else if (s.n > 0) {
      plus = s;
    } else {
      acc.accumulate_shell(plus, s);
    }
  });
  return acc;
}

FitSolution solve(const ParametricMap& map, const ObservationSeries& obs, const PhasePoint& x_init, double k_init,
                  NormalMode mode, const SolveConfig& cfg) {
  if (mode == NormalMode::AuxiliaryG) {
    throw Error(ErrorCode::InvalidArgument, "solve: case must be a or b");
  }
  if (cfg.max_iter < 1 || !(cfg.tol_step > 0.0) || !(cfg.divergence_norm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solve: invalid iteration settings");
  }
  if (obs.epochs() != static_cast<std::size_t>(2 * obs.N + 1)) {
    throw Error(ErrorCode::InvalidArgument, "solve: observation series must hold 2N+1 epochs");
  }
  if (mode == NormalMode::CaseB && obs.N == 0) {
    throw Error(ErrorCode::SingularNormal, "solve: the parameter is unobservable with N = 0");
  }
  const std::size_t d = map.dim();
  PhasePoint x = make_point(map, x_init.coords);
  double k = k_init;
  FitSolution sol;
  sol.mode = mode;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const NormalEquations ne = normal_equations(map, k, x, obs, mode);
    if (!std::isfinite(ne.target)) {
      throw Error(ErrorCode::Diverged, "solve: target is not finite");
    }
    Vec<double> delta = cholesky_solve(ne.C, ne.rhs);
    double norm = std::sqrt(dot(delta, delta));
    if (!std::isfinite(norm) || norm > cfg.divergence_norm) {
      throw Error(ErrorCode::Diverged, "solve: correction norm exceeds the divergence threshold");
    }
    const auto trial = [&](double scale) {
      Vec<double> c = x.coords;
      for (std::size_t i = 0; i < d; ++i) c[i] += scale * delta[i];
      return std::make_pair(make_point(map, c), mode == NormalMode::CaseB ? k + scale * delta[d] : k);
    };
    auto [x_new, k_new] = trial(1.0);
    if (cfg.step_halving && norm > cfg.tol_step) {
      double scale = 1.0;
      for (int h = 0; h < 20 && target(map, k_new, x_new, obs) > ne.target; ++h) {
        scale *= 0.5;
        std::tie(x_new, k_new) = trial(scale);
      }
      norm *= scale;
    }
    x = x_new;
    k = k_new;
    sol.iterations = it;
    sol.step_history.push_back(norm);
    if (norm <= cfg.tol_step) {
      sol.converged = true;
      break;
    }
  }
  const double t = target(map, k, x, obs);
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::Diverged, "solve: target is not finite at the final iterate");
  }
  sol.rms = std::sqrt(t);
  sol.center = x.coords;
  if (mode == NormalMode::CaseB) sol.center.push_back(k);
  try {
    const auto cov = covariance_eigen(accumulate_normal(map, k, x, obs.N, mode));
    sol.ellipsoid = ellipsoid(cov, sol.center, cfg.sigma);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) {
      throw Error(ErrorCode::SingularNormal, std::string("solve: ") + e.what());
    }
    throw;
  }
  return sol;
}

}  // namespace hyperod
