#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "hyperod/estimation.hpp"
#include "oracles.hpp"

using namespace hyperod;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const PhasePoint kTruth{{3.0, 0.0}};

Vec<double> torus_error(const ParametricMap& map, const Vec<double>& a, const Vec<double>& b) {
  Vec<double> d(map.dim());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return map.topology().wrap_nearest(d);
}

}  // namespace

TEST_CASE("SplitMix64 reference stream") {
  SplitMix64 r(0);
  CHECK(r.next() == 0xe220a8397b1dcdafULL);
  CHECK(r.next() == 0x6e789e6aa1b965f4ULL);
  SplitMix64 a(42);
  SplitMix64 b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  SplitMix64 c(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = c.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}

TEST_CASE("Gaussian stream moments") {
  GaussianStream g(42);
  const int n = 100000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = g.next();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("synthesized noise has the requested variance") {
  StandardMap map;
  const double sigma = 1e-3;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 25000, sigma, 7);
  const auto clean = orbit(map, 0.5, kTruth, 25000);
  double s2 = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    for (double e : torus_error(map, obs.obs[i], clean[i])) {
      s2 += e * e;
      ++count;
    }
  }
  CHECK(count > 100000);
  CHECK(std::abs(s2 / count / (sigma * sigma) - 1.0) < 0.02);
}

TEST_CASE("synthesize contracts") {
  StandardMap map;
  const ObservationSeries clean = synthesize(map, 0.5, kTruth, 12, 0.0, 1);
  CHECK(clean.epochs() == 25);
  CHECK(clean.obs == orbit(map, 0.5, kTruth, 12));
  CHECK(clean.at(0) == make_point(map, kTruth.coords).coords);
  CHECK(clean.at(1) == eval(map, 0.5, kTruth).coords);
  CHECK(clean.at(-1) == inverse_eval(map, 0.5, kTruth).coords);

  const ObservationSeries a = synthesize(map, 0.5, kTruth, 30, 0.1, 99);
  const ObservationSeries b = synthesize(map, 0.5, kTruth, 30, 0.1, 99);
  const ObservationSeries c = synthesize(map, 0.5, kTruth, 30, 0.1, 100);
  CHECK(a.obs == b.obs);
  CHECK(a.obs != c.obs);
  for (const auto& p : a.obs) CHECK(map.topology().contains(p));
  CHECK_THROWS_AS((void)synthesize(map, 0.5, kTruth, 3, -1.0, 1), Error);
  CHECK_THROWS_AS((void)synthesize(map, 0.5, kTruth, 3, NAN, 1), Error);
}

TEST_CASE("residuals and target") {
  StandardMap map;
  ObservationSeries obs = synthesize(map, 0.5, kTruth, 5, 0.0, 1);
  for (const auto& r : residuals(map, 0.5, kTruth, obs)) CHECK(max_abs(r) == 0.0);
  CHECK(target(map, 0.5, kTruth, obs) == 0.0);

  ObservationSeries shifted = obs;
  for (auto& p : shifted.obs) p[0] += kTwoPi;
  const auto r0 = residuals(map, 0.5, PhasePoint{{3.001, 0.0}}, obs);
  const auto r1 = residuals(map, 0.5, PhasePoint{{3.001, 0.0}}, shifted);
  for (std::size_t i = 0; i < r0.size(); ++i) CHECK(oracle::max_abs_diff(r0[i], r1[i]) < 1e-12);

  ObservationSeries unit = obs;
  for (auto& p : unit.obs) p = map.topology().wrap({p[0] + 1.0, p[1]});
  CHECK(target(map, 0.5, kTruth, unit) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(target(map, 0.5, kTruth, obs) <= target(map, 0.5, PhasePoint{{3.1, 0.1}}, obs));

  const ObservationSeries noisy = synthesize(map, 0.5, kTruth, 5, 1e-3, 42);
  const double rms = std::sqrt(target(map, 0.5, kTruth, noisy) / 2.0);  // per coordinate
  CHECK(rms > 0.5e-3);
  CHECK(rms < 2e-3);
}

TEST_CASE("normal-equation right-hand side is the scaled gradient") {
  StandardMap map;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 5, 1e-3, 3);
  const PhasePoint x{{3.0005, 6.2828}};
  const double k = 0.5003;
  const double h = 1e-6;
  for (NormalMode mode : {NormalMode::CaseA, NormalMode::CaseB}) {
    const NormalEquations ne = normal_equations(map, k, x, obs, mode);
    const std::size_t p = mode == NormalMode::CaseA ? 2 : 3;
    for (std::size_t j = 0; j < p; ++j) {
      PhasePoint xp = x;
      PhasePoint xm = x;
      double kp = k;
      double km = k;
      if (j < 2) {
        xp.coords[j] += h;
        xm.coords[j] -= h;
      } else {
        kp += h;
        km -= h;
      }
      const double grad = (target(map, kp, xp, obs) - target(map, km, xm, obs)) / (2 * h);
      const double want = -(2.0 * 5 + 1) / 2.0 * grad;
      CHECK(std::abs(ne.rhs[j] - want) <= 1e-4 * std::abs(want));
    }
  }
}

TEST_CASE("target is quadratic in small displacements for noiseless data") {
  StandardMap map;
  const long N = 10;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, N, 0.0, 1);
  const NormalEquations ne = normal_equations(map, 0.5, kTruth, obs, NormalMode::CaseA);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    Vec<double> v = {g(rng), g(rng)};
    const double nv = std::sqrt(dot(v, v));
    for (auto& c : v) c *= 1e-5 / nv;
    const double q = target(map, 0.5, PhasePoint{{3.0 + v[0], v[1]}}, obs);
    const double model = dot(v, ne.C * v) / (2.0 * N + 1.0);
    CHECK(std::abs(q - model) <= 1e-2 * model);
  }
}

TEST_CASE("noiseless start at the truth converges in one iteration") {
  StandardMap map;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 20, 0.0, 42);
  const FitSolution s = solve(map, obs, kTruth, 0.5, NormalMode::CaseA);
  CHECK(s.converged);
  CHECK(s.iterations == 1);
  CHECK(s.step_history.at(0) == 0.0);
  CHECK(s.rms == 0.0);
  const FitSolution b = solve(map, obs, kTruth, 0.5, NormalMode::CaseB);
  CHECK(b.iterations == 1);
  CHECK(b.center.size() == 3);
  CHECK(b.ellipsoid.dim() == 3);
}

TEST_CASE("seed 42 recovery") {
  StandardMap map;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 20, 1e-8, 42);
  const FitSolution s = solve(map, obs, PhasePoint{{3.001, 0.001}}, 0.5, NormalMode::CaseA);
  CHECK(s.converged);
  CHECK(s.step_history.back() <= 1e-12);
  CHECK(std::isfinite(s.rms));
  const Vec<double> err = torus_error(map, s.center, kTruth.coords);
  CHECK(std::sqrt(dot(err, err)) < 1e-6);
  CHECK(s.ellipsoid.log_semi_axes.size() == 2);

  const FitSolution b = solve(map, obs, PhasePoint{{3.001, 0.001}}, 0.5001, NormalMode::CaseB);
  CHECK(b.converged);
  CHECK(std::abs(b.center[2] - 0.5) < 1e-6);
}

TEST_CASE("solver failure modes") {
  StandardMap map;
  const ObservationSeries zero = synthesize(map, 0.5, kTruth, 0, 1e-8, 42);
  try {
    (void)solve(map, zero, kTruth, 0.5, NormalMode::CaseB);
    FAIL("expected SingularNormal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularNormal);
  }
  CHECK(solve(map, zero, kTruth, 0.5, NormalMode::CaseA).converged);

  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 20, 1e-8, 42);
  SolveConfig tight;
  tight.divergence_norm = 1e-9;
  try {
    (void)solve(map, obs, PhasePoint{{3.1, 0.1}}, 0.5, NormalMode::CaseA, tight);
    FAIL("expected Diverged");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Diverged);
  }
  CHECK_THROWS_AS((void)solve(map, obs, kTruth, 0.5, NormalMode::AuxiliaryG), Error);
  SolveConfig bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS((void)solve(map, obs, kTruth, 0.5, NormalMode::CaseA, bad), Error);
}

TEST_CASE("step halving still converges from a rough start") {
  StandardMap map;
  const ObservationSeries obs = synthesize(map, 0.5, kTruth, 8, 1e-8, 5);
  SolveConfig cfg;
  cfg.step_halving = true;
  const FitSolution s = solve(map, obs, PhasePoint{{3.02, 6.27}}, 0.5, NormalMode::CaseA, cfg);
  CHECK(s.converged);
  const Vec<double> err = torus_error(map, s.center, kTruth.coords);
  CHECK(std::sqrt(dot(err, err)) < 1e-6);
}

TEST_CASE("truth falls inside the three-sigma ellipsoid in most seeded runs") {
  StandardMap map;
  const double noise = 1e-6;
  SolveConfig cfg;
  cfg.sigma = 3.0 * noise;
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const ObservationSeries obs = synthesize(map, 0.5, kTruth, 20, noise, seed);
    const FitSolution s = solve(map, obs, kTruth, 0.5, NormalMode::CaseA, cfg);
    REQUIRE(s.converged);
    if (s.ellipsoid.contains_displacement(torus_error(map, kTruth.coords, s.center))) ++inside;
  }
  CHECK(inside >= 45);
}
