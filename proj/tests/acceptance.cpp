// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hyperod/analysis.hpp"
#include "hyperod/estimation.hpp"
#include "hyperod/jacobi.hpp"
#include "hyperod/spectra.hpp"
#include "hyperod/uncertainty.hpp"
#include "oracles.hpp"

using namespace hyperod;

namespace {

using Clock = std::chrono::steady_clock;
using DD = DoubleDouble;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const PhasePoint kStandardStart{{3.0, 0.0}};
const PhasePoint kCatStart{{0.1, 0.2}};

const DecayRow* last_trusted(const DecaySeries& s) {
  for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it) {
    if (std::all_of(it->trusted.begin(), it->trusted.end(), [](bool b) { return b; })) return &*it;
  }
  return nullptr;
}

// 1. sharp case-A limits for the cat map by N = 15
Outcome cat_case_a_sharp_limit() {
  const auto t0 = Clock::now();
  auto cat = oracle::cat_map({1, 0});
  const double big = (3.0 + std::sqrt(5.0)) / 2.0;
  const double gamma = std::log(big);
  const double limit = 1.0 - 1.0 / (big * big);
  const DecaySeries s = decay_series(*cat, 0.0, kCatStart, 15, NormalMode::CaseA);
  const DecayRow& row = s.rows.back();
  const std::vector<double> exact = cat_case_a_ratio(*cat, 15);
  double to_limit = 0.0;
  double to_exact = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double ratio = std::exp(row.log_lambda[i] + 2.0 * gamma * 15.0);
    to_limit = std::max(to_limit, std::abs(ratio - 0.8541020));
    to_exact = std::max(to_exact, std::abs(ratio - exact[i]));
  }
  const double dt = seconds_since(t0);
  const bool ok = row.N == 15 && std::abs(limit - 0.8541020) < 5e-8 && std::abs(gamma - 0.9624237) < 5e-8 &&
                  to_limit < 1e-6 && to_exact < 1e-8 && dt < 1.0;
  return {ok, "|ratio-limit|=" + fmt("%.2e", to_limit) + " |float-exact|=" + fmt("%.2e", to_exact) +
                  " t=" + fmt("%.3fs", dt)};
}

// 2. case-B lower bound 2/(2N+1), floating and certified
Outcome cat_case_b_lower_bound() {
  const auto t0 = Clock::now();
  auto cat = oracle::cat_map({1, 0});
  const DecaySeries s = decay_series(*cat, 0.0, kCatStart, 80, NormalMode::CaseB);
  bool ok = true;
  long largest = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const DecayRow& r : s.rows) {
    if (!r.trusted.back()) continue;
    const double margin = r.log_lambda.back() - std::log(2.0 / (2.0 * r.N + 1.0));
    worst = std::min(worst, margin);
    ok = ok && margin >= 0.0;
    largest = r.N;
  }
  const CaseBBound bound = cat_case_b_bound(*cat);
  ok = ok && bound.w_norm2 == 1 && bound.prefactor == 2 && bound.certified_up_to >= 20;
  for (long N = 1; N <= 20; ++N) {
    const RationalMatrix Cb = exact_normal_matrix(*cat, 0, N, NormalMode::CaseB);
    ok = ok && rayleigh_numerator(Cb, bound.v0) == 2 * N + 1;
    ok = ok && exact_smallest_eigen_interval(Cb).upper <= mpq_class(2 * N + 1, 2);
  }
  const double dt = seconds_since(t0);
  ok = ok && largest >= 35 && dt < 10.0;
  return {ok, "trusted up to N=" + std::to_string(largest) + " worst log margin=" + fmt("%.4f", worst) +
                  " certified N=1..20 t=" + fmt("%.3fs", dt)};
}

// 3. auxiliary identity, exactly and in double-double
Outcome auxiliary_identity() {
  auto cat = oracle::cat_map({1, 0});
  bool exact_ok = true;
  for (long N = 0; N <= 20; ++N) {
    RationalMatrix want = exact_normal_matrix(*cat, mpq_class(3, 10), N, NormalMode::CaseB);
    want(2, 2) += 2 * N + 1;
    exact_ok = exact_ok && exact_normal_matrix(*cat, mpq_class(3, 10), N, NormalMode::AuxiliaryG) == want;
  }
  StandardMap standard;
  double worst = 0.0;
  const std::vector<std::pair<const ParametricMap*, PhasePoint>> cases = {{&standard, kStandardStart},
                                                                          {cat.get(), kCatStart}};
  for (const auto& [map, x] : cases) {
    SymmetricAccumulator b(2, NormalMode::CaseB);
    SymmetricAccumulator g(2, NormalMode::AuxiliaryG);
    TangentStateDD plus;
    long N = 0;
    propagate<DD>(*map, 0.5, x, 50, [&](const TangentStateDD& s) {
      if (s.n > 0) {
        plus = s;
        return;
      }
      const TangentStateDD& p = s.n == 0 ? s : plus;
      b.accumulate_shell(p, s);
      g.accumulate_shell(p, s);
      N = -s.n;
      const Matrix<DD> Cb = b.true_matrix();
      const Matrix<DD> Cg = g.true_matrix();
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const DD want = Cb(i, j) + DD(i == 2 && j == 2 ? 2.0 * N + 1.0 : 0.0);
          const double scale = std::max(std::abs(to_double(want)), 1e-300);
          worst = std::max(worst, std::abs(to_double(Cg(i, j) - want)) / scale);
        }
      }
    });
  }
  return {exact_ok && worst < 1e-25,
          std::string("exact N<=20 ") + (exact_ok ? "equal" : "differ") + ", dd worst rel=" + fmt("%.2e", worst)};
}

// 4. extended spectrum is the plain spectrum plus zero
Outcome extended_spectrum_zero() {
  StandardMap standard;
  const SpectrumResult plain = lyapunov_qr(standard, 0.5, kStandardStart, {100000, 1, Direction::Forward});
  const SpectrumResult ext = extended_spectrum(standard, 0.5, kStandardStart, 100000);
  std::vector<double> want = plain.exponents;
  want.push_back(0.0);
  std::sort(want.begin(), want.end());
  double worst_std = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst_std = std::max(worst_std, std::abs(ext.exponents[i] - want[i]));
  auto cat = oracle::cat_map({1, 0});
  const SpectrumResult ce = extended_spectrum(*cat, 0.3, kCatStart, 100000);
  const double g = 0.962424;
  const double worst_cat = std::max({std::abs(ce.exponents[0] + g), std::abs(ce.exponents[1]),
                                     std::abs(ce.exponents[2] - g)});
  return {worst_std < 1e-2 && worst_cat < 1e-3,
          "standard max dev=" + fmt("%.2e", worst_std) + " cat max dev=" + fmt("%.2e", worst_cat)};
}

// 5. standard-map reference numbers
Outcome standard_map_reproduction() {
  const auto t0 = Clock::now();
  StandardMap map;
  const FitResult ind = lyapunov_indicator(map, 0.5, kStandardStart, 300);
  const DecaySeries a = decay_series(map, 0.5, kStandardStart, 400, NormalMode::CaseA);
  const DecaySeries b = decay_series(map, 0.5, kStandardStart, 400, NormalMode::CaseB);
  bool ok = std::abs(ind.slope - 0.086) <= 0.01;
  std::string slopes;
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const DecayRow& r : a.rows) {
      if (r.N >= 50 && r.trusted[i]) pts.emplace_back(r.N, 0.5 * r.log_lambda[i]);
    }
    const double slope = fit_rate(pts, FitModel::Exponential).slope;
    ok = ok && slope >= -0.10 && slope <= -0.07;
    slopes += fmt("%.4f ", slope);
  }
  std::vector<std::pair<double, double>> pts;
  for (const DecayRow& r : b.rows) {
    if (r.N >= 50 && r.trusted.back()) pts.emplace_back(r.N, r.log_lambda.back());
  }
  const double rate_b = fit_rate(pts, FitModel::Exponential).slope;
  ok = ok && std::abs(rate_b) < 0.02;
  const double dt = seconds_since(t0);
  ok = ok && dt < 60.0;
  return {ok, "indicator=" + fmt("%.4f", ind.slope) + " half-log slopes=" + slopes + "case-B rate=" +
                  fmt("%.4f", rate_b) + " t=" + fmt("%.2fs", dt)};
}

// 6. exponential sandwich at the largest trusted N
Outcome case_a_sandwich() {
  StandardMap standard;
  auto cat = oracle::cat_map({1, 0});
  struct Case {
    const ParametricMap* map;
    PhasePoint x;
    double k;
    long N;
    long steps;
  };
  const std::vector<Case> cases = {{&standard, kStandardStart, 0.5, 400, 100000}, {cat.get(), kCatStart, 0.0, 60, 1000000}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const auto [f, b] = forward_backward_check(*c.map, c.k, c.x, c.steps);
    const double g_hi = std::max(f.exponents.back(), b.exponents.back());
    const double g_lo = std::min(f.exponents.back(), b.exponents.back());
    const DecaySeries s = decay_series(*c.map, c.k, c.x, c.N, NormalMode::CaseA);
    const DecayRow* r = last_trusted(s);
    if (!r) return {false, "no trusted row for " + c.map->name()};
    for (double l : r->log_lambda) {
      const double v = l / static_cast<double>(r->N);
      ok = ok && v >= -2.0 * g_hi - 0.02 && v <= -2.0 * g_lo + 0.02;
      detail += c.map->name() + fmt(" %.4f", v) + " in [" + fmt("%.4f", -2 * g_hi - 0.02) + "," +
                fmt("%.4f", -2 * g_lo + 0.02) + "] N=" + std::to_string(r->N) + "; ";
    }
  }
  return {ok, detail};
}

// 7. smallest case-B normal eigenvalue non-decreasing
Outcome case_b_monotonicity() {
  StandardMap standard;
  auto cat = oracle::cat_map({1, 0});
  bool ok = true;
  long rows = 0;
  for (const auto& [map, x] : std::vector<std::pair<const ParametricMap*, PhasePoint>>{{&standard, kStandardStart},
                                                                                      {cat.get(), kCatStart}}) {
    const DecaySeries s = decay_series(*map, 0.5, x, map == &standard ? 400 : 60, NormalMode::CaseB);
    double prev = -std::numeric_limits<double>::infinity();
    for (const DecayRow& r : s.rows) {
      if (!r.trusted.back()) continue;
      ok = ok && r.log_delta_min >= prev;
      prev = r.log_delta_min;
      ++rows;
    }
  }
  mpq_class prev = 0;
  for (long N = 1; N <= 20; ++N) {
    const auto iv = exact_smallest_eigen_interval(exact_normal_matrix(*cat, mpq_class(1, 2), N, NormalMode::CaseB));
    ok = ok && iv.midpoint() >= prev;
    prev = iv.midpoint();
  }
  return {ok, "floating rows checked=" + std::to_string(rows) + ", exact N=1..20"};
}

// 8. finite differences, Jacobi against closed forms, inverse round trip
Outcome oracle_suite() {
  StandardMap standard;
  auto cat = oracle::cat_map({1, 0});
  double fd_worst = 0.0;
  for (const auto& [map, x] : std::vector<std::pair<const ParametricMap*, PhasePoint>>{{&standard, kStandardStart},
                                                                                      {cat.get(), kCatStart}}) {
    for (long n = -8; n <= 8; ++n) {
      const auto s = oracle::state_at<double>(*map, 0.5, x, n);
      const auto fd = fd_jacobian(*map, 0.5, x, n, 1e-6);
      const Matrix<double> F = s.true_F();
      const Vec<double> dk = s.true_dk();
      fd_worst = std::max(fd_worst, oracle::max_abs_diff(fd.F, F) / max_abs(F));
      if (max_abs(dk) > 0.0) fd_worst = std::max(fd_worst, oracle::max_abs_diff(fd.dk, dk) / max_abs(dk));
    }
  }
  std::mt19937_64 rng(2024);
  double jac_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Matrix<double> m = oracle::random_symmetric(rng, i % 2 == 0 ? 2 : 3);
    const auto got = jacobi_eigen(m.cast<DD>());
    const auto want = oracle::closed_form_eigenvalues(m);
    mpf_class norm(0, oracle::kBits);
    for (const auto& w : want) norm = std::max(norm, mpf_class(abs(w), oracle::kBits));
    for (std::size_t j = 0; j < want.size(); ++j) {
      const mpf_class err = abs(oracle::mpf(got.values[j]) - want[j]);
      jac_worst = std::max(jac_worst, mpf_class(err / norm, oracle::kBits).get_d());
    }
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double trip_worst = 0.0;
  for (const ParametricMap* map : {static_cast<const ParametricMap*>(&standard), static_cast<const ParametricMap*>(cat.get())}) {
    const double P = map->topology().period(0);
    for (int i = 0; i < 1000; ++i) {
      const PhasePoint x = make_point(*map, {P * u(rng), P * u(rng)});
      const double k = 4.0 * u(rng) - 2.0;
      const PhasePoint back = inverse_eval(*map, k, eval(*map, k, x));
      Vec<double> d = {back.coords[0] - x.coords[0], back.coords[1] - x.coords[1]};
      trip_worst = std::max(trip_worst, max_abs(map->topology().wrap_nearest(d)));
    }
  }
  return {fd_worst < 1e-5 && jac_worst < 1e-25 && trip_worst < 1e-12,
          "fd rel=" + fmt("%.2e", fd_worst) + " jacobi rel=" + fmt("%.2e", jac_worst) + " round trip=" +
              fmt("%.2e", trip_worst)};
}

// 9. end-to-end estimation
Outcome end_to_end_estimation() {
  StandardMap map;
  const auto err_norm = [&](const Vec<double>& c) {
    Vec<double> d = map.topology().wrap_nearest({c[0] - 3.0, c[1] - 0.0});
    return std::sqrt(dot(d, d));
  };
  const ObservationSeries obs = synthesize(map, 0.5, kStandardStart, 20, 1e-8, 42);
  const FitSolution s = solve(map, obs, PhasePoint{{3.001, 0.001}}, 0.5, NormalMode::CaseA);
  const double err = err_norm(s.center);
  const double noise = 1e-6;
  SolveConfig cfg;
  cfg.sigma = 3.0 * noise;  // Γ = C^{-1} is in units of the observation variance
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const ObservationSeries o = synthesize(map, 0.5, kStandardStart, 20, noise, seed);
    const FitSolution f = solve(map, o, kStandardStart, 0.5, NormalMode::CaseA, cfg);
    Vec<double> disp = map.topology().wrap_nearest({3.0 - f.center[0], 0.0 - f.center[1]});
    if (f.converged && f.ellipsoid.contains_displacement(disp)) ++inside;
  }
  return {s.converged && err < 1e-6 && inside >= 45,
          "seed 42 error=" + fmt("%.2e", err) + ", inside " + std::to_string(inside) + "/50"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cat map case A sharp limit", cat_case_a_sharp_limit},
      {"cat map case B lower bound", cat_case_b_lower_bound},
      {"auxiliary normal matrix identity", auxiliary_identity},
      {"extended spectrum adds a zero exponent", extended_spectrum_zero},
      {"standard map reference values", standard_map_reproduction},
      {"case A exponential sandwich", case_a_sandwich},
      {"case B smallest eigenvalue monotone", case_b_monotonicity},
      {"oracle suite", oracle_suite},
      {"end-to-end estimation", end_to_end_estimation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
