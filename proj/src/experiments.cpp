#include "hyperod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include "hyperod/analysis.hpp"
#include "hyperod/estimation.hpp"
#include "hyperod/spectra.hpp"
#include "hyperod/uncertainty.hpp"

namespace hyperod {

using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::CostGuard:
      return exit_code::kUsage;
    case ErrorCode::Diverged:
      return exit_code::kDiverged;
    case ErrorCode::SingularNormal:
    case ErrorCode::RankDeficient:
      return exit_code::kSingularNormal;
    case ErrorCode::Io:
      return exit_code::kIo;
    default:
      return exit_code::kNumerical;
  }
}

// ------------------------------------------------------------ config

double ExperimentConfig::k_value() const { return parse_rational(k).get_d(); }

mpq_class ExperimentConfig::k_exact() const { return parse_rational(k); }

MapPtr ExperimentConfig::build_map() const { return map_from_json(map); }

PhasePoint ExperimentConfig::start(const ParametricMap& m) const {
  if (x0) return make_point(m, *x0);
  if (m.name() == "standard") return make_point(m, {3.0, 0.0});
  Vec<double> c(m.dim());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.1 * static_cast<double>(i + 1);
  return make_point(m, c);
}

json ExperimentConfig::to_json() const {
  const auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  return {{"map", map},
          {"k", k},
          {"x0", opt(x0)},
          {"N", opt(N)},
          {"stride", stride},
          {"case", to_string(mode)},
          {"noise_sigma", noise_sigma},
          {"seed", seed},
          {"sigma", sigma},
          {"out", out},
          {"format", format},
          {"steps", opt(steps)},
          {"indicator_steps", indicator_steps},
          {"fit_from", opt(fit_from)},
          {"x_init", opt(x_init)},
          {"k_init", opt(k_init)}};
}

json parse_map_argument(const std::string& text) {
  if (text == "standard") return {{"type", "standard"}};
  if (text == "cat") return {{"type", "affine"}, {"A", {{2, 1}, {1, 1}}}, {"b", {1, 0}}};
  try {
    if (!text.empty() && text.front() == '{') return json::parse(text);
    std::ifstream in(text);
    if (!in) {
      throw Error(ErrorCode::InvalidArgument, "map: '" + text + "' is neither a known map, JSON, nor a readable file");
    }
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("map: invalid JSON: ") + e.what());
  }
}

void apply_config_json(ExperimentConfig& cfg, const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::InvalidArgument, "config: top level must be a JSON object");
  }
  const auto number_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "map") {
        cfg.map = v.is_string() ? parse_map_argument(v.get<std::string>()) : v;
        cfg.map_text = v.is_string() ? v.get<std::string>() : v.dump();
      } else if (key == "k") {
        cfg.k = number_text(v);
      } else if (key == "x0") {
        cfg.x0 = v.get<std::vector<double>>();
      } else if (key == "N") {
        cfg.N = v.get<long>();
      } else if (key == "stride") {
        cfg.stride = v.get<long>();
      } else if (key == "case") {
        cfg.mode = normal_mode_from_string(v.get<std::string>());
      } else if (key == "noise_sigma") {
        cfg.noise_sigma = v.get<double>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "sigma") {
        cfg.sigma = v.get<double>();
      } else if (key == "out") {
        cfg.out = v.get<std::string>();
      } else if (key == "format") {
        cfg.format = v.get<std::string>();
      } else if (key == "steps") {
        cfg.steps = v.get<long>();
      } else if (key == "indicator_steps") {
        cfg.indicator_steps = v.get<long>();
      } else if (key == "fit_from") {
        cfg.fit_from = v.get<long>();
      } else if (key == "x_init") {
        cfg.x_init = v.get<std::vector<double>>();
      } else if (key == "k_init") {
        cfg.k_init = v.get<double>();
      } else {
        throw Error(ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::InvalidArgument, "config: cannot read '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "config: '" + path + "' is empty");
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: invalid JSON: ") + e.what());
  }
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "config: " + what); };
  if (!std::isfinite(cfg.k_value())) fail("k must be finite");
  const auto finite_all = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (cfg.x0 && !finite_all(*cfg.x0)) fail("x0 must be finite");
  if (cfg.x_init && !finite_all(*cfg.x_init)) fail("x_init must be finite");
  if (cfg.k_init && !std::isfinite(*cfg.k_init)) fail("k_init must be finite");
  if (cfg.N && *cfg.N < 0) fail("N must be non-negative");
  if (cfg.stride < 1) fail("stride must be at least 1");
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) fail("noise_sigma must be finite and >= 0");
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) fail("sigma must be finite and > 0");
  if (cfg.format != "json" && cfg.format != "csv") fail("format must be csv or json");
  if (cfg.steps && *cfg.steps < 100) fail("steps must be at least 100");
  if (cfg.indicator_steps < 3) fail("indicator_steps must be at least 3");
  if (cfg.fit_from && *cfg.fit_from < 1) fail("fit_from must be at least 1");
}

unsigned worker_cap() {
  if (const char* env = std::getenv("HYPEROD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

// ------------------------------------------------------------ helpers

namespace {

constexpr double kLn10 = std::numbers::ln10;

double log10_of(double natural_log) { return natural_log / kLn10; }

std::vector<double> log10_all(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(log10_of(x));
  return out;
}

struct Checks {
  json list = json::array();
  bool ok = true;
  void add(const std::string& name, bool pass, json detail = json::object()) {
    detail["name"] = name;
    detail["pass"] = pass;
    list.push_back(std::move(detail));
    ok = ok && pass;
  }
};

int finish(const ExperimentConfig& cfg, std::ostream& os, json doc, const Checks& checks) {
  const int code = checks.ok ? exit_code::kOk : exit_code::kCheckFailed;
  doc["config"] = cfg.to_json();
  doc["checks"] = checks.list;
  doc["verdict"] = checks.ok ? "pass" : "fail";
  doc["exit_code"] = code;
  const std::string text = doc.dump(2) + "\n";
  if (cfg.out.empty()) {
    os << text;
  } else {
    std::ofstream f(cfg.out);
    if (!(f << text)) throw Error(ErrorCode::Io, "cannot write '" + cfg.out + "'");
  }
  return code;
}

std::ostream& text_sink(const ExperimentConfig& cfg, std::ostream& os, std::ofstream& file) {
  if (cfg.out.empty()) return os;
  file.open(cfg.out);
  if (!file) throw Error(ErrorCode::Io, "cannot write '" + cfg.out + "'");
  return file;
}

bool is_standard_reference(const ExperimentConfig& cfg, const ParametricMap& map, const PhasePoint& x0) {
  return map.name() == "standard" && cfg.k_exact() == mpq_class(1, 2) && x0.coords == Vec<double>{3.0, 0.0};
}

const AffineTorusMap* as_affine(const ParametricMap& map) { return dynamic_cast<const AffineTorusMap*>(&map); }

long default_N(const ParametricMap& map) { return as_affine(map) ? 60 : 400; }
long default_steps(const ParametricMap& map) { return as_affine(map) ? 1000000 : 100000; }

json fit_json(const FitResult& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"window", {f.first, f.last}},
          {"n_points", f.n_points}};
}

json spectrum_json(const SpectrumResult& s) {
  json groups = json::array();
  for (const auto& g : merge_multiplicities(s)) groups.push_back({{"exponent", g.exponent}, {"multiplicity", g.multiplicity}});
  return {{"exponents", s.exponents},
          {"n_steps", s.n_steps},
          {"direction", to_string(s.direction)},
          {"residual", s.residual},
          {"mean_log_det", s.mean_log_det},
          {"multiplicities", groups}};
}

/// Per-eigenvalue fits of ln λ_i against N (exponential model) and against
/// ln N (polynomial model) over trusted rows with N >= from.
struct DecayFits {
  std::vector<std::optional<FitResult>> exp_fit;
  std::vector<std::optional<FitResult>> poly_fit;
};

DecayFits fit_decay(const DecaySeries& s, long from) {
  DecayFits out;
  if (s.rows.empty()) return out;
  const std::size_t n = s.rows.front().log_lambda.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : s.rows) {
      if (r.N >= from && r.trusted[i]) pts.emplace_back(static_cast<double>(r.N), r.log_lambda[i]);
    }
    try {
      out.exp_fit.emplace_back(fit_rate(pts, FitModel::Exponential));
      out.poly_fit.emplace_back(fit_rate(pts, FitModel::Polynomial));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData) throw;
      out.exp_fit.emplace_back();
      out.poly_fit.emplace_back();
    }
  }
  return out;
}

const DecayRow* last_trusted_row(const DecaySeries& s) {
  for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it) {
    if (std::all_of(it->trusted.begin(), it->trusted.end(), [](bool b) { return b; })) return &*it;
  }
  return nullptr;
}

struct DecayRun {
  DecaySeries series;
  DecayFits fits;
  long fit_from = 1;
};

DecayRun run_decay(const ParametricMap& map, double k, const PhasePoint& x0, long N, NormalMode mode, long stride,
                   std::optional<long> fit_from) {
  DecayRun run;
  run.series = decay_series(map, k, x0, N, mode, stride);
  run.fit_from = fit_from.value_or(std::max(1L, N / 8));
  run.fits = fit_decay(run.series, run.fit_from);
  return run;
}

json decay_fits_json(const DecayRun& run) {
  json fits = json::array();
  for (std::size_t i = 0; i < run.fits.exp_fit.size(); ++i) {
    json f = {{"i", i + 1}};
    if (run.fits.exp_fit[i]) {
      f["exponential"] = fit_json(*run.fits.exp_fit[i]);
      f["half_log_slope"] = 0.5 * run.fits.exp_fit[i]->slope;
      f["polynomial"] = fit_json(*run.fits.poly_fit[i]);
    } else {
      f["exponential"] = nullptr;
      f["polynomial"] = nullptr;
    }
    fits.push_back(std::move(f));
  }
  return fits;
}

json decay_rows_json(const DecaySeries& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"N", r.N},
                    {"log10_lambda", log10_all(r.log_lambda)},
                    {"trusted", r.trusted},
                    {"log10_delta_min", log10_of(r.log_delta_min)},
                    {"log10_condition", log10_of(r.log_condition)},
                    {"log10_marginals", log10_all(r.log_marginals)}});
  }
  return rows;
}

/// Case-B lower bound on the largest covariance eigenvalue for affine maps
/// with b != 0, over every trusted row.
void check_case_b_bound(const AffineTorusMap& cat, const DecaySeries& s, Checks& checks) {
  const CaseBBound bound = cat_case_b_bound(cat);
  bool ok = true;
  long checked = 0;
  long last_N = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : s.rows) {
    if (!r.trusted.back()) continue;
    const double margin = r.log_lambda.back() - bound.log_bound(r.N);
    worst = std::min(worst, margin);
    ok = ok && margin >= -1e-9;
    ++checked;
    last_N = r.N;
  }
  checks.add("case_b_lower_bound", ok && checked > 0,
             {{"prefactor", bound.prefactor.get_d()}, {"rows_checked", checked}, {"largest_trusted_N", last_N},
              {"worst_log_margin", worst}});
}

/// Smallest case-B normal eigenvalue non-decreasing in N over trusted rows.
void check_monotone(const DecaySeries& s, Checks& checks) {
  bool ok = true;
  double prev = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  long checked = 0;
  for (const auto& r : s.rows) {
    if (!r.trusted.back()) continue;
    if (checked > 0) {
      worst = std::min(worst, r.log_delta_min - prev);
      ok = ok && r.log_delta_min >= prev - 1e-10;
    }
    prev = r.log_delta_min;
    ++checked;
  }
  checks.add("smallest_eigenvalue_nondecreasing", ok && checked > 1,
             {{"rows_checked", checked}, {"worst_increment_log", worst}});
}

/// Runs the tasks in batches of at most worker_cap() threads.
void run_parallel(const std::vector<std::function<void()>>& tasks) {
  const unsigned cap = worker_cap();
  for (std::size_t start = 0; start < tasks.size(); start += cap) {
    std::vector<std::future<void>> batch;
    const std::size_t stop = std::min(tasks.size(), start + cap);
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(std::async(cap > 1 ? std::launch::async : std::launch::deferred, tasks[i]));
    }
    for (auto& f : batch) f.get();
  }
}

int run_guarded(const ExperimentConfig& cfg, std::ostream& os, const std::function<int()>& body) {
  try {
    validate(cfg);
    return body();
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    json doc = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}}},
                {"config", cfg.to_json()},
                {"verdict", "fail"},
                {"exit_code", code}};
    if (cfg.format == "json") {
      os << doc.dump(2) << "\n";
    }
    std::cerr << "error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace

// ------------------------------------------------------------ commands

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    const PhasePoint x0 = cfg.start(*map);
    const long N = cfg.N_or(10);
    if (N < 1) throw Error(ErrorCode::InvalidArgument, "simulate: N must be at least 1");
    const auto pts = orbit(*map, cfg.k_value(), x0, N);
    if (cfg.format == "csv") {
      std::ofstream file;
      std::ostream& out = text_sink(cfg, os, file);
      out.imbue(std::locale::classic());
      out.precision(17);
      out << "n";
      for (std::size_t i = 0; i < map->dim(); ++i) out << ",x" << (i + 1);
      out << "\n";
      for (long n = -N; n <= N; ++n) {
        out << n;
        for (double c : pts[static_cast<std::size_t>(n + N)]) out << ',' << c;
        out << "\n";
      }
      return exit_code::kOk;
    }
    json rows = json::array();
    for (long n = -N; n <= N; ++n) rows.push_back({{"n", n}, {"x", pts[static_cast<std::size_t>(n + N)]}});
    return finish(cfg, os, {{"command", "simulate"}, {"orbit", rows}}, Checks{});
  });
}

namespace {

json lyapunov_body(const ParametricMap& map, double k, const PhasePoint& x0, long steps, long indicator_steps,
                   Checks& checks) {
  const SpectrumResult s = lyapunov_qr(map, k, x0, {steps, 1, Direction::Forward});
  const FitResult ind = lyapunov_indicator(map, k, x0, indicator_steps);
  json doc = spectrum_json(s);
  doc["indicator"] = fit_json(ind);
  doc["indicator"]["iterations"] = indicator_steps;
  if (const auto* cat = as_affine(map); cat && cat->symmetric()) {
    std::vector<double> expected;
    for (const auto& l : cat_case_a_limits(*cat)) expected.push_back(l.exponent);
    std::sort(expected.begin(), expected.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) worst = std::max(worst, std::abs(s.exponents[i] - expected[i]));
    checks.add("exponents_match_eigenvalues", worst <= 1e-6, {{"expected", expected}, {"max_abs_error", worst}});
  }
  return doc;
}

}  // namespace

int cmd_lyapunov(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    Checks checks;
    json doc = lyapunov_body(*map, cfg.k_value(), cfg.start(*map), cfg.steps.value_or(default_steps(*map)),
                             cfg.indicator_steps, checks);
    doc["command"] = "lyapunov";
    return finish(cfg, os, std::move(doc), checks);
  });
}

int cmd_decay(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    const PhasePoint x0 = cfg.start(*map);
    const DecayRun run =
        run_decay(*map, cfg.k_value(), x0, cfg.N_or(default_N(*map)), cfg.mode, cfg.stride, cfg.fit_from);
    Checks checks;
    if (cfg.mode == NormalMode::CaseB) {
      const auto* cat = as_affine(*map);
      if (cat && std::any_of(cat->b().begin(), cat->b().end(), [](const mpq_class& q) { return q != 0; })) {
        check_case_b_bound(*cat, run.series, checks);
      }
      check_monotone(run.series, checks);
    }
    if (cfg.format == "csv") {
      std::ofstream file;
      write_decay_csv(text_sink(cfg, os, file), run.series);
      return checks.ok ? exit_code::kOk : exit_code::kCheckFailed;
    }
    json doc = {{"command", "decay"},
                {"case", to_string(cfg.mode)},
                {"fit_from", run.fit_from},
                {"fits", decay_fits_json(run)},
                {"truncated_shells", run.series.truncated},
                {"rows", decay_rows_json(run.series)}};
    return finish(cfg, os, std::move(doc), checks);
  });
}

int cmd_fit(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    if (cfg.mode == NormalMode::AuxiliaryG) throw Error(ErrorCode::InvalidArgument, "fit: case must be a or b");
    const PhasePoint truth = cfg.start(*map);
    const double k_true = cfg.k_value();
    const ObservationSeries obs = synthesize(*map, k_true, truth, cfg.N_or(20), cfg.noise_sigma, cfg.seed);
    const PhasePoint x_init = cfg.x_init ? make_point(*map, *cfg.x_init) : truth;
    SolveConfig sc;
    sc.sigma = cfg.sigma;
    const FitSolution sol = solve(*map, obs, x_init, cfg.k_init.value_or(k_true), cfg.mode, sc);
    Vec<double> err(map->dim());
    for (std::size_t i = 0; i < err.size(); ++i) err[i] = sol.center[i] - truth.coords[i];
    err = map->topology().wrap_nearest(err);
    Vec<double> disp = err;
    if (cfg.mode == NormalMode::CaseB) disp.push_back(sol.center.back() - k_true);
    Checks checks;
    checks.add("converged", sol.converged, {{"iterations", sol.iterations}});
    json doc = {{"command", "fit"},
                {"case", to_string(cfg.mode)},
                {"center", sol.center},
                {"converged", sol.converged},
                {"iterations", sol.iterations},
                {"rms", sol.rms},
                {"step_history", sol.step_history},
                {"semi_axes_log10", log10_all(sol.ellipsoid.log_semi_axes)},
                {"marginals_log10", log10_all(sol.ellipsoid.log_marginals)},
                {"error_to_truth", std::sqrt(dot(err, err))},
                {"truth_normalized_distance2", sol.ellipsoid.normalized_distance2(disp)}};
    return finish(cfg, os, std::move(doc), checks);
  });
}

int cmd_cat_oracle(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    const auto* cat = as_affine(*map);
    if (!cat) throw Error(ErrorCode::InvalidArgument, "cat-oracle: map must be affine");
    const long N = cfg.N_or(20);
    if (N < 1) throw Error(ErrorCode::InvalidArgument, "cat-oracle: N must be at least 1");
    if (N > kExactNormalGuard) {
      throw Error(ErrorCode::CostGuard, "cat-oracle: N above the exact-arithmetic guard of " +
                                            std::to_string(kExactNormalGuard));
    }
    const mpq_class k = cfg.k_exact();
    const RationalMatrix A = to_rational(cat->A());
    const auto dec = [](const BigRational& q) { return to_decimal(q); };
    const auto dec_vec = [&](const RationalVector& v) {
      json a = json::array();
      for (const auto& q : v) a.push_back(dec(q));
      return a;
    };
    const auto dec_mat = [&](const RationalMatrix& m) {
      json a = json::array();
      for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(dec(m(i, j)));
        a.push_back(std::move(row));
      }
      return a;
    };
    Checks checks;
    json doc = {{"command", "cat-oracle"}, {"N", N}, {"k", dec(k)}};
    const RationalMatrix Ca = exact_normal_matrix(*cat, k, N, NormalMode::CaseA);
    doc["case_a_normal_matrix"] = dec_mat(Ca);
    if (cat->symmetric()) {
      json lims = json::array();
      const auto limits = cat_case_a_limits(*cat);
      const auto ratios = cat_case_a_ratio(*cat, N);
      for (std::size_t i = 0; i < limits.size(); ++i) {
        lims.push_back({{"i", i + 1},
                        {"eigenvalue", limits[i].eigenvalue},
                        {"exponent", limits[i].exponent},
                        {"limit", limits[i].limit},
                        {"ratio_at_N", ratios[i]}});
      }
      doc["case_a_limits"] = lims;
      checks.add("case_a_commutes_with_A", Ca * A == A * Ca);
    } else {
      doc["case_a_limits"] = nullptr;
    }
    const bool b_nonzero = std::any_of(cat->b().begin(), cat->b().end(), [](const mpq_class& q) { return q != 0; });
    if (b_nonzero) {
      const CaseBBound bound = cat_case_b_bound(*cat);
      doc["w"] = dec_vec(bound.w);
      doc["w_norm2"] = dec(bound.w_norm2);
      doc["prefactor"] = dec(bound.prefactor);
      doc["v0"] = dec_vec(bound.v0);
      doc["fixed_vector_certified_up_to"] = bound.certified_up_to;
      checks.add("fixed_vector_certificate", bound.certified_up_to >= 20);

      bool rayleigh_ok = true;
      bool bound_ok = true;
      bool lem1_ok = true;
      bool monotone_ok = true;
      BigRational prev_mid = 0;
      json intervals = json::array();
      RationalMatrix Cb_N;
      for (long n = 1; n <= N; ++n) {
        const RationalMatrix Cb = exact_normal_matrix(*cat, k, n, NormalMode::CaseB);
        const RationalMatrix Cg = exact_normal_matrix(*cat, k, n, NormalMode::AuxiliaryG);
        RationalMatrix expected = Cb;
        expected(expected.rows() - 1, expected.cols() - 1) += 2 * n + 1;
        lem1_ok = lem1_ok && Cg == expected;
        const BigRational ray = rayleigh_numerator(Cb, bound.v0);
        rayleigh_ok = rayleigh_ok && ray == (2 * n + 1) * bound.w_norm2;
        const RationalInterval iv = exact_smallest_eigen_interval(Cb, 64);
        // λ̃_max = 1/δ̃_min >= prefactor/(2n+1)  <=>  δ̃_min <= (2n+1)/prefactor
        bound_ok = bound_ok && iv.upper <= BigRational(2 * n + 1) / bound.prefactor;
        if (n > 1) monotone_ok = monotone_ok && iv.midpoint() >= prev_mid;
        prev_mid = iv.midpoint();
        intervals.push_back({{"N", n}, {"lower", dec(iv.lower)}, {"upper", dec(iv.upper)}});
        if (n == N) Cb_N = Cb;
      }
      doc["case_b_normal_matrix"] = dec_mat(Cb_N);
      doc["rayleigh_value"] = dec(rayleigh_numerator(Cb_N, bound.v0));
      doc["smallest_eigenvalue_intervals"] = intervals;
      checks.add("rayleigh_certificate", rayleigh_ok);
      checks.add("case_b_lower_bound_certified", bound_ok);
      checks.add("auxiliary_identity", lem1_ok);
      checks.add("smallest_eigenvalue_nondecreasing", monotone_ok);
    }
    return finish(cfg, os, std::move(doc), checks);
  });
}

int cmd_report(const ExperimentConfig& cfg, std::ostream& os) {
  return run_guarded(cfg, os, [&] {
    const MapPtr map = cfg.build_map();
    const PhasePoint x0 = cfg.start(*map);
    const double k = cfg.k_value();
    const long N = cfg.N_or(default_N(*map));
    const long steps = cfg.steps.value_or(default_steps(*map));
    const auto* cat = as_affine(*map);

    SpectrumResult fwd;
    SpectrumResult bwd;
    FitResult indicator;
    DecayRun runA;
    DecayRun runB;
    const std::vector<std::function<void()>> tasks = {
        [&] { std::tie(fwd, bwd) = forward_backward_check(*map, k, x0, steps); },
        [&] { indicator = lyapunov_indicator(*map, k, x0, cfg.indicator_steps); },
        [&] { runA = run_decay(*map, k, x0, N, NormalMode::CaseA, cfg.stride, cfg.fit_from); },
        [&] { runB = run_decay(*map, k, x0, N, NormalMode::CaseB, cfg.stride, cfg.fit_from); }};
    run_parallel(tasks);

    Checks checks;
    json doc = {{"command", "report"}, {"N", N}};
    doc["lyapunov"] = {{"forward", spectrum_json(fwd)}, {"backward", spectrum_json(bwd)}, {"indicator", fit_json(indicator)}};
    doc["case_a"] = {{"fit_from", runA.fit_from}, {"fits", decay_fits_json(runA)}};
    doc["case_b"] = {{"fit_from", runB.fit_from}, {"fits", decay_fits_json(runB)}};

    // Dichotomy: every case-A eigenvalue decays exponentially while the
    // largest case-B eigenvalue does not.
    double rate_a = -std::numeric_limits<double>::infinity();
    bool a_ok = !runA.fits.exp_fit.empty();
    for (const auto& f : runA.fits.exp_fit) {
      a_ok = a_ok && f.has_value();
      if (f) rate_a = std::max(rate_a, f->slope);
    }
    const auto& fb = runB.fits.exp_fit.empty() ? std::optional<FitResult>{} : runB.fits.exp_fit.back();
    const double rate_b = fb ? fb->slope : std::numeric_limits<double>::quiet_NaN();
    checks.add("case_a_exponential", a_ok && rate_a <= -0.02, {{"slowest_rate", rate_a}});
    checks.add("case_b_subexponential", fb.has_value() && std::abs(rate_b) < 0.1 * std::abs(rate_a),
               {{"rate", rate_b},
                {"polynomial_order", runB.fits.poly_fit.back() ? json(runB.fits.poly_fit.back()->slope) : json()}});

    // Sandwich at the largest trusted N.
    double g_hi = std::max(fwd.exponents.back(), bwd.exponents.back());
    double g_lo = g_hi;
    for (const auto* s : {&fwd, &bwd}) {
      for (double e : s->exponents) {
        if (e > 0.01) g_lo = std::min(g_lo, e);
      }
    }
    if (const DecayRow* r = last_trusted_row(runA.series)) {
      bool ok = true;
      std::vector<double> per_n;
      for (double l : r->log_lambda) {
        const double v = l / static_cast<double>(r->N);
        per_n.push_back(v);
        ok = ok && v >= -2.0 * g_hi - 0.02 && v <= -2.0 * g_lo + 0.02;
      }
      checks.add("case_a_sandwich", ok,
                 {{"N", r->N}, {"log_lambda_over_N", per_n}, {"gamma_max", g_hi}, {"gamma_min", g_lo}});
    } else {
      checks.add("case_a_sandwich", false, {{"reason", "no trusted row"}});
    }

    if (is_standard_reference(cfg, *map, x0)) {
      checks.add("indicator_reference", std::abs(indicator.slope - 0.086) <= 0.01,
                 {{"value", indicator.slope}, {"reference", 0.086}});
      json halves = json::array();
      bool ok = a_ok;
      for (const auto& f : runA.fits.exp_fit) {
        if (!f) continue;
        halves.push_back(0.5 * f->slope);
        ok = ok && 0.5 * f->slope >= -0.10 && 0.5 * f->slope <= -0.07;
      }
      checks.add("case_a_half_log_slopes_reference", ok, {{"values", halves}, {"reference", {-0.084, -0.083}}});
      checks.add("case_b_rate_small", fb.has_value() && std::abs(rate_b) < 0.02, {{"rate", rate_b}});
    }
    if (cat) {
      if (cat->symmetric()) {
        const auto limits = cat_case_a_limits(*cat);
        const long Nr = std::min(15L, N);
        const auto exact = cat_case_a_ratio(*cat, Nr);
        const auto row = std::find_if(runA.series.rows.begin(), runA.series.rows.end(),
                                      [&](const DecayRow& r) { return r.N == Nr; });
        if (row != runA.series.rows.end()) {
          bool ok = true;
          json entries = json::array();
          for (std::size_t i = 0; i < limits.size(); ++i) {
            const double ratio =
                std::exp(row->log_lambda[i] + 2.0 * std::abs(limits[i].exponent) * static_cast<double>(Nr));
            ok = ok && std::abs(ratio - limits[i].limit) <= 1e-6 && std::abs(ratio - exact[i]) <= 1e-8;
            entries.push_back({{"i", i + 1}, {"ratio", ratio}, {"exact_ratio", exact[i]}, {"limit", limits[i].limit}});
          }
          checks.add("case_a_sharp_limits", ok, {{"N", Nr}, {"entries", entries}});
        }
      }
      if (std::any_of(cat->b().begin(), cat->b().end(), [](const mpq_class& q) { return q != 0; })) {
        check_case_b_bound(*cat, runB.series, checks);
      }
    }
    check_monotone(runB.series, checks);
    return finish(cfg, os, std::move(doc), checks);
  });
}

}  // namespace hyperod
