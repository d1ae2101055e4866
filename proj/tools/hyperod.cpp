// hyperod: orbit determination experiments for hyperbolic maps.

#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperod/experiments.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  ss.imbue(std::locale::classic());
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hyperod;
  CLI::App app{"Orbit determination and uncertainty decay for hyperbolic maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string map_arg;
  std::string k_arg;
  std::string x0_arg;
  std::string x_init_arg;
  std::optional<double> k_init;
  std::optional<long> N;
  std::optional<long> stride;
  std::optional<long> steps;
  std::optional<long> indicator_steps;
  std::optional<long> fit_from;
  std::string case_arg;
  std::optional<double> noise_sigma;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::string out;
  std::string format;

  const std::map<std::string, std::string> about = {
      {"simulate", "Dump the orbit x_n for |n| <= N"},
      {"lyapunov", "Lyapunov spectrum by the QR method plus the finite-horizon indicator"},
      {"decay", "Covariance eigenvalues against N, with exponential and polynomial fits"},
      {"fit", "Synthesize noisy observations and run differential corrections"},
      {"cat-oracle", "Exact rational checks for affine torus maps"},
      {"report", "Lyapunov indicator, case A and case B decay rates, and the dichotomy verdict"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, text] : about) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--config", config_path, "JSON config file (flags override its values)");
    sub->add_option("--map", map_arg, "standard | cat | inline JSON | path to JSON");
    sub->add_option("--k", k_arg, "Map parameter (decimal or p/q)");
    sub->add_option("--x0", x0_arg, "Initial point, comma separated");
    sub->add_option("--N", N, "Number of shells N");
    sub->add_option("--stride", stride, "Emit every stride-th N");
    sub->add_option("--case", case_arg, "a | b (g: extended map)");
    sub->add_option("--noise-sigma,--sigma-noise", noise_sigma, "Observation noise standard deviation");
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--sigma", sigma, "Confidence scale of the ellipsoid");
    sub->add_option("--out", out, "Output path (default: standard output)");
    sub->add_option("--format", format, "json | csv");
    sub->add_option("--steps", steps, "QR iterations");
    sub->add_option("--indicator-steps", indicator_steps, "Horizon of the finite-time indicator");
    sub->add_option("--fit-from", fit_from, "Smallest N entering the decay fits");
    sub->add_option("--x-init", x_init_arg, "Initial guess, comma separated");
    sub->add_option("--k-init", k_init, "Initial guess for k (case b)");
    subs[name] = sub;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) apply_config_json(cfg, load_config_file(config_path));
    if (!map_arg.empty()) {
      cfg.map = parse_map_argument(map_arg);
      cfg.map_text = map_arg;
    }
    if (!k_arg.empty()) cfg.k = k_arg;
    if (!x0_arg.empty()) cfg.x0 = parse_list(x0_arg);
    if (!x_init_arg.empty()) cfg.x_init = parse_list(x_init_arg);
    if (k_init) cfg.k_init = k_init;
    if (N) cfg.N = N;
    if (stride) cfg.stride = *stride;
    if (steps) cfg.steps = steps;
    if (indicator_steps) cfg.indicator_steps = *indicator_steps;
    if (fit_from) cfg.fit_from = fit_from;
    if (!case_arg.empty()) cfg.mode = normal_mode_from_string(case_arg);
    if (noise_sigma) cfg.noise_sigma = *noise_sigma;
    if (seed) cfg.seed = *seed;
    if (sigma) cfg.sigma = *sigma;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_code::kUsage;
  }

  if (subs["simulate"]->parsed()) return cmd_simulate(cfg, std::cout);
  if (subs["lyapunov"]->parsed()) return cmd_lyapunov(cfg, std::cout);
  if (subs["decay"]->parsed()) return cmd_decay(cfg, std::cout);
  if (subs["fit"]->parsed()) return cmd_fit(cfg, std::cout);
  if (subs["cat-oracle"]->parsed()) return cmd_cat_oracle(cfg, std::cout);
  if (subs["report"]->parsed()) return cmd_report(cfg, std::cout);
  std::cerr << app.help();
  return exit_code::kUsage;
}
