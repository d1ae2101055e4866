#pragma once

// Reproducible experiments behind the command-line tool. Every command
// takes the effective configuration, writes one JSON document (or CSV
// table) to the given stream, and returns the process exit code; the
// "verdict" field of JSON output mirrors that code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hyperod/dynamics.hpp"
#include "hyperod/error.hpp"
#include "hyperod/normal_mode.hpp"
#include "json.hpp"

namespace hyperod {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kDiverged = 3;
inline constexpr int kSingularNormal = 4;
inline constexpr int kNumerical = 5;
inline constexpr int kIo = 6;
}  // namespace exit_code

[[nodiscard]] int exit_code_for(ErrorCode code);

struct ExperimentConfig {
  nlohmann::json map = {{"type", "standard"}};
  std::string k = "0.5";  // kept as text so affine oracles can read it exactly
  std::optional<std::vector<double>> x0;
  std::optional<long> N;
  long stride = 1;
  NormalMode mode = NormalMode::CaseA;
  double noise_sigma = 1e-8;
  std::uint64_t seed = 42;
  double sigma = 1.0;
  std::string out;  // empty: standard output
  std::string format = "json";
  std::optional<long> steps;          // QR iterations
  long indicator_steps = 300;         // horizon of the finite-time indicator
  std::optional<long> fit_from;       // first N used in decay fits
  std::optional<std::vector<double>> x_init;
  std::optional<double> k_init;
  std::string map_text = "standard";  // how the map was given, for the echo

  [[nodiscard]] double k_value() const;
  [[nodiscard]] mpq_class k_exact() const;
  [[nodiscard]] MapPtr build_map() const;
  /// x0, or the per-family default.
  [[nodiscard]] PhasePoint start(const ParametricMap& map) const;
  [[nodiscard]] long N_or(long fallback) const { return N.value_or(fallback); }
  [[nodiscard]] nlohmann::json to_json() const;
};

/// "standard", "cat", inline JSON text, or a path to a JSON file.
[[nodiscard]] nlohmann::json parse_map_argument(const std::string& text);

/// Reads keys map, k, x0, N, stride, case, noise_sigma, seed, sigma, out,
/// format, steps, indicator_steps, fit_from, x_init, k_init. Unknown keys
/// are rejected.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j);
/// Loads a JSON config file; an empty file is a usage error.
[[nodiscard]] nlohmann::json load_config_file(const std::string& path);

/// Throws InvalidArgument for non-finite numbers, N < 1, bad format.
void validate(const ExperimentConfig& cfg);

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& os);
int cmd_lyapunov(const ExperimentConfig& cfg, std::ostream& os);
int cmd_decay(const ExperimentConfig& cfg, std::ostream& os);
int cmd_fit(const ExperimentConfig& cfg, std::ostream& os);
int cmd_cat_oracle(const ExperimentConfig& cfg, std::ostream& os);
int cmd_report(const ExperimentConfig& cfg, std::ostream& os);

/// Worker cap from HYPEROD_THREADS (default: hardware concurrency, min 1).
[[nodiscard]] unsigned worker_cap();

}  // namespace hyperod
