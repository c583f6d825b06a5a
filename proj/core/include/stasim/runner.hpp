#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stasim/classical.hpp"
#include "stasim/otto.hpp"
#include "stasim/protocol.hpp"

namespace stasim {

inline constexpr int kConfigVersion = 1;
/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "STASIM_OUT_DIR";

enum class ExperimentKind {
  classical_work_dist,
  jarzynski_trace,
  quantum_work_atoms,
  engine_curves,
  verify,
};

std::string to_string(ExperimentKind kind);

/// A configuration problem; `path` locates the offending field, e.g. "$.protocol.tau".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct GridSpec {
  double lower = 0.0;
  double upper = 30.0;
  std::size_t points = 600;
};

struct ClassicalSettings {
  std::size_t samples = 100000;
  double tolerance = kDefaultClassicalTolerance;
  std::optional<std::size_t> bins;
  GridSpec grid;
};

struct JarzynskiSettings {
  std::size_t samples = 1000000;
  std::size_t trace_points = 1000;
  std::size_t batch_size = 10000;
  /// Independent seed replicates for the batched-variance comparison (0 disables).
  std::size_t replicates = 0;
  double tolerance = kDefaultClassicalTolerance;
};

struct QuantumSettings {
  std::size_t dimension = 512;
  /// Initial levels; raised when needed so that the Gibbs tail stays below 1e-12.
  std::optional<std::size_t> n_max;
  /// Final levels; 0 selects dimension / 2.
  std::size_t m_max = 0;
  double tolerance = 1e-12;
  /// Second hbar value evaluated alongside the main one (unit-convention check).
  std::optional<double> alternate_hbar;
  double display_floor = 2e-4;
};

struct EngineSettings {
  Regime regime = Regime::classical;
  std::vector<double> beta_cold{10.0};
  double omega_i = 10.0;
  std::vector<double> ratios;
};

struct VerifySettings {
  std::size_t trajectories = 1000;
  std::size_t states = 100;
  std::size_t dimension = 256;
  std::size_t carnot_grid = 40;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ExperimentKind kind = ExperimentKind::verify;
  std::string name = "run";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  double beta = 0.2;
  double mass = 1.0;
  double hbar = 1.0;
  std::optional<FrequencyProtocol> protocol;
  std::vector<Drive> drives{Drive::counterdiabatic, Drive::bare};

  ClassicalSettings classical;
  JarzynskiSettings jarzynski;
  QuantumSettings quantum;
  EngineSettings engine;
  VerifySettings verify;

  /// Canonical JSON text the config was parsed from (used for the hash).
  std::string canonical;
};

/// Parses and validates JSON text. Throws ConfigError with a field path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);
/// Configuration for the built-in verification suite.
ExperimentConfig default_verify_config();

/// JSON Schema of the configuration format.
std::string config_schema();

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  /// Parallelism hint; outputs do not depend on it.
  unsigned threads = 1;
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::vector<Check> checks;
  /// JSON text of the summary (also written to <name>_summary.json).
  std::string summary;
  bool ok() const;
};

/// Output directory after applying the flag and environment overrides.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);

RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// Property checks that do not depend on reference numbers.
std::vector<Check> verification_suite(const VerifySettings& settings, std::uint64_t seed,
                                      unsigned threads = 1);

/// Locale-independent formatting with 17 significant digits.
std::string format_number(double value);

}  // namespace stasim
