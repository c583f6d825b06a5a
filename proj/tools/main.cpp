#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "stasim/runner.hpp"

namespace {

int report(const stasim::RunResult& result) {
  for (const auto& check : result.checks) {
    std::cout << (check.pass ? "PASS " : "FAIL ") << check.name << " value=" << stasim::format_number(check.value)
              << " threshold=" << stasim::format_number(check.threshold) << "\n";
  }
  for (const auto& file : result.files) std::cout << "wrote " << file.string() << "\n";
  return result.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Work statistics and Otto-cycle experiments for a driven harmonic oscillator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out-dir", out_dir, std::string("Output directory (overrides ") + stasim::kOutDirEnv + ")");
  app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "Run the built-in property checks");
  auto* schema = app.add_subcommand("schema", "Print the JSON schema of the config format");

  CLI11_PARSE(app, argc, argv);

  stasim::RunOptions options;
  options.seed = seed;
  if (out_dir) options.out_dir = *out_dir;
  options.threads = threads;

  try {
    if (*schema) {
      std::cout << stasim::config_schema() << "\n";
      return 0;
    }
    if (*verify) return report(stasim::run(stasim::default_verify_config(), options));
    if (*run) return report(stasim::run(stasim::load_config(config_path), options));
  } catch (const stasim::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
