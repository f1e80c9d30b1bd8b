#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "run_config.hpp"

namespace heavytail::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kInvalidInput = 2,
  kNotConverged = 3,
};

/// Command-line flags; each one overrides the matching config entry.
struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> data;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

/// Loads the config, applies flag overrides, runs the command and writes its
/// files into opts.out. Errors are reported on `log` and mapped to exit codes.
int run_command(Command command, const GlobalOptions& opts, std::ostream& log);

int cmd_sample(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_fit(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_convergence(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_taildep(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_discrepancy(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

}  // namespace heavytail::cli
