#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace funspec::cli {

enum ExitCode : int {
  kOk = 0,
  kToleranceFailure = 1,
  kInputError = 2,
  kNumericFailure = 3,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::vector<std::filesystem::path> inputs;
};

/// simulate: config -> series + exact measure.
int cmd_simulate(const CommandOptions& opts, std::ostream& out);
/// estimate SERIES: lag-window measure, eigenvalue table, detected atoms.
int cmd_estimate(const CommandOptions& opts, std::ostream& out);
/// roundtrip: analytic C -> F -> C errors against --tol.
int cmd_roundtrip(const CommandOptions& opts, std::ostream& out);
/// hfpca [SERIES]: optimal rank-reduced series and its error report.
int cmd_hfpca(const CommandOptions& opts, std::ostream& out);
/// report [DIR]: summary of the outputs found in a directory.
int cmd_report(const CommandOptions& opts, std::ostream& out);

/// Runs a command by name, turning exceptions into exit codes and messages
/// on `err`.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace funspec::cli
