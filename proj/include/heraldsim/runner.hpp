#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace heraldsim::runner {

enum class Command { kModes, kSweep, kSynthesize, kTomography, kReproduceFig3c, kReproduceFig4, kEnd2end, kValidate };

std::string_view to_string(Command c);
/// Throws ConfigError on an unknown name.
Command command_from_string(std::string_view name);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitConvergence = 4;

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct ExperimentSpec {
  Command command = Command::kModes;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> manifest_path;  // rerun: command, seed and config from a manifest
  std::filesystem::path output_dir;                    // empty: default_output_dir(command)
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;                  // "section.key=value"
  unsigned jobs = 1;
};

/// $HERALDSIM_OUT_ROOT/<command>, or ./heraldsim-out/<command>.
std::filesystem::path default_output_dir(Command c);

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<std::string> outputs;  // file names written, manifest last
  std::vector<std::string> warnings;
};

/// Runs one command. Progress goes to `log`; errors propagate as exceptions.
RunResult run(const ExperimentSpec& spec, std::ostream& log);

/// run() with the error taxonomy mapped to exit codes: 2 config, 3 physics
/// precondition (grid, truncation), 4 non-convergence, 1 anything else.
int run_and_report(const ExperimentSpec& spec, std::ostream& log, std::ostream& err);

}  // namespace heraldsim::runner
