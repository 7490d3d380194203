#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaze_sentinel::cli {

std::string_view tool_version();

// Settings shared by every subcommand. Resolution order, lowest first:
// defaults, the --config JSON file, GAZE_SENTINEL_<KEY> environment variables,
// command-line flags.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 7;
  int participants = 26;
  std::string task = "nf-ef";
  std::string classifier = "forest";  // or "all"
  std::string mode = "full";          // full, first-n, stream
  std::string n_range;                // "a..b" or a single value; empty for the task default
  double width = 5.0;
  double slide = 1.0;
  std::string out = ".";
  std::string profile;  // behavior profile path; empty for the built-in profile

  // Every key except `out`, as sorted compact JSON.
  std::string canonical() const;
  std::string fingerprint() const;
  // One-line provenance: tool version, fingerprint, seed and canonical config.
  std::string provenance() const;
};

// Applies a JSON object of RunConfig keys. Throws Usage on unknown keys or
// wrongly typed values.
void apply_config_json(RunConfig& config, std::string_view json_text);
// Applies GAZE_SENTINEL_* variables found through `getenv`.
using EnvLookup = std::function<const char*(const char*)>;
void apply_environment(RunConfig& config, const EnvLookup& lookup);

// "a..b" expands to a, a+1, ... up to b, with b appended when the unit steps
// miss it; a bare number is a single value. Throws Usage when malformed.
std::vector<double> parse_n_range(std::string_view text);

// Runs the command line (args[0] is the program name) and returns the exit
// status. Failures print one JSON error record on `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int exit_code_for(std::string_view error_kind);

}  // namespace gaze_sentinel::cli
