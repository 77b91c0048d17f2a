#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// tests can drive it in-process.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace opstat::cli {

inline constexpr int kOk = 0;
inline constexpr int kWarnings = 1;
inline constexpr int kInputError = 2;

/// Effective settings of one invocation; echoed into every report.
struct RunConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string out;
  double alpha = 0.05;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::string method = "ks";
  std::string format = "json";
  std::map<std::string, std::string> extra;  // subcommand-specific settings
};

/// `# opstat <subcommand> seed=<n> key=value ...` (output path excluded so
/// reruns into different files stay byte-identical).
std::string echo_comment(const RunConfig& config, char comment = '#');

/// Same settings as a compact JSON object.
std::string echo_json(const RunConfig& config);

/// args excludes the program name. Returns 0, 1 (completed with warnings)
/// or 2 (input or configuration error).
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace opstat::cli
