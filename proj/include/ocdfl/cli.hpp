#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ocdfl/config.hpp"
#include "ocdfl/errors.hpp"

namespace ocdfl::cli {

enum class Command { run, sweep_theta, prop1_suite, selector_oracle, dump_instance };

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Bad flag, bad value or missing file on the command line.
class UsageError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct RunSpec {
    Command command = Command::run;
    std::optional<std::filesystem::path> config_path;
    /// "section.key=value", from --set and from the dedicated flags.
    std::vector<std::string> overrides;
    std::filesystem::path output_dir = "out";
    /// Resolved experiment config (file, then overrides), validated.
    ExperimentConfig config;

    std::vector<Scheme> schemes;      // run
    bool write_checkpoints = false;   // run
    std::vector<double> grid;         // sweep-theta
    std::size_t instances = 0;        // sweep-theta: >0 selects random-instance mode
    std::size_t neighbors = 30;       // sweep-theta / dump-instance --random
    std::size_t triples = 100000;     // prop1-suite
    std::filesystem::path instance_path; // selector-oracle
    std::optional<double> oracle_theta;  // selector-oracle, defaults to 0
    std::size_t dump_round = 1;          // dump-instance
    std::size_t dump_node = 0;           // dump-instance
    bool dump_random = false;            // dump-instance
};

/// Parses arguments (without the program name). Throws UsageError naming the
/// offending flag, or ConfigError for invalid configuration values.
RunSpec parse_and_validate(const std::vector<std::string>& args);

/// Comma-separated list of reals, e.g. "0,0.005,0.01".
std::vector<double> parse_grid(const std::string& text);

/// Runs the command. All artifacts go under spec.output_dir.
int execute(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Median of the given selected counts; 0 when there are none.
double median_selected(const std::vector<std::size_t>& counts);

} // namespace ocdfl::cli
