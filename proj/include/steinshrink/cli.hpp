#pragma once

// Command implementations behind tools/steinshrink. Each returns a process
// exit code and writes only to the streams it is given.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "steinshrink/risksim.hpp"

namespace steinshrink::cli {

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,   // verify / ref-table found a failing check
    kConfigError = 2,
    kSimulationError = 3,
    kDataError = 4,     // unreadable or malformed input/output files
    kUsageError = 64,
};

struct RunConfig {
    ExperimentConfig experiment;
    std::string out;             // empty or "-" means stdout
    std::string format = "csv";  // csv | json
};

/// Parses a JSON run config. Unknown keys and wrong types raise ConfigError.
/// `seed_override` (the STEINSHRINK_SEED value, if set) replaces "seed".
RunConfig parse_run_config(const std::string& json_text,
                           const std::optional<std::string>& seed_override = std::nullopt);

struct SimulateOptions {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> workers;
    bool timing = true;  // JSON only
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);

int cmd_exact_risk(long n, long r, std::ostream& out, std::ostream& err);

struct EstimateOptions {
    std::string data_path;
    std::string estimator;
    std::optional<std::string> b;
    std::optional<long> rank;  // defaults to p
    std::optional<std::string> out;
};

/// Data: CSV of X with p rows and n columns, no header. Writes the estimate
/// as CSV; lambda/b diagnostics go to `err` as one JSON object.
int cmd_estimate(const EstimateOptions& opts, std::ostream& out, std::ostream& err);

/// Suite name or "all".
int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& out, std::ostream& err);

int cmd_ref_table(const std::string& selector, long replications, std::uint64_t seed, unsigned workers,
               std::ostream& out, std::ostream& err);

/// Parses a p x n numeric CSV; errors name the row and column (1-based).
Matrix read_matrix_csv(std::istream& in);

}  // namespace steinshrink::cli
