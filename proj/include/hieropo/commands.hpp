#pragma once

// Subcommand bodies behind the `hieropo` binary. Every failure surfaces as
// CommandError("<stage>: <cause>").

#include "hieropo/config.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace hieropo {

class CommandError : public std::runtime_error {
public:
    CommandError(const std::string& stage, const std::string& cause) : std::runtime_error(stage + ": " + cause) {}
};

namespace fs = std::filesystem;

/// Shortest round-trip decimal.
std::string format_double(double v);

/// Writes the log (JSONL or CSV by extension) and the simulator-only
/// environment JSON. Uses streams (seed, environment, 0) and (seed, log, 0).
void cmd_generate(const ExperimentConfig& config, const fs::path& dataset_out, const fs::path& env_out);

/// `model_path`: JSON with the known model (e.g. params.json from
/// recsys-prep); otherwise the isotropic model from `config`. The oracle
/// learner requires `env_path`.
void cmd_fit(const fs::path& dataset_path, const ExperimentConfig& config, Learner learner, const fs::path& policy_out,
             const std::optional<fs::path>& env_path = std::nullopt,
             const std::optional<fs::path>& model_path = std::nullopt);

/// Per-task rows plus one aggregate row.
void cmd_evaluate(const fs::path& policy_path, const fs::path& env_path, const ExperimentConfig& config,
                  const fs::path& csv_out);

/// `<out_dir>/sweep_runs.csv` (one row per axis value × learner × run) and
/// `<out_dir>/sweep_summary.csv` (mean and SE over runs).
void cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir);

/// Bound report JSON (inputs echoed) and a CSV with one row per task/variant.
void cmd_bounds(const fs::path& dataset_path, const fs::path& env_path, const ExperimentConfig& config,
                const fs::path& json_out, const fs::path& csv_out,
                const std::optional<fs::path>& model_path = std::nullopt);

/// ALS → GMM → parameter estimation → environment. Writes
/// factorization.json, params.json and environment.json into `out_dir`.
void cmd_recsys_prep(const fs::path& ratings_path, const ExperimentConfig& config, const fs::path& out_dir);

} // namespace hieropo
