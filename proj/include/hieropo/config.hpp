#pragma once

#include "hieropo/envsim.hpp"
#include "hieropo/policy.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hieropo {

/// Everything a CLI run needs. Defaults reproduce the synthetic experiment
/// (d=4, K=5, m=10, n=500, σ=σ_0=σ_q=0.5, α=0.1, 30 runs) and the recommender
/// preparation (rank 10, k=7, K=10, m=100).
struct ExperimentConfig {
    SyntheticEnvConfig env;
    std::vector<Learner> learners{Learner::hier, Learner::flat, Learner::oracle};
    double alpha = 0.1;
    double delta = 0.1;
    int n_runs = 30;
    std::string sweep_axis = "n";
    std::vector<int> sweep_values{100, 250, 500, 1000};
    int threads = 0;
    std::optional<double> gamma; // forces γ in bound reports

    int rank = 10;
    double lambda_reg = 0.1;
    int als_sweeps = 20;
    int gmm_k = 7;
    int gmm_max_iters = 200;
    double gmm_tol = 1e-8;
    int recsys_K = 10;
    int recsys_m = 100;

    /// Throws ConfigError for unknown keys or unparsable values.
    void set(std::string_view key, std::string_view value);
    void validate() const;

    /// `key = value` lines, one per setting, readable by load().
    std::string to_text() const;
    /// Applies a flat key-value file (`#` comments, blank lines ignored).
    void load(const std::filesystem::path& path);
};

} // namespace hieropo
