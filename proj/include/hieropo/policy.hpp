#pragma once

#include "hieropo/linalg.hpp"
#include "hieropo/posterior.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hieropo {

enum class Learner { hier, flat, oracle, single };

std::string_view to_string(Learner learner);
/// Throws ConfigError on unknown tags.
Learner parse_learner(std::string_view tag);

/// Pessimistic estimate for one (context, action): lcb = r_hat − width.
struct RewardEstimate {
    double r_hat = 0.0;
    double width = 0.0;
    double lcb = 0.0;
    double alpha = 0.0;
};

/// K×d feature matrix; row a is φ(x, a).
struct ContextSlate {
    Matrix features;

    int num_actions() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
};

/// Gaussian belief over one task's parameter.
struct TaskRewardModel {
    Vector mean;
    Matrix cov;
};

/// Immutable after fitting; safe to share between threads.
struct LearnedPolicy {
    Learner learner = Learner::hier;
    double alpha = 0.0;
    int d = 0;
    std::vector<TaskRewardModel> tasks;

    int m() const { return static_cast<int>(tasks.size()); }
};

std::vector<RewardEstimate> score(const LearnedPolicy& policy, int task, const ContextSlate& slate);

/// Index of the largest lcb, lowest index on ties.
int act(const LearnedPolicy& policy, int task, const ContextSlate& slate);

LearnedPolicy fit_hieropo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha);
LearnedPolicy fit_flatopo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha);
LearnedPolicy fit_oracleopo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha,
                            const Vector& mu_star);

/// Conjugate linear-Gaussian learner for a log from one task with prior
/// N(prior_mean, prior_cov). The result has a single task entry.
LearnedPolicy fit_single_task(const LoggedDataset& one_task, const Vector& prior_mean, const Matrix& prior_cov,
                              double sigma, double alpha);

// Export format:
// {"learner": "hier", "d": 4, "m": 10, "alpha": 0.1,
//  "tasks": [{"task_id": 1, "mean": [...], "cov": [row-major d*d]}, ...]}
std::string policy_to_json(const LearnedPolicy& policy);
LearnedPolicy policy_from_json(const std::string& text);
void write_policy(const LearnedPolicy& policy, const std::filesystem::path& path);
LearnedPolicy read_policy(const std::filesystem::path& path);

} // namespace hieropo
