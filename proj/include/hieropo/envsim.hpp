#pragma once

#include "hieropo/policy.hpp"
#include "hieropo/posterior.hpp"
#include "hieropo/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hieropo {

/// Synthetic multi-task bandit. Defaults are the small-σ_q synthetic setting.
struct SyntheticEnvConfig {
    int d = 4;
    int K = 5;
    int m = 10;
    int n = 500;
    double sigma_q = 0.5;
    double sigma_0 = 0.5;
    double sigma = 0.5;
    std::uint64_t seed = 1;
    int n_eval = 10000;

    void validate() const;
    /// The model the learners are told about: N(0, σ_q²I), N(μ_*, σ_0²I), σ.
    HierModelConfig model() const { return HierModelConfig::isotropic(d, sigma_q, sigma_0, sigma); }
};

/// Draws K×d slates. Either i.i.d. uniform entries on [−h, h] (rows rescaled
/// to norm ≤ 1 when needed) or K distinct rows of a fixed item matrix.
struct SlateSampler {
    enum class Kind { uniform_box, item_pool };

    Kind kind = Kind::uniform_box;
    double half_width = 0.5;
    Matrix items;      // item_pool: already rescaled rows
    double item_scale = 1.0;

    ContextSlate sample(Rng& rng, int K, int d) const;
};

/// Ground truth. Learners only see it through fit_oracleopo's μ_* argument.
struct Environment {
    Vector mu_star;
    Matrix thetas; // m×d, row s = θ_{s,*}
    int K = 0;
    double sigma = 0.0;
    SlateSampler sampler;

    int m() const { return static_cast<int>(thetas.rows()); }
    int d() const { return static_cast<int>(thetas.cols()); }

    ContextSlate sample_slate(Rng& rng) const { return sampler.sample(rng, K, d()); }
    /// argmax_a φ(x,a)ᵀθ_s, lowest index on ties.
    int optimal_action(int task, const ContextSlate& slate) const;
};

struct EvaluationResult {
    double value_opt = 0.0;
    double value_learned = 0.0;
    double suboptimality = 0.0;
    double mc_std_error = 0.0;
    int n_eval = 0;
};

Environment sample_environment(const SyntheticEnvConfig& config, Rng& rng);

/// Logging-policy hook: returns the 0-based action for a slate.
using LoggingPolicy = std::function<int(const ContextSlate& slate, int task, Rng& rng)>;
LoggingPolicy uniform_logging();

/// n interactions: uniform task, fresh slate, logged action, Gaussian reward.
LoggedDataset generate_log(const Environment& env, int n, Rng& rng, const LoggingPolicy& logging = uniform_logging());

/// Monte Carlo value of the learned vs optimal policy on one task with
/// paired slates. Slates are drawn serially from `rng`; per-slate values are
/// computed in parallel and reduced in slate order.
EvaluationResult evaluate_policy(const Environment& env, const LearnedPolicy& policy, int task, int n_eval, Rng& rng);

/// Several policies on the same slates (common random numbers).
std::vector<EvaluationResult> evaluate_policies(const Environment& env, const std::vector<const LearnedPolicy*>& policies,
                                                int task, int n_eval, Rng& rng);

/// Fit one learner. The oracle gets env.mu_star; no other learner sees env.
LearnedPolicy fit_learner(Learner learner, const LoggedDataset& dataset, const HierModelConfig& model, double alpha,
                          const Environment* env);

struct LearnerRun {
    double mean_suboptimality = 0.0; // average over tasks
    double std_error = 0.0;          // Monte Carlo error of that average
    std::vector<double> per_task;
};

struct RunResult {
    int run_id = 0;
    std::vector<LearnerRun> learners; // same order as the learner list
};

struct LearnerSummary {
    Learner learner = Learner::hier;
    double mean = 0.0;
    double std_error = 0.0; // sample std of run means / √n_runs; 0 when n_runs = 1
};

struct ExperimentResult {
    std::vector<Learner> learners;
    std::vector<RunResult> runs;
    std::vector<LearnerSummary> summary;
};

/// Builds a fresh environment for run r. Synthetic runs use
/// sample_environment; recsys runs plug in their own builder.
using EnvironmentFactory = std::function<Environment(int run)>;

/// n_runs independent runs (parallel across runs). Run r draws its
/// environment, log and evaluation slates from streams keyed by (seed, r), so
/// results do not depend on the thread count, and runs at different n share
/// environments and nested logs.
ExperimentResult run_experiment(const SyntheticEnvConfig& config, const HierModelConfig& model,
                                const std::vector<Learner>& learners, double alpha, int n_runs,
                                const EnvironmentFactory& factory = {});

/// Convenience for the synthetic setting (model = config.model()).
ExperimentResult run_experiment(const SyntheticEnvConfig& config, const std::vector<Learner>& learners, double alpha,
                                int n_runs);

std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);
void write_environment(const Environment& env, const std::filesystem::path& path);
Environment read_environment(const std::filesystem::path& path);

std::string model_to_json(const HierModelConfig& model);
HierModelConfig model_from_json(const std::string& text);

} // namespace hieropo
