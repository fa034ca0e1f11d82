#pragma once

#include "hieropo/envsim.hpp"
#include "hieropo/posterior.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hieropo {

enum class BoundVariant { general, diagonal };

/// Scalar inputs of the suboptimality bounds. Eigen-quantities are the ones
/// of the matrices actually used by the learner.
struct BoundInputs {
    double delta = 0.1;
    int d = 1;
    double gamma = 0.0;
    double sigma = 1.0;
    double lambda_min_prec_0 = 1.0;    // λ_d(Σ_0⁻¹)
    double lambda_min_prec_q = 1.0;    // λ_d(Σ_q⁻¹)
    double lambda_max_cov_0 = 1.0;     // λ_1(Σ_0)
    double lambda_min_prec_flat = 1.0; // λ_d((Σ_q + Σ_0)⁻¹)
    std::vector<int> task_counts;      // n_z
    /// λ_1(G_{z,*}⁻¹) per task, +inf for singular G_{z,*}. Needed by the
    /// general variant only.
    std::vector<double> lambda_max_inv_opt_prec;
    /// Features 1-sparse and Σ_q, Σ_0 diagonal; gates the diagonal variant.
    bool sparse_diagonal_model = false;

    void validate() const;
};

struct BoundReport {
    double alpha = 0.0;
    double epsilon_task = 0.0;
    double epsilon_hyper = 0.0;
    double epsilon_total = 0.0;
    BoundVariant variant = BoundVariant::general;
    double gamma_used = 0.0;
    std::string diagnostic;
};

/// √(5 d ln(1/δ)). Throws ConfigError unless δ ∈ (0, 1) and d ≥ 1.
double alpha_schedule(int d, double delta);

/// Fills eigen-quantities from the model and counts from the statistics.
/// `optimal_precisions` (G_{z,*} per task) may be empty when only the
/// diagonal variant is needed. sparse_diagonal_model only reflects the
/// covariances here; callers AND it with the feature check from
/// check_assumptions.
BoundInputs make_bound_inputs(const HierModelConfig& model, const std::vector<TaskStatistics>& stats, double gamma,
                              double delta, const std::vector<Matrix>& optimal_precisions = {});

/// Single-task bound α√(4d / (λ_d(Σ_0⁻¹) + γσ⁻²n)); epsilon_hyper = 0.
BoundReport single_task_bound(const BoundInputs& inputs, int n);

/// Task term plus hyper-parameter term for one task. Tasks with n_z = 0
/// contribute nothing to the hyper term. The diagonal variant throws
/// ConfigError unless inputs.sparse_diagonal_model or `force`.
BoundReport multi_task_bound(const BoundInputs& inputs, int task, BoundVariant variant, bool force = false);

/// Bound for the learner that ignores the hierarchy.
double flatopo_bound(const BoundInputs& inputs, int n_s);

/// Monte Carlo estimate of G_{s,*} = E[φ* φ*ᵀ] under the optimal policy.
struct OptimalPrecision {
    Matrix mean;
    Matrix std_error; // entrywise
};
OptimalPrecision estimate_optimal_precision(const Environment& env, int task, int n_eval, Rng& rng);

/// All tasks, stream (seed, optimal_precision, task); parallel over tasks.
std::vector<OptimalPrecision> estimate_optimal_precisions(const Environment& env, int n_eval, std::uint64_t seed);

struct GammaEstimate {
    double gamma = 0.0;
    std::vector<double> per_task; // +inf when the task imposes no constraint
};

/// Largest γ ≥ 0 with G_s ⪰ γσ⁻²n_s G_{s,*} for every task. Directions
/// outside the range of G_{s,*} are unconstrained; the G_s mass there is
/// handled through the Schur complement, so the returned value passes the
/// direct PSD check.
GammaEstimate estimate_gamma(const std::vector<TaskStatistics>& stats, const std::vector<Matrix>& optimal_precisions,
                             double sigma);
GammaEstimate estimate_gamma(const std::vector<TaskStatistics>& stats, const Environment& env,
                             const HierModelConfig& model, int n_eval, std::uint64_t seed);

struct AssumptionReport {
    double max_feature_norm = 0.0;
    bool bounded_features = true;                // every ‖φ‖ ≤ 1
    std::vector<std::size_t> oversized_records;  // 0-based indices of records with ‖φ‖ > 1
    bool has_gamma = false;                      // γ needs the environment
    GammaEstimate gamma;
    bool features_one_sparse = true;
    bool covariances_diagonal = true;
    bool sparse_diagonal_model = true;           // gates the diagonal variant
};

AssumptionReport check_assumptions(const LoggedDataset& dataset, const HierModelConfig& model,
                                   const Environment* env = nullptr, int n_eval = 10000, std::uint64_t seed = 1);

} // namespace hieropo
