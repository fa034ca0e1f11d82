#pragma once

#include "hieropo/linalg.hpp"

#include <utility>
#include <vector>

namespace hieropo {

/// Known parameters of the two-level linear-Gaussian model:
///   μ_* ~ N(mu_q, sigma_q),  θ_s | μ_* ~ N(μ_*, sigma_0),  Y ~ N(φᵀθ_s, sigma²).
/// Validated on construction; the precision matrices are cached.
class HierModelConfig {
public:
    HierModelConfig(Vector mu_q, Matrix sigma_q, Matrix sigma_0, double sigma);

    /// mu_q = 0, Σ_q = sigma_q²·I, Σ_0 = sigma_0²·I.
    static HierModelConfig isotropic(int d, double sigma_q, double sigma_0, double sigma);

    int d() const { return static_cast<int>(mu_q_.size()); }
    const Vector& mu_q() const { return mu_q_; }
    const Matrix& sigma_q() const { return sigma_q_; }
    const Matrix& sigma_0() const { return sigma_0_; }
    double sigma() const { return sigma_; }

    const Matrix& prec_q() const { return prec_q_; }
    const Matrix& prec_0() const { return prec_0_; }

private:
    Vector mu_q_;
    Matrix sigma_q_;
    Matrix sigma_0_;
    double sigma_;
    Matrix prec_q_;
    Matrix prec_0_;
};

/// One logged interaction. `task` and `action` are 0-based in memory; the
/// file formats use 1-based ids.
struct LoggedRecord {
    int task = 0;
    int action = 0;
    Vector features; // φ(X_t, A_t)
    double reward = 0.0;
};

struct LoggedDataset {
    int m = 0;
    int d = 0;
    int K = 0;
    std::vector<LoggedRecord> records;

    /// Throws DataError on out-of-range task ids or wrong feature lengths.
    void validate() const;
};

/// Sufficient statistics of one task: B_s = σ⁻² Σ φ y, G_s = σ⁻² Σ φ φᵀ.
struct TaskStatistics {
    Vector b;
    Matrix g;
    int n = 0;
};

/// N(μ̃_s, Σ̃_s) of θ_s given μ_* and the task's own data. The mean is an
/// affine function of μ_*: μ̃_s(μ) = gain·μ + offset with gain = Σ̃_s Σ_0⁻¹ and
/// offset = Σ̃_s B_s.
struct ConditionalTaskPosterior {
    Matrix cov;
    Matrix gain;
    Vector offset;

    Vector mean(const Vector& mu) const { return gain * mu + offset; }
};

/// N(μ̄, Σ̄) of μ_* given the whole log.
struct HyperPosterior {
    Vector mean;
    Matrix cov;
};

/// N(μ̂_s, Σ̂_s) of θ_s given the whole log, μ_* integrated out.
struct MarginalTaskPosterior {
    Vector mean;
    Matrix cov;
};

/// Everything the hierarchical learner needs, computed in one pass.
struct HierarchicalPosterior {
    std::vector<TaskStatistics> stats;
    std::vector<ConditionalTaskPosterior> conditionals;
    HyperPosterior hyper;
    std::vector<MarginalTaskPosterior> marginals;
};

/// Per-task statistics for all m tasks (empty tasks get zeros). Parallel over
/// tasks; each task sums its records in log order.
std::vector<TaskStatistics> compute_task_statistics(const LoggedDataset& dataset, const HierModelConfig& config);

ConditionalTaskPosterior conditional_task_posterior(const TaskStatistics& stats, const HierModelConfig& config);

/// Hyper-posterior with the inverse-free per-task terms (G_sΣ_0 + I)⁻¹G_s and
/// (G_sΣ_0 + I)⁻¹B_s, summed in task order.
HyperPosterior hyper_posterior(const std::vector<TaskStatistics>& all_stats, const HierModelConfig& config);

MarginalTaskPosterior marginal_task_posterior(const TaskStatistics& stats, const HyperPosterior& hyper,
                                              const HierModelConfig& config);

/// Same quantities when the hierarchy is ignored: prior N(μ_q, Σ_q + Σ_0).
MarginalTaskPosterior flat_task_posterior(const TaskStatistics& stats, const HierModelConfig& config);

HierarchicalPosterior infer(const LoggedDataset& dataset, const HierModelConfig& config);

/// Independent check: build the dense joint Gaussian over
/// (θ_task, Y_1..n) implied by the graphical model and condition on all
/// rewards directly. Refuses problems with m·d + n > 2000.
std::pair<Vector, Matrix> joint_gaussian_oracle(const LoggedDataset& dataset, const HierModelConfig& config, int task);

} // namespace hieropo
