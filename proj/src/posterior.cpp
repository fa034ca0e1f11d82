#include "hieropo/posterior.hpp"

#include "hieropo/error.hpp"

#include <cmath>
#include <string>

namespace hieropo {

HierModelConfig::HierModelConfig(Vector mu_q, Matrix sigma_q, Matrix sigma_0, double sigma)
    : mu_q_(std::move(mu_q)), sigma_q_(std::move(sigma_q)), sigma_0_(std::move(sigma_0)), sigma_(sigma)
{
    const auto d = mu_q_.size();
    if (d == 0)
        throw ConfigError("feature dimension d must be positive");
    if (sigma_q_.rows() != d || sigma_0_.rows() != d)
        throw ConfigError("covariance shapes do not match d = " + std::to_string(d));
    if (!mu_q_.allFinite())
        throw ConfigError("mu_q has non-finite entries");
    require_spd(sigma_q_, "Sigma_q");
    require_spd(sigma_0_, "Sigma_0");
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
        throw ConfigError("reward noise sigma must be positive");
    sigma_q_ = symmetrize(sigma_q_);
    sigma_0_ = symmetrize(sigma_0_);
    prec_q_ = symmetrize(spd_inverse(sigma_q_));
    prec_0_ = symmetrize(spd_inverse(sigma_0_));
}

HierModelConfig HierModelConfig::isotropic(int d, double sigma_q, double sigma_0, double sigma)
{
    if (d <= 0)
        throw ConfigError("feature dimension d must be positive");
    const Matrix eye = Matrix::Identity(d, d);
    return HierModelConfig(Vector::Zero(d), sigma_q * sigma_q * eye, sigma_0 * sigma_0 * eye, sigma);
}

void LoggedDataset::validate() const
{
    if (m <= 0 || d <= 0)
        throw DataError("dataset header needs positive m and d");
    for (std::size_t t = 0; t < records.size(); ++t) {
        const auto& r = records[t];
        if (r.task < 0 || r.task >= m)
            throw DataError("record " + std::to_string(t) + ": task id outside [1, " + std::to_string(m) + "]");
        if (r.features.size() != d)
            throw DataError("record " + std::to_string(t) + ": expected " + std::to_string(d) + " features, got " +
                            std::to_string(r.features.size()));
    }
}

std::vector<TaskStatistics> compute_task_statistics(const LoggedDataset& dataset, const HierModelConfig& config)
{
    if (dataset.d != config.d())
        throw ConfigError("dataset d = " + std::to_string(dataset.d) + " but model d = " + std::to_string(config.d()));
    dataset.validate();

    const int m = dataset.m;
    const int d = dataset.d;
    std::vector<std::vector<std::size_t>> by_task(m);
    for (std::size_t t = 0; t < dataset.records.size(); ++t)
        by_task[dataset.records[t].task].push_back(t);

    const double w = 1.0 / (config.sigma() * config.sigma());
    std::vector<TaskStatistics> out(m);
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < m; ++s) {
        TaskStatistics st{Vector::Zero(d), Matrix::Zero(d, d), 0};
        for (const auto t : by_task[s]) {
            const auto& r = dataset.records[t];
            st.b += r.reward * r.features;
            st.g.noalias() += r.features * r.features.transpose();
            ++st.n;
        }
        st.b *= w;
        st.g *= w;
        out[s] = std::move(st);
    }
    return out;
}

ConditionalTaskPosterior conditional_task_posterior(const TaskStatistics& stats, const HierModelConfig& config)
{
    ConditionalTaskPosterior post;
    if (stats.n == 0) {
        const int d = config.d();
        post.cov = config.sigma_0();
        post.gain = Matrix::Identity(d, d);
        post.offset = Vector::Zero(d);
        return post;
    }
    const Matrix precision = config.prec_0() + stats.g;
    post.cov = symmetrize(spd_inverse(precision));
    post.gain = post.cov * config.prec_0();
    post.offset = post.cov * stats.b;
    return post;
}

HyperPosterior hyper_posterior(const std::vector<TaskStatistics>& all_stats, const HierModelConfig& config)
{
    const int d = config.d();
    const Matrix eye = Matrix::Identity(d, d);
    Matrix precision = config.prec_q();
    Vector rhs = config.prec_q() * config.mu_q();
    for (const auto& st : all_stats) {
        if (st.n == 0)
            continue;
        // (Σ_0 + G⁻¹)⁻¹ = (GΣ_0 + I)⁻¹G and (Σ_0 + G⁻¹)⁻¹G⁻¹B = (GΣ_0 + I)⁻¹B
        const Eigen::PartialPivLU<Matrix> lu(st.g * config.sigma_0() + eye);
        precision += symmetrize(lu.solve(st.g));
        rhs += lu.solve(st.b);
    }
    HyperPosterior hyper;
    hyper.cov = symmetrize(spd_inverse(symmetrize(precision)));
    hyper.mean = hyper.cov * rhs;
    return hyper;
}

MarginalTaskPosterior marginal_task_posterior(const TaskStatistics& stats, const HyperPosterior& hyper,
                                              const HierModelConfig& config)
{
    const auto cond = conditional_task_posterior(stats, config);
    MarginalTaskPosterior post;
    post.mean = cond.mean(hyper.mean);
    post.cov = symmetrize(cond.cov + cond.gain * hyper.cov * cond.gain.transpose());
    return post;
}

MarginalTaskPosterior flat_task_posterior(const TaskStatistics& stats, const HierModelConfig& config)
{
    const Matrix prior_cov = config.sigma_q() + config.sigma_0();
    MarginalTaskPosterior post;
    if (stats.n == 0) {
        post.mean = config.mu_q();
        post.cov = symmetrize(prior_cov);
        return post;
    }
    const Matrix prior_prec = symmetrize(spd_inverse(prior_cov));
    post.cov = symmetrize(spd_inverse(prior_prec + stats.g));
    post.mean = post.cov * (prior_prec * config.mu_q() + stats.b);
    return post;
}

HierarchicalPosterior infer(const LoggedDataset& dataset, const HierModelConfig& config)
{
    HierarchicalPosterior out;
    out.stats = compute_task_statistics(dataset, config);
    out.hyper = hyper_posterior(out.stats, config);
    const int m = static_cast<int>(out.stats.size());
    out.conditionals.resize(m);
    out.marginals.resize(m);
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < m; ++s) {
        out.conditionals[s] = conditional_task_posterior(out.stats[s], config);
        const auto& cond = out.conditionals[s];
        out.marginals[s].mean = cond.mean(out.hyper.mean);
        out.marginals[s].cov = symmetrize(cond.cov + cond.gain * out.hyper.cov * cond.gain.transpose());
    }
    return out;
}

} // namespace hieropo
