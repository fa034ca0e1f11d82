#include "hieropo/reference.hpp"

#include "hieropo/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hieropo::reference {

std::vector<TaskStatistics> compute_task_statistics(const LoggedDataset& dataset, const HierModelConfig& config)
{
    if (dataset.d != config.d())
        throw ConfigError("dataset/model dimension mismatch");
    dataset.validate();
    const int d = dataset.d;
    std::vector<TaskStatistics> out(dataset.m, TaskStatistics{Vector::Zero(d), Matrix::Zero(d, d), 0});
    for (const auto& r : dataset.records) {
        auto& st = out[r.task];
        st.b += r.reward * r.features;
        st.g.noalias() += r.features * r.features.transpose();
        ++st.n;
    }
    const double w = 1.0 / (config.sigma() * config.sigma());
    for (auto& st : out) {
        st.b *= w;
        st.g *= w;
    }
    return out;
}

std::vector<EvaluationResult> evaluate_policies(const Environment& env, const std::vector<const LearnedPolicy*>& policies,
                                                int task, int n_eval, Rng& rng)
{
    const auto n_pol = policies.size();
    const Vector theta = env.thetas.row(task).transpose();
    std::vector<double> opt(n_eval);
    std::vector<std::vector<double>> learned(n_pol, std::vector<double>(n_eval));
    for (int i = 0; i < n_eval; ++i) {
        const auto slate = env.sample_slate(rng);
        opt[i] = slate.features.row(env.optimal_action(task, slate)).dot(theta);
        for (std::size_t p = 0; p < n_pol; ++p)
            learned[p][i] = slate.features.row(act(*policies[p], task, slate)).dot(theta);
    }
    std::vector<EvaluationResult> out(n_pol);
    double opt_sum = 0.0;
    for (int i = 0; i < n_eval; ++i)
        opt_sum += opt[i];
    for (std::size_t p = 0; p < n_pol; ++p) {
        double learned_sum = 0.0;
        double diff_sum = 0.0;
        for (int i = 0; i < n_eval; ++i) {
            learned_sum += learned[p][i];
            diff_sum += opt[i] - learned[p][i];
        }
        const double mean = diff_sum / n_eval;
        double ss = 0.0;
        for (int i = 0; i < n_eval; ++i) {
            const double e = (opt[i] - learned[p][i]) - mean;
            ss += e * e;
        }
        out[p] = {opt_sum / n_eval, learned_sum / n_eval, mean,
                  n_eval > 1 ? std::sqrt(ss / (n_eval - 1) / n_eval) : 0.0, n_eval};
    }
    return out;
}

void solve_factor_rows(const std::vector<std::vector<std::pair<int, double>>>& adjacency, const Matrix& fixed,
                       double lambda_reg, Matrix& out)
{
    const auto rank = fixed.cols();
    out.resize(static_cast<Eigen::Index>(adjacency.size()), rank);
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        Matrix a = lambda_reg * Matrix::Identity(rank, rank);
        Vector b = Vector::Zero(rank);
        for (const auto& [j, r] : adjacency[i]) {
            a.noalias() += fixed.row(j).transpose() * fixed.row(j);
            b += r * fixed.row(j).transpose();
        }
        out.row(static_cast<Eigen::Index>(i)) = a.llt().solve(b).transpose();
    }
}

double gmm_e_step(const Matrix& points, const Vector& weights, const Matrix& means, const std::vector<Matrix>& covs,
                  Matrix& resp)
{
    const auto n = points.rows();
    const auto k = weights.size();
    const auto d = static_cast<double>(points.cols());
    resp.resize(n, k);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const Eigen::LLT<Matrix> llt(covs[c]);
            const Matrix& l = llt.matrixL();
            const double log_det = 2.0 * l.diagonal().array().log().sum();
            const double log_norm = std::log(weights(c)) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
            const Vector diff = (points.row(i) - means.row(c)).transpose();
            const Vector z = llt.matrixL().solve(diff);
            resp(i, c) = log_norm - 0.5 * z.squaredNorm();
            top = std::max(top, resp(i, c));
        }
        double sum = 0.0;
        for (Eigen::Index c = 0; c < k; ++c)
            sum += std::exp(resp(i, c) - top);
        const double lse = top + std::log(sum);
        for (Eigen::Index c = 0; c < k; ++c)
            resp(i, c) = std::exp(resp(i, c) - lse);
        total += lse;
    }
    return total;
}

} // namespace hieropo::reference
