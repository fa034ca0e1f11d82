#include "hieropo/error.hpp"
#include "hieropo/posterior.hpp"

#include <string>

namespace hieropo {

// Stacked joint over (μ_*, θ_1..θ_m, Y_1..Y_n). Every block follows from
//   θ_s = μ_* + η_s,   Y_t = φ_tᵀθ_{S_t} + ε_t
// with independent μ_* ~ N(μ_q, Σ_q), η_s ~ N(0, Σ_0), ε_t ~ N(0, σ²).
// Conditioning uses one dense Cholesky of the reward block.
std::pair<Vector, Matrix> joint_gaussian_oracle(const LoggedDataset& dataset, const HierModelConfig& config, int task)
{
    dataset.validate();
    const int d = config.d();
    const int m = dataset.m;
    const int n = static_cast<int>(dataset.records.size());
    if (dataset.d != d)
        throw ConfigError("dataset/model dimension mismatch");
    if (task < 0 || task >= m)
        throw ConfigError("task index out of range");
    if (static_cast<long>(m) * d + n > 2000)
        throw OracleScaleError("joint Gaussian oracle limited to m*d + n <= 2000, got " +
                               std::to_string(static_cast<long>(m) * d + n));

    const int latent = d + m * d;
    const int total = latent + n;
    Matrix cov = Matrix::Zero(total, total);
    Vector mean = Vector::Zero(total);

    const auto& sq = config.sigma_q();
    const auto& s0 = config.sigma_0();
    auto theta_at = [d](int s) { return d + s * d; };

    cov.block(0, 0, d, d) = sq;
    mean.head(d) = config.mu_q();
    for (int s = 0; s < m; ++s) {
        mean.segment(theta_at(s), d) = config.mu_q();
        cov.block(0, theta_at(s), d, d) = sq;
        cov.block(theta_at(s), 0, d, d) = sq;
        for (int u = 0; u < m; ++u)
            cov.block(theta_at(s), theta_at(u), d, d) = (s == u) ? Matrix(sq + s0) : sq;
    }

    // Observation map: Y = H · latent + ε
    Matrix h = Matrix::Zero(n, latent);
    for (int t = 0; t < n; ++t) {
        const auto& r = dataset.records[t];
        h.block(t, theta_at(r.task), 1, d) = r.features.transpose();
    }
    const Matrix latent_cov = cov.topLeftCorner(latent, latent);
    const Matrix cross = latent_cov * h.transpose(); // Cov(latent, Y)
    cov.block(0, latent, latent, n) = cross;
    cov.block(latent, 0, n, latent) = cross.transpose();
    cov.block(latent, latent, n, n) =
        h * latent_cov * h.transpose() + config.sigma() * config.sigma() * Matrix::Identity(n, n);
    mean.tail(n) = h * mean.head(latent);

    const int off = theta_at(task);
    Vector post_mean = mean.segment(off, d);
    Matrix post_cov = cov.block(off, off, d, d);
    if (n > 0) {
        Vector y(n);
        for (int t = 0; t < n; ++t)
            y(t) = dataset.records[t].reward;
        const Eigen::LLT<Matrix> llt(cov.block(latent, latent, n, n));
        if (llt.info() != Eigen::Success)
            throw NumericalError("reward covariance block not positive definite");
        const Matrix c_ty = cov.block(off, latent, d, n);
        post_mean += c_ty * llt.solve(y - mean.tail(n));
        post_cov -= c_ty * llt.solve(c_ty.transpose());
    }
    return {post_mean, symmetrize(post_cov)};
}

} // namespace hieropo
