#include "hieropo/error.hpp"
#include "hieropo/posterior.hpp"

#include "test_support.hpp"

#include <algorithm>

using namespace hieropo;
using namespace hieropo::testing;

namespace {

// Single-level Bayesian linear regression in covariance (Kalman) form:
//   mean = μ + ΣXᵀ(XΣXᵀ + σ²I)⁻¹(y − Xμ),  cov = Σ − ΣXᵀ(XΣXᵀ + σ²I)⁻¹XΣ.
// Shares no code path with the precision-form posterior.
std::pair<Vector, Matrix> regression_posterior(const LoggedDataset& ds, const Vector& mu, const Matrix& cov,
                                               double sigma)
{
    const int n = static_cast<int>(ds.records.size());
    if (n == 0)
        return {mu, cov};
    Matrix x(n, mu.size());
    Vector y(n);
    for (int t = 0; t < n; ++t) {
        x.row(t) = ds.records[t].features.transpose();
        y(t) = ds.records[t].reward;
    }
    const Matrix s = x * cov * x.transpose() + sigma * sigma * Matrix::Identity(n, n);
    const Matrix k = cov * x.transpose() * s.inverse();
    return {mu + k * (y - x * mu), cov - k * x * cov};
}

} // namespace

TEST_CASE("model config validation")
{
    CHECK_THROWS_AS(HierModelConfig::isotropic(2, 1.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(HierModelConfig::isotropic(0, 1.0, 1.0, 1.0), ConfigError);
    Matrix bad = Matrix::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS(HierModelConfig(Vector::Zero(2), bad, Matrix::Identity(2, 2), 1.0), ConfigError);
    CHECK_THROWS_AS(HierModelConfig(Vector::Zero(2), Matrix::Identity(3, 3), Matrix::Identity(2, 2), 1.0),
                    ConfigError);
}

TEST_CASE("task statistics")
{
    SUBCASE("empty dataset gives zero statistics for every task")
    {
        LoggedDataset ds{3, 2, 1, {}};
        const auto stats = compute_task_statistics(ds, HierModelConfig::isotropic(2, 1, 1, 1));
        REQUIRE(stats.size() == 3);
        for (const auto& s : stats) {
            CHECK(s.n == 0);
            CHECK(s.b.isZero(0.0));
            CHECK(s.g.isZero(0.0));
        }
    }
    SUBCASE("hand-evaluated sums and sigma scaling")
    {
        LoggedDataset ds{2, 2, 2, {}};
        ds.records.push_back({0, 0, (Vector(2) << 1.0, 0.0).finished(), 2.0});
        ds.records.push_back({0, 1, (Vector(2) << 0.0, 1.0).finished(), -1.0});
        const auto unit = compute_task_statistics(ds, HierModelConfig::isotropic(2, 1, 1, 1.0));
        CHECK(unit[0].n == 2);
        CHECK(unit[0].b(0) == 2.0);
        CHECK(unit[0].b(1) == -1.0);
        CHECK(unit[0].g.isApprox(Matrix::Identity(2, 2)));
        CHECK(unit[1].n == 0);

        const auto half = compute_task_statistics(ds, HierModelConfig::isotropic(2, 1, 1, 0.5));
        CHECK(half[0].b.isApprox(4.0 * unit[0].b));
        CHECK(half[0].g.isApprox(4.0 * unit[0].g));
    }
    SUBCASE("dimension mismatch")
    {
        LoggedDataset ds{1, 3, 1, {}};
        CHECK_THROWS_AS(compute_task_statistics(ds, HierModelConfig::isotropic(2, 1, 1, 1)), ConfigError);
    }
}

TEST_CASE("conditional posterior")
{
    const auto model = scalar_model();
    SUBCASE("no data equals prior")
    {
        TaskStatistics empty{Vector::Zero(1), Matrix::Zero(1, 1), 0};
        const auto post = conditional_task_posterior(empty, model);
        CHECK(post.cov(0, 0) == 1.0);
        CHECK(post.mean(Vector::Constant(1, 0.7))(0) == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("scalar conjugate updates")
    {
        for (const auto [y, expected] : {std::pair{1.0, 0.5}, std::pair{2.0, 1.0}}) {
            const auto stats = compute_task_statistics(scalar_dataset(y), model);
            const auto post = conditional_task_posterior(stats[0], model);
            CHECK(post.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
            CHECK(post.mean(Vector::Zero(1))(0) == doctest::Approx(expected).epsilon(1e-15));
        }
    }
    SUBCASE("data never inflates covariance")
    {
        Rng rng(3);
        for (int rep = 0; rep < 20; ++rep) {
            const int d = 1 + rep % 3;
            const auto m = random_model(rng, d);
            const auto ds = random_dataset(rng, 2, d, 15);
            const auto stats = compute_task_statistics(ds, m);
            for (const auto& s : stats)
                CHECK(psd_leq(conditional_task_posterior(s, m).cov, m.sigma_0()));
        }
    }
}

TEST_CASE("hyper-posterior")
{
    const auto model = scalar_model();
    SUBCASE("no observed task leaves the hyper-prior")
    {
        LoggedDataset ds{4, 1, 1, {}};
        const auto h = hyper_posterior(compute_task_statistics(ds, model), model);
        CHECK(h.mean(0) == 0.0);
        CHECK(h.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(hyper_posterior({}, model).cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("scalar example, and an empty second task changes nothing")
    {
        const auto one = hyper_posterior(compute_task_statistics(scalar_dataset(2.0, 1), model), model);
        CHECK(one.cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(one.mean(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        const auto two = hyper_posterior(compute_task_statistics(scalar_dataset(2.0, 2), model), model);
        CHECK(two.cov(0, 0) == one.cov(0, 0));
        CHECK(two.mean(0) == one.mean(0));
    }
    SUBCASE("rank-deficient task statistics are fine")
    {
        // One record in d = 3 gives a rank-1 G_s.
        LoggedDataset ds{1, 3, 1, {{0, 0, (Vector(3) << 0.6, 0.0, 0.0).finished(), 1.0}}};
        const auto m3 = HierModelConfig::isotropic(3, 1.0, 0.5, 1.0);
        const auto h = hyper_posterior(compute_task_statistics(ds, m3), m3);
        CHECK(h.cov.allFinite());
        CHECK(psd_leq(h.cov, m3.sigma_q()));
        const auto oracle = joint_gaussian_oracle(ds, m3, 0);
        const auto marg = marginal_task_posterior(compute_task_statistics(ds, m3)[0], h, m3);
        check_close(marg.mean, oracle.first, 1e-12);
        check_close(marg.cov, oracle.second, 1e-12);
    }
}

TEST_CASE("marginal posterior")
{
    const auto model = scalar_model();
    SUBCASE("scalar running example")
    {
        const auto post = infer(scalar_dataset(2.0), model);
        CHECK(post.marginals[0].mean(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
        CHECK(post.marginals[0].cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        // Bivariate (θ, y) conditioning by hand: Var θ = 2, Var y = 3, Cov = 2.
        const double mean = 0.0 + 2.0 / 3.0 * (2.0 - 0.0);
        const double var = 2.0 - 2.0 * 2.0 / 3.0;
        CHECK(post.marginals[0].mean(0) == doctest::Approx(mean).epsilon(1e-14));
        CHECK(post.marginals[0].cov(0, 0) == doctest::Approx(var).epsilon(1e-14));
    }
    SUBCASE("task without data gets hyper-posterior plus task prior")
    {
        const auto post = infer(scalar_dataset(2.0, 2), model);
        CHECK(post.marginals[1].mean(0) == doctest::Approx(post.hyper.mean(0)).epsilon(1e-15));
        CHECK(post.marginals[1].cov(0, 0) == doctest::Approx(1.0 + post.hyper.cov(0, 0)).epsilon(1e-15));
    }
    SUBCASE("one task collapses to a single-level regression with prior N(mu_q, Sigma_q + Sigma_0)")
    {
        Rng rng(21);
        for (int rep = 0; rep < 25; ++rep) {
            const int d = 1 + rep % 3;
            const auto m = random_model(rng, d);
            const auto ds = random_dataset(rng, 1, d, static_cast<int>(rng.below(30)));
            const auto post = infer(ds, m);
            const auto [mean, cov] = regression_posterior(ds, m.mu_q(), m.sigma_q() + m.sigma_0(), m.sigma());
            check_close(post.marginals[0].mean, mean, 1e-10);
            check_close(post.marginals[0].cov, cov, 1e-10);
        }
    }
}

TEST_CASE("joint Gaussian oracle")
{
    const auto model = scalar_model();
    SUBCASE("scalar example and the prior marginal")
    {
        const auto [mean, cov] = joint_gaussian_oracle(scalar_dataset(2.0), model, 0);
        CHECK(mean(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
        CHECK(cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

        Rng rng(1);
        const auto m2 = random_model(rng, 2);
        LoggedDataset empty{3, 2, 1, {}};
        const auto [pm, pc] = joint_gaussian_oracle(empty, m2, 1);
        check_close(pm, m2.mu_q(), 0.0);
        check_close(pc, m2.sigma_q() + m2.sigma_0(), 1e-15);
    }
    SUBCASE("size guard")
    {
        LoggedDataset big{1001, 2, 1, {}};
        CHECK_THROWS_AS(joint_gaussian_oracle(big, HierModelConfig::isotropic(2, 1, 1, 1), 0), OracleScaleError);
    }
}

TEST_CASE("posterior properties on random instances")
{
    Rng rng(2024);
    for (int rep = 0; rep < 60; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int m = 1 + static_cast<int>(rng.below(5));
        const int n = static_cast<int>(rng.below(51));
        const auto model = random_model(rng, d);
        auto ds = random_dataset(rng, m, d, n);
        const auto post = infer(ds, model);

        for (int s = 0; s < m; ++s) {
            const auto [om, oc] = joint_gaussian_oracle(ds, model, s);
            check_close(post.marginals[s].mean, om, 1e-8);
            check_close(post.marginals[s].cov, oc, 1e-8);
            // hyper-parameter uncertainty only adds
            CHECK(min_eigenvalue(post.marginals[s].cov - post.conditionals[s].cov) >= -1e-10);
        }
        CHECK(psd_leq(post.hyper.cov, model.sigma_q()));

        // record order does not matter
        auto shuffled = ds;
        for (int i = n - 1; i > 0; --i)
            std::swap(shuffled.records[i], shuffled.records[rng.below(i + 1)]);
        const auto again = infer(shuffled, model);
        for (int s = 0; s < m; ++s) {
            check_close(again.marginals[s].mean, post.marginals[s].mean, 1e-12);
            check_close(again.marginals[s].cov, post.marginals[s].cov, 1e-12);
        }

        // more data contracts the hyper-posterior
        auto more = ds;
        const auto extra = random_dataset(rng, m, d, 10);
        more.records.insert(more.records.end(), extra.records.begin(), extra.records.end());
        CHECK(psd_leq(infer(more, model).hyper.cov, post.hyper.cov, 1e-10));
    }
}
