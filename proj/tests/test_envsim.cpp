#include "hieropo/envsim.hpp"
#include "hieropo/error.hpp"

#include "test_support.hpp"

#include <filesystem>

using namespace hieropo;
using namespace hieropo::testing;

namespace {

SyntheticEnvConfig small_config()
{
    SyntheticEnvConfig c;
    c.n_eval = 2000;
    return c;
}

/// A policy whose belief is exactly the true θ for every task.
LearnedPolicy truth_policy(const Environment& env)
{
    LearnedPolicy p;
    p.learner = Learner::oracle;
    p.alpha = 0.0;
    p.d = env.d();
    for (int s = 0; s < env.m(); ++s)
        p.tasks.push_back({env.thetas.row(s).transpose(), Matrix::Zero(env.d(), env.d())});
    return p;
}

} // namespace

TEST_CASE("config validation")
{
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    c.sigma_0 = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.n = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("environment sampling")
{
    auto c = small_config();
    SUBCASE("sigma_q = 0 pins the hyper-parameter at the prior mean")
    {
        c.sigma_q = 0.0;
        auto rng = Rng::stream(3, Stream::environment);
        CHECK(sample_environment(c, rng).mu_star.isZero(0.0));
    }
    SUBCASE("same stream, same environment")
    {
        auto a = Rng::stream(3, Stream::environment);
        auto b = Rng::stream(3, Stream::environment);
        const auto ea = sample_environment(c, a);
        const auto eb = sample_environment(c, b);
        CHECK(ea.mu_star == eb.mu_star);
        CHECK(ea.thetas == eb.thetas);
    }
    SUBCASE("task parameters center on mu_star")
    {
        // Across 1e5 draws the mean of θ − μ_* is within 3σ_0√(d/N) ≈ 0.0095.
        c.m = 100000;
        auto rng = Rng::stream(4, Stream::environment);
        const auto env = sample_environment(c, rng);
        const Vector centered = env.thetas.colwise().mean().transpose() - env.mu_star;
        CHECK(centered.norm() < 0.02);
    }
}

TEST_CASE("log generation")
{
    auto c = small_config();
    auto erng = Rng::stream(1, Stream::environment);
    const auto env = sample_environment(c, erng);
    SUBCASE("empty log")
    {
        auto rng = Rng::stream(1, Stream::log);
        const auto ds = generate_log(env, 0, rng);
        CHECK(ds.records.empty());
        CHECK(ds.m == c.m);
        CHECK(ds.d == c.d);
        CHECK(ds.K == c.K);
    }
    SUBCASE("uniform task assignment")
    {
        // Binomial(500, 0.1) lands outside [25, 75] with probability ~2e-4 per task.
        auto rng = Rng::stream(1, Stream::log);
        const auto ds = generate_log(env, 500, rng);
        std::vector<int> counts(c.m, 0);
        for (const auto& r : ds.records) {
            ++counts[r.task];
            CHECK(r.features.norm() <= 1.0 + 1e-12);
            CHECK(r.action >= 0);
            CHECK(r.action < c.K);
        }
        for (int n : counts) {
            CHECK(n >= 25);
            CHECK(n <= 75);
        }
    }
    SUBCASE("noise-free rewards are exact")
    {
        auto quiet = env;
        quiet.sigma = 0.0;
        auto rng = Rng::stream(1, Stream::log);
        for (const auto& r : generate_log(quiet, 200, rng).records)
            CHECK(r.reward == doctest::Approx(r.features.dot(quiet.thetas.row(r.task))).epsilon(1e-14));
    }
    SUBCASE("prefixes are nested across sizes")
    {
        auto r1 = Rng::stream(1, Stream::log);
        auto r2 = Rng::stream(1, Stream::log);
        const auto small = generate_log(env, 50, r1);
        const auto large = generate_log(env, 120, r2);
        for (int i = 0; i < 50; ++i) {
            CHECK(small.records[i].reward == large.records[i].reward);
            CHECK(small.records[i].task == large.records[i].task);
        }
    }
}

TEST_CASE("item pool slates")
{
    SlateSampler pool;
    pool.kind = SlateSampler::Kind::item_pool;
    pool.items = Matrix::Identity(6, 3).eval();
    pool.items.bottomRows(3) = -Matrix::Identity(3, 3);
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        const auto slate = pool.sample(rng, 4, 3);
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                CHECK(slate.features.row(a) != slate.features.row(b));
    }
    CHECK_THROWS_AS(pool.sample(rng, 7, 3), ConfigError);
}

TEST_CASE("evaluation")
{
    auto c = small_config();
    auto erng = Rng::stream(2, Stream::environment);
    const auto env = sample_environment(c, erng);
    auto lrng = Rng::stream(2, Stream::log);
    const auto ds = generate_log(env, 300, lrng);

    SUBCASE("the true-parameter policy has zero regret")
    {
        const auto truth = truth_policy(env);
        auto rng = Rng::stream(2, Stream::evaluation);
        const auto r = evaluate_policy(env, truth, 0, 500, rng);
        CHECK(r.suboptimality == 0.0);
        CHECK(r.mc_std_error == 0.0);
        CHECK(r.n_eval == 500);
    }
    SUBCASE("one action means nothing to lose")
    {
        auto one = env;
        one.K = 1;
        const auto p = fit_hieropo(ds, c.model(), 0.1);
        auto rng = Rng::stream(2, Stream::evaluation);
        CHECK(evaluate_policy(one, p, 3, 300, rng).suboptimality == 0.0);
    }
    SUBCASE("learners are never better than optimal beyond noise")
    {
        for (auto l : {Learner::hier, Learner::flat, Learner::oracle}) {
            const auto p = fit_learner(l, ds, c.model(), 0.1, &env);
            for (int s = 0; s < env.m(); ++s) {
                auto rng = Rng::stream(2, Stream::evaluation, {static_cast<std::uint64_t>(s)});
                const auto r = evaluate_policy(env, p, s, 1000, rng);
                CHECK(r.suboptimality >= -3.0 * r.mc_std_error);
                CHECK(r.value_opt >= r.value_learned - 1e-12);
            }
        }
    }
    SUBCASE("shape mismatches are rejected")
    {
        LearnedPolicy wrong;
        wrong.d = env.d() + 1;
        wrong.tasks.resize(env.m(), {Vector::Zero(wrong.d), Matrix::Zero(wrong.d, wrong.d)});
        auto rng = Rng::stream(2, Stream::evaluation);
        CHECK_THROWS_AS(evaluate_policy(env, wrong, 0, 10, rng), ConfigError);
        CHECK_THROWS_AS(fit_learner(Learner::oracle, ds, c.model(), 0.1, nullptr), ConfigError);
    }
}

TEST_CASE("experiment driver")
{
    auto c = small_config();
    c.n = 100;
    c.n_eval = 200;
    const auto one = run_experiment(c, {Learner::hier, Learner::flat}, 0.1, 1);
    REQUIRE(one.summary.size() == 2);
    CHECK(one.summary[0].std_error == 0.0);
    CHECK(one.runs.size() == 1);

    const auto a = run_experiment(c, {Learner::hier}, 0.1, 3);
    const auto b = run_experiment(c, {Learner::hier}, 0.1, 3);
    for (int r = 0; r < 3; ++r)
        CHECK(a.runs[r].learners[0].mean_suboptimality == b.runs[r].learners[0].mean_suboptimality);
    CHECK(a.runs[0].learners[0].mean_suboptimality == one.runs[0].learners[0].mean_suboptimality);
    CHECK_THROWS_AS(run_experiment(c, {Learner::hier}, 0.1, 0), ConfigError);
}

TEST_CASE("environment json round trip")
{
    auto c = small_config();
    auto rng = Rng::stream(8, Stream::environment);
    const auto env = sample_environment(c, rng);
    const auto back = environment_from_json(environment_to_json(env));
    CHECK(back.mu_star == env.mu_star);
    CHECK(back.thetas == env.thetas);
    CHECK(back.K == env.K);
    CHECK(back.sigma == env.sigma);
    CHECK(back.sampler.half_width == env.sampler.half_width);

    const auto model = HierModelConfig::isotropic(3, 0.7, 0.2, 0.9);
    const auto m2 = model_from_json(model_to_json(model));
    CHECK(m2.sigma_q() == model.sigma_q());
    CHECK(m2.sigma_0() == model.sigma_0());
    CHECK(m2.sigma() == model.sigma());
}
