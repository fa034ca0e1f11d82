#include "hieropo/error.hpp"
#include "hieropo/policy.hpp"

#include "test_support.hpp"

using namespace hieropo;
using namespace hieropo::testing;

namespace {

ContextSlate slate_of(std::initializer_list<double> values, int d = 1)
{
    ContextSlate slate;
    slate.features = Matrix(static_cast<int>(values.size()) / d, d);
    int i = 0;
    for (double v : values) {
        slate.features(i / d, i % d) = v;
        ++i;
    }
    return slate;
}

LearnedPolicy constant_policy(const Vector& mean, const Matrix& cov, double alpha)
{
    LearnedPolicy p;
    p.alpha = alpha;
    p.d = static_cast<int>(mean.size());
    p.tasks.push_back({mean, cov});
    return p;
}

} // namespace

TEST_CASE("learner tags")
{
    for (auto l : {Learner::hier, Learner::flat, Learner::oracle, Learner::single})
        CHECK(parse_learner(to_string(l)) == l);
    CHECK_THROWS_AS(parse_learner("greedy"), ConfigError);
}

TEST_CASE("lcb scoring")
{
    const auto hier = fit_hieropo(scalar_dataset(2.0), scalar_model(), 0.1);
    const auto est = score(hier, 0, slate_of({1.0}));
    CHECK(est[0].r_hat == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(est[0].width == doctest::Approx(0.08164965809277261).epsilon(1e-12));
    CHECK(est[0].lcb == doctest::Approx(1.2516836752405607).epsilon(1e-12));

    // zero features carry no information either way
    const auto zero = score(hier, 0, slate_of({0.0}));
    CHECK(zero[0].r_hat == 0.0);
    CHECK(zero[0].width == 0.0);
    CHECK(zero[0].lcb == 0.0);

    // alpha = 0 is greedy on the posterior mean
    auto greedy = hier;
    greedy.alpha = 0.0;
    CHECK(score(greedy, 0, slate_of({1.0}))[0].lcb == est[0].r_hat);
}

TEST_CASE("pessimism trades mean for certainty")
{
    Matrix cov(2, 2);
    cov << 1.0, 0.0, 0.0, 0.01;
    const auto slate = slate_of({1.0, 0.0, 0.0, 0.9}, 2);
    const Vector mean = Vector::Ones(2);
    CHECK(act(constant_policy(mean, cov, 0.0), 0, slate) == 0);
    CHECK(act(constant_policy(mean, cov, 1.0), 0, slate) == 1);
}

TEST_CASE("ties go to the lowest index")
{
    const auto p = constant_policy(Vector::Constant(1, 1.0), Matrix::Identity(1, 1), 0.5);
    CHECK(act(p, 0, slate_of({0.2, 0.7, 0.7, 0.1})) == 1);
    CHECK(act(p, 0, slate_of({0.3, 0.3, 0.3})) == 0);
    CHECK_THROWS_AS(act(p, 0, ContextSlate{Matrix(0, 1)}), ConfigError);
    CHECK_THROWS_AS(act(p, 1, slate_of({1.0})), ConfigError);
    CHECK_THROWS_AS(act(p, 0, slate_of({1.0, 1.0}, 2)), ConfigError);
}

TEST_CASE("scalar beliefs for each learner")
{
    const auto ds = scalar_dataset(2.0);
    const auto model = scalar_model();
    const auto flat = fit_flatopo(ds, model, 0.1);
    CHECK(flat.tasks[0].mean(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(flat.tasks[0].cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    const auto oracle = fit_oracleopo(ds, model, 0.1, Vector::Zero(1));
    CHECK(oracle.tasks[0].mean(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(oracle.tasks[0].cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(fit_oracleopo(ds, model, 0.1, Vector::Zero(2)), ConfigError);
    CHECK_THROWS_AS(fit_hieropo(ds, model, -1.0), ConfigError);
}

TEST_CASE("single-task learner matches the oracle with prior centered at mu_star")
{
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const int d = 1 + rep % 3;
        const auto model = random_model(rng, d);
        const auto ds = random_dataset(rng, 1, d, 20);
        const Vector mu = random_vector(rng, d);
        const auto single = fit_single_task(ds, mu, model.sigma_0(), model.sigma(), 0.3);
        const auto oracle = fit_oracleopo(ds, model, 0.3, mu);
        check_close(single.tasks[0].mean, oracle.tasks[0].mean, 1e-12);
        check_close(single.tasks[0].cov, oracle.tasks[0].cov, 1e-12);
    }
    CHECK_THROWS_AS(fit_single_task(random_dataset(rng, 2, 1, 50), Vector::Zero(1), Matrix::Identity(1, 1), 1.0, 0.1),
                    ConfigError);
}

TEST_CASE("oracle widths never exceed hierarchical, which never exceed flat")
{
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 3;
        const auto model = random_model(rng, d);
        const auto ds = random_dataset(rng, 4, d, 30);
        const auto hier = fit_hieropo(ds, model, 1.0);
        const auto flat = fit_flatopo(ds, model, 1.0);
        const auto oracle = fit_oracleopo(ds, model, 1.0, random_vector(rng, d));
        ContextSlate slate{Matrix(5, d)};
        for (int a = 0; a < 5; ++a)
            slate.features.row(a) = random_vector(rng, d).transpose();
        for (int s = 0; s < 4; ++s) {
            const auto w_o = score(oracle, s, slate);
            const auto w_h = score(hier, s, slate);
            const auto w_f = score(flat, s, slate);
            for (int a = 0; a < 5; ++a) {
                CHECK(w_o[a].width <= w_h[a].width + 1e-12);
                CHECK(w_h[a].width <= w_f[a].width + 1e-12);
            }
        }
    }
}

TEST_CASE("policy json round trip")
{
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        const auto model = random_model(rng, 3);
        const auto p = fit_hieropo(random_dataset(rng, 3, 3, 25), model, 0.37);
        const auto q = policy_from_json(policy_to_json(p));
        CHECK(q.learner == p.learner);
        CHECK(q.alpha == p.alpha);
        CHECK(q.d == p.d);
        REQUIRE(q.m() == p.m());
        for (int s = 0; s < p.m(); ++s) {
            CHECK(q.tasks[s].mean == p.tasks[s].mean);
            CHECK(q.tasks[s].cov == p.tasks[s].cov);
        }
    }
    CHECK_THROWS_AS(policy_from_json("{\"learner\":\"hier\""), DataError);
    CHECK_THROWS_AS(policy_from_json(R"({"learner":"hier","d":2,"m":1,"alpha":0.1,
        "tasks":[{"task_id":1,"mean":[0],"cov":[1,0,0,1]}]})"),
                    DataError);
}
