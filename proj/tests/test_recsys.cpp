#include "hieropo/error.hpp"
#include "hieropo/recsys.hpp"

#include "test_support.hpp"

#include <sstream>

using namespace hieropo;
using namespace hieropo::testing;

namespace {

RatingsMatrix rank_one_ratings(int users, int items)
{
    std::vector<RawRating> raw;
    for (int u = 0; u < users; ++u)
        for (int i = 0; i < items; ++i)
            raw.push_back({u, i, (1.0 + 0.1 * u) * (0.5 + 0.05 * i)});
    return make_ratings(raw);
}

Matrix two_blobs(Rng& rng, int per, double sep, double spread)
{
    Matrix pts(2 * per, 2);
    for (int i = 0; i < 2 * per; ++i) {
        const double cx = i < per ? -sep : sep;
        pts(i, 0) = cx + spread * rng.normal();
        pts(i, 1) = spread * rng.normal();
    }
    return pts;
}

} // namespace

TEST_CASE("ratings parsing")
{
    SUBCASE("movielens separators")
    {
        std::istringstream in("10::5::4::978300760\n10::7::3::978300761\n42::5::1::978300762\n");
        const auto r = parse_ratings(in);
        CHECK(r.n_users == 2);
        CHECK(r.n_items == 2);
        REQUIRE(r.entries.size() == 3);
        CHECK(r.user_ids == std::vector<long long>{10, 42});
        CHECK(r.item_ids == std::vector<long long>{5, 7});
        CHECK(r.entries[2].user == 1);
        CHECK(r.entries[2].item == 0);
        CHECK(r.entries[2].value == 1.0);
    }
    SUBCASE("csv with header")
    {
        std::istringstream in("userId,movieId,rating,timestamp\n1,2,3.5,0\n2,2,4,0\n");
        const auto r = parse_ratings(in);
        CHECK(r.entries.size() == 2);
        CHECK(r.by_item()[0].size() == 2);
        CHECK(r.by_user()[1][0].second == 4.0);
    }
    SUBCASE("errors")
    {
        std::istringstream dup("1,2,3\n1,2,4\n");
        CHECK_THROWS_AS(parse_ratings(dup), DataError);
        std::istringstream bad("1,2,3\n1,x,4\n");
        try {
            parse_ratings(bad, "r.csv");
            FAIL("expected an error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("r.csv:2") != std::string::npos);
        }
        std::istringstream empty("");
        CHECK_THROWS_AS(parse_ratings(empty), DataError);
    }
}

TEST_CASE("synthetic ratings")
{
    const auto r = make_synthetic_ratings(50, 30, 3, 2, 0.3, 0.1, 0.3, 4);
    CHECK(r.n_users == 50);
    CHECK(r.n_items == 30);
    for (const auto& row : r.by_user())
        CHECK_FALSE(row.empty());
    const auto again = make_synthetic_ratings(50, 30, 3, 2, 0.3, 0.1, 0.3, 4);
    REQUIRE(again.entries.size() == r.entries.size());
    CHECK(again.entries.back().value == r.entries.back().value);
}

TEST_CASE("alternating least squares")
{
    SUBCASE("recovers a rank-1 matrix")
    {
        const auto ratings = rank_one_ratings(20, 15);
        const auto fact = als_factorize(ratings, {1, 1e-6, 20, 3});
        CHECK(rating_rmse(ratings, fact.U, fact.V) <= 1e-4);
        CHECK(fact.rmse_trace.size() == 20);
        CHECK(fact.objective_trace.size() == 41);
    }
    SUBCASE("objective never increases")
    {
        const auto ratings = make_synthetic_ratings(80, 40, 4, 3, 0.5, 0.2, 0.4, 9);
        for (double lambda : {1e-3, 0.1, 3.0}) {
            const auto fact = als_factorize(ratings, {4, lambda, 15, 2});
            for (std::size_t i = 1; i < fact.objective_trace.size(); ++i)
                CHECK(fact.objective_trace[i] <= fact.objective_trace[i - 1] * (1.0 + 1e-12));
            CHECK(als_objective(ratings, fact.U, fact.V, lambda) ==
                  doctest::Approx(fact.objective_trace.back()).epsilon(1e-12));
        }
    }
    SUBCASE("heavy regularization shrinks both factors")
    {
        const auto ratings = rank_one_ratings(10, 10);
        const auto fact = als_factorize(ratings, {3, 1e8, 5, 1});
        CHECK(fact.U.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(fact.V.cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("a single ridge row by hand")
    {
        Matrix fixed(2, 1);
        fixed << 1.0, 2.0;
        Matrix out(1, 1);
        solve_factor_rows({{{0, 3.0}, {1, 1.0}}}, fixed, 0.5, out);
        // (1 + 4 + 0.5)⁻¹ (3 + 2)
        CHECK(out(0, 0) == doctest::Approx(5.0 / 5.5).epsilon(1e-15));
    }
}

TEST_CASE("gaussian mixture")
{
    Rng rng(8);
    SUBCASE("separates two blobs")
    {
        const Matrix pts = two_blobs(rng, 300, 3.0, 0.5);
        const auto fit = gmm_fit(pts, {2, 200, 1e-10, 1e-6, 5});
        const int left = fit.means(0, 0) < fit.means(1, 0) ? 0 : 1;
        CHECK(fit.means(left, 0) == doctest::Approx(-3.0).epsilon(0.1 / 3.0));
        CHECK(std::abs(fit.means(1 - left, 0) - 3.0) < 0.1);
        CHECK(std::abs(fit.means(left, 1)) < 0.1);
        CHECK(fit.weights(0) == doctest::Approx(0.5).epsilon(0.02));
        const auto labels = fit.assign(pts);
        for (int i = 0; i < 600; ++i)
            CHECK(labels[i] == (i < 300 ? left : 1 - left));
    }
    SUBCASE("one component is the sample mean and covariance")
    {
        const Matrix pts = two_blobs(rng, 50, 1.0, 1.0);
        const Vector mean = pts.colwise().mean().transpose();
        const Matrix centered = pts.rowwise() - mean.transpose();
        const Matrix cov = centered.transpose() * centered / 100.0;
        for (double reg : {0.0, 1e-3}) {
            const auto fit = gmm_fit(pts, {1, 50, 1e-12, reg, 1});
            check_close(fit.means.row(0).transpose(), mean, 1e-12);
            check_close(fit.covariances[0], cov + reg * Matrix::Identity(2, 2), 1e-12);
            CHECK(fit.weights(0) == 1.0);
        }
    }
    SUBCASE("EM log-likelihood is nondecreasing")
    {
        const Matrix pts = two_blobs(rng, 120, 1.0, 0.8);
        for (int k : {2, 3, 5}) {
            const auto fit = gmm_fit(pts, {k, 100, 0.0, 1e-6, static_cast<std::uint64_t>(k)});
            for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i)
                CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-9);
        }
    }
    SUBCASE("input checks")
    {
        CHECK_THROWS_AS(gmm_fit(Matrix::Zero(2, 2), {3, 10, 1e-8, 1e-6, 1}), ConfigError);
        CHECK_THROWS_AS(gmm_fit(Matrix::Zero(5, 2), {0, 10, 1e-8, 1e-6, 1}), ConfigError);
    }
}

TEST_CASE("hierarchical parameters from clusters")
{
    // Two centers at (±1, 0); users sit on the centers, three on the right.
    Factorization fact;
    fact.rank = 2;
    fact.U = Matrix(5, 2);
    fact.U << -1, 0, 1, 0, 1.1, 0, 0.9, 0, -1.1, 0;
    fact.V = Matrix(3, 2);
    fact.V << 2, 0, 0, 1, 1, 1;
    std::vector<RawRating> raw;
    for (int u = 0; u < 5; ++u)
        for (int i = 0; i < 3; ++i)
            raw.push_back({u, i, fact.U.row(u).dot(fact.V.row(i))});
    const auto ratings = make_ratings(raw);

    GmmFit gmm;
    gmm.weights = Vector::Constant(2, 0.5);
    gmm.means = Matrix(2, 2);
    gmm.means << -1, 0, 1, 0;
    gmm.covariances.assign(2, 0.01 * Matrix::Identity(2, 2));

    const auto p = estimate_hier_params(fact, gmm, ratings);
    CHECK(p.mu_q.isZero(0.0));
    CHECK(p.sigma_q(0, 0) == doctest::Approx(1.0 + kCenterJitter).epsilon(1e-15));
    CHECK(p.sigma_q(1, 1) == doctest::Approx(kCenterJitter).epsilon(1e-12));
    CHECK(p.cluster == 1);
    CHECK(p.cluster_users == std::vector<int>{1, 2, 3});
    CHECK(p.mu_star(0) == 1.0);
    CHECK(p.sigma_raw == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p.sigma == kSigmaFloor);
    CHECK_NOTHROW(p.model());

    const auto env = build_recsys_environment(p, fact, 2, 3, 4);
    CHECK(env.sampler.item_scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(env.sampler.items.rowwise().norm().maxCoeff() <= 1.0 + 1e-15);
    for (int s = 0; s < 3; ++s)
        CHECK(env.thetas(s, 0) > 0.5); // every task comes from the chosen cluster
    CHECK_THROWS_AS(build_recsys_environment(p, fact, 2, 4, 4), ConfigError);
    CHECK_THROWS_AS(build_recsys_environment(p, fact, 4, 2, 4), ConfigError);

    GmmFit single = gmm;
    single.weights = Vector::Ones(1);
    single.means = gmm.means.topRows(1);
    single.covariances.resize(1);
    CHECK_THROWS_AS(estimate_hier_params(fact, single, ratings), ConfigError);
}
