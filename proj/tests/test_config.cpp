#include "hieropo/config.hpp"
#include "hieropo/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace hieropo;

TEST_CASE("defaults are valid")
{
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.env.d == 4);
    CHECK(c.env.K == 5);
    CHECK(c.env.m == 10);
    CHECK(c.n_runs == 30);
    CHECK(c.alpha == 0.1);
}

TEST_CASE("set parses values and rejects junk")
{
    ExperimentConfig c;
    c.set("sigma_q", "1.0");
    c.set("learners", "hier,flat");
    c.set("sweep_values", "10,20,40");
    c.set("gamma", "0.3");
    CHECK(c.env.sigma_q == 1.0);
    CHECK(c.learners == std::vector<Learner>{Learner::hier, Learner::flat});
    CHECK(c.sweep_values == std::vector<int>{10, 20, 40});
    REQUIRE(c.gamma.has_value());
    CHECK(*c.gamma == 0.3);
    c.set("gamma", "auto");
    CHECK_FALSE(c.gamma.has_value());

    CHECK_THROWS_AS(c.set("colour", "blue"), ConfigError);
    CHECK_THROWS_AS(c.set("m", "ten"), ConfigError);
    CHECK_THROWS_AS(c.set("alpha", "0.1x"), ConfigError);
    CHECK_THROWS_AS(c.set("learners", "hier,greedy"), ConfigError);
}

TEST_CASE("validate")
{
    ExperimentConfig c;
    c.sweep_values = {100, 100};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.sweep_values = {0, 10};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.sweep_axis = "sigma";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.delta = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.env.sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("text round trip")
{
    ExperimentConfig c;
    c.set("m", "7");
    c.set("sigma_0", "0.25");
    c.set("sweep_axis", "m");
    c.set("sweep_values", "2,5");
    c.set("seed", "18446744073709551615");
    c.set("gamma", "0.125");

    const auto path = std::filesystem::temp_directory_path() / "hieropo_config_test.cfg";
    {
        std::ofstream out(path);
        out << "# comment\n\n" << c.to_text();
    }
    ExperimentConfig back;
    back.load(path);
    std::filesystem::remove(path);
    CHECK(back.to_text() == c.to_text());
    CHECK(back.env.m == 7);
    CHECK(back.env.seed == 18446744073709551615ull);
    CHECK(back.gamma == 0.125);
}
