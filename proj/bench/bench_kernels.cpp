// Serial reference vs OpenMP kernels. The second argument of the parallel
// benchmarks is the thread count.
#include "hieropo/parallel.hpp"
#include "hieropo/recsys.hpp"
#include "hieropo/reference.hpp"

#include <benchmark/benchmark.h>

using namespace hieropo;

namespace {

LoggedDataset make_log(int m, int n)
{
    SyntheticEnvConfig c;
    c.m = m;
    auto erng = Rng::stream(1, Stream::environment);
    const auto env = sample_environment(c, erng);
    auto lrng = Rng::stream(1, Stream::log);
    return generate_log(env, n, lrng);
}

void BM_TaskStatsSerial(benchmark::State& state)
{
    const auto ds = make_log(static_cast<int>(state.range(0)), 100000);
    const auto model = HierModelConfig::isotropic(4, 0.5, 0.5, 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::compute_task_statistics(ds, model));
}

void BM_TaskStatsParallel(benchmark::State& state)
{
    const auto ds = make_log(static_cast<int>(state.range(0)), 100000);
    const auto model = HierModelConfig::isotropic(4, 0.5, 0.5, 0.5);
    set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_task_statistics(ds, model));
    set_num_threads(0);
}

struct EvalFixture {
    Environment env;
    LearnedPolicy hier;
    LearnedPolicy flat;
    EvalFixture()
    {
        SyntheticEnvConfig c;
        auto erng = Rng::stream(2, Stream::environment);
        env = sample_environment(c, erng);
        auto lrng = Rng::stream(2, Stream::log);
        const auto ds = generate_log(env, 500, lrng);
        hier = fit_hieropo(ds, c.model(), 0.1);
        flat = fit_flatopo(ds, c.model(), 0.1);
    }
};

void BM_EvaluateSerial(benchmark::State& state)
{
    const EvalFixture f;
    const std::vector<const LearnedPolicy*> ptrs{&f.hier, &f.flat};
    for (auto _ : state) {
        auto rng = Rng::stream(2, Stream::evaluation);
        benchmark::DoNotOptimize(reference::evaluate_policies(f.env, ptrs, 0, static_cast<int>(state.range(0)), rng));
    }
}

void BM_EvaluateParallel(benchmark::State& state)
{
    const EvalFixture f;
    const std::vector<const LearnedPolicy*> ptrs{&f.hier, &f.flat};
    set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        auto rng = Rng::stream(2, Stream::evaluation);
        benchmark::DoNotOptimize(evaluate_policies(f.env, ptrs, 0, static_cast<int>(state.range(0)), rng));
    }
    set_num_threads(0);
}

struct AlsFixture {
    RatingsMatrix ratings;
    std::vector<std::vector<std::pair<int, double>>> adjacency;
    Matrix fixed;
    AlsFixture()
    {
        ratings = make_synthetic_ratings(2000, 500, 10, 7, 0.5, 0.5, 0.1, 3);
        adjacency = ratings.by_user();
        const auto fact = als_factorize(ratings, {10, 0.1, 1, 3});
        fixed = fact.V;
    }
};

void BM_AlsRowsSerial(benchmark::State& state)
{
    const AlsFixture f;
    Matrix out(f.ratings.n_users, 10);
    for (auto _ : state) {
        reference::solve_factor_rows(f.adjacency, f.fixed, 0.1, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_AlsRowsParallel(benchmark::State& state)
{
    const AlsFixture f;
    Matrix out(f.ratings.n_users, 10);
    set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        solve_factor_rows(f.adjacency, f.fixed, 0.1, out);
        benchmark::DoNotOptimize(out.data());
    }
    set_num_threads(0);
}

struct GmmFixture {
    Matrix points;
    Vector weights;
    Matrix means;
    std::vector<Matrix> covs;
    GmmFixture()
    {
        Rng rng(4);
        points.resize(20000, 10);
        for (Eigen::Index i = 0; i < points.size(); ++i)
            points.data()[i] = rng.normal();
        weights = Vector::Constant(7, 1.0 / 7);
        means = points.topRows(7);
        covs.assign(7, Matrix::Identity(10, 10));
    }
};

void BM_EStepSerial(benchmark::State& state)
{
    const GmmFixture f;
    Matrix resp;
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::gmm_e_step(f.points, f.weights, f.means, f.covs, resp));
}

void BM_EStepParallel(benchmark::State& state)
{
    const GmmFixture f;
    Matrix resp;
    set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(gmm_e_step(f.points, f.weights, f.means, f.covs, resp));
    set_num_threads(0);
}

} // namespace

BENCHMARK(BM_TaskStatsSerial)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TaskStatsParallel)->ArgsProduct({{10, 100}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->ArgsProduct({{10000}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlsRowsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlsRowsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EStepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EStepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
