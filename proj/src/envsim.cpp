#include "hieropo/envsim.hpp"

#include "hieropo/error.hpp"
#include "hieropo/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hieropo {

using nlohmann::json;

void SyntheticEnvConfig::validate() const
{
    if (d <= 0 || K <= 0 || m <= 0)
        throw ConfigError("d, K and m must be positive");
    if (n < 0)
        throw ConfigError("log size n must be nonnegative");
    if (n_eval <= 0)
        throw ConfigError("n_eval must be positive");
    if (!(sigma_q >= 0.0) || !(sigma_0 > 0.0) || !(sigma >= 0.0))
        throw ConfigError("sigma_0 must be positive; sigma_q and sigma nonnegative");
}

ContextSlate SlateSampler::sample(Rng& rng, int K, int d) const
{
    ContextSlate slate{Matrix(K, d)};
    if (kind == Kind::uniform_box) {
        for (int a = 0; a < K; ++a) {
            for (int i = 0; i < d; ++i)
                slate.features(a, i) = rng.uniform(-half_width, half_width);
            const double norm = slate.features.row(a).norm();
            if (norm > 1.0)
                slate.features.row(a) /= norm;
        }
        return slate;
    }
    const auto n_items = static_cast<std::uint64_t>(items.rows());
    if (static_cast<std::uint64_t>(K) > n_items)
        throw ConfigError("slate size K exceeds the item pool");
    std::vector<Eigen::Index> chosen;
    chosen.reserve(K);
    while (static_cast<int>(chosen.size()) < K) {
        const auto j = static_cast<Eigen::Index>(rng.below(n_items));
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end())
            chosen.push_back(j);
    }
    for (int a = 0; a < K; ++a)
        slate.features.row(a) = items.row(chosen[a]);
    return slate;
}

int Environment::optimal_action(int task, const ContextSlate& slate) const
{
    const Vector rewards = slate.features * thetas.row(task).transpose();
    int best = 0;
    for (int a = 1; a < rewards.size(); ++a)
        if (rewards(a) > rewards(best))
            best = a;
    return best;
}

Environment sample_environment(const SyntheticEnvConfig& config, Rng& rng)
{
    config.validate();
    Environment env;
    env.K = config.K;
    env.sigma = config.sigma;
    env.mu_star.resize(config.d);
    for (int i = 0; i < config.d; ++i)
        env.mu_star(i) = config.sigma_q * rng.normal();
    env.thetas.resize(config.m, config.d);
    for (int s = 0; s < config.m; ++s)
        for (int i = 0; i < config.d; ++i)
            env.thetas(s, i) = env.mu_star(i) + config.sigma_0 * rng.normal();
    env.sampler.kind = SlateSampler::Kind::uniform_box;
    env.sampler.half_width = 0.5;
    return env;
}

LoggingPolicy uniform_logging()
{
    return [](const ContextSlate& slate, int, Rng& rng) {
        return static_cast<int>(rng.below(static_cast<std::uint64_t>(slate.num_actions())));
    };
}

LoggedDataset generate_log(const Environment& env, int n, Rng& rng, const LoggingPolicy& logging)
{
    if (n < 0)
        throw ConfigError("log size must be nonnegative");
    LoggedDataset ds;
    ds.m = env.m();
    ds.d = env.d();
    ds.K = env.K;
    ds.records.reserve(n);
    for (int t = 0; t < n; ++t) {
        LoggedRecord r;
        r.task = static_cast<int>(rng.below(static_cast<std::uint64_t>(env.m())));
        const auto slate = env.sample_slate(rng);
        r.action = logging(slate, r.task, rng);
        r.features = slate.features.row(r.action).transpose();
        const double noise = rng.normal();
        r.reward = r.features.dot(env.thetas.row(r.task).transpose()) + env.sigma * noise;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::vector<EvaluationResult> evaluate_policies(const Environment& env, const std::vector<const LearnedPolicy*>& policies,
                                                int task, int n_eval, Rng& rng)
{
    if (n_eval < 1)
        throw ConfigError("n_eval must be at least 1");
    if (task < 0 || task >= env.m())
        throw ConfigError("task index out of range for environment");
    if (env.K < 1)
        throw ConfigError("environment has no actions");
    for (const auto* p : policies)
        if (p->d != env.d() || p->m() != env.m())
            throw ConfigError("policy shape (d = " + std::to_string(p->d) + ", m = " + std::to_string(p->m()) +
                              ") does not match environment (d = " + std::to_string(env.d()) +
                              ", m = " + std::to_string(env.m()) + ")");

    std::vector<ContextSlate> slates;
    slates.reserve(n_eval);
    for (int i = 0; i < n_eval; ++i)
        slates.push_back(env.sample_slate(rng));

    const auto n_pol = static_cast<int>(policies.size());
    const Vector theta = env.thetas.row(task).transpose();
    Vector opt(n_eval);
    Matrix learned(n_eval, n_pol);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_eval; ++i) {
        const auto& f = slates[i].features;
        opt(i) = f.row(env.optimal_action(task, slates[i])).dot(theta);
        for (int p = 0; p < n_pol; ++p)
            learned(i, p) = f.row(act(*policies[p], task, slates[i])).dot(theta);
    }

    std::vector<EvaluationResult> out(n_pol);
    double opt_sum = 0.0;
    for (int i = 0; i < n_eval; ++i)
        opt_sum += opt(i);
    for (int p = 0; p < n_pol; ++p) {
        double learned_sum = 0.0;
        double diff_sum = 0.0;
        for (int i = 0; i < n_eval; ++i) {
            learned_sum += learned(i, p);
            diff_sum += opt(i) - learned(i, p);
        }
        const double diff_mean = diff_sum / n_eval;
        double ss = 0.0;
        for (int i = 0; i < n_eval; ++i) {
            const double e = (opt(i) - learned(i, p)) - diff_mean;
            ss += e * e;
        }
        auto& r = out[p];
        r.n_eval = n_eval;
        r.value_opt = opt_sum / n_eval;
        r.value_learned = learned_sum / n_eval;
        r.suboptimality = diff_mean;
        r.mc_std_error = n_eval > 1 ? std::sqrt(ss / (n_eval - 1) / n_eval) : 0.0;
    }
    return out;
}

EvaluationResult evaluate_policy(const Environment& env, const LearnedPolicy& policy, int task, int n_eval, Rng& rng)
{
    return evaluate_policies(env, {&policy}, task, n_eval, rng).front();
}

LearnedPolicy fit_learner(Learner learner, const LoggedDataset& dataset, const HierModelConfig& model, double alpha,
                          const Environment* env)
{
    switch (learner) {
    case Learner::hier:
        return fit_hieropo(dataset, model, alpha);
    case Learner::flat:
        return fit_flatopo(dataset, model, alpha);
    case Learner::oracle:
        if (env == nullptr)
            throw ConfigError("oracle learner needs the ground-truth environment (mu_star)");
        return fit_oracleopo(dataset, model, alpha, env->mu_star);
    case Learner::single:
        if (dataset.m != 1)
            throw ConfigError("single-task learner needs a one-task dataset");
        return fit_single_task(dataset, model.mu_q(), model.sigma_q() + model.sigma_0(), model.sigma(), alpha);
    }
    throw ConfigError("unknown learner");
}

ExperimentResult run_experiment(const SyntheticEnvConfig& config, const HierModelConfig& model,
                                const std::vector<Learner>& learners, double alpha, int n_runs,
                                const EnvironmentFactory& factory)
{
    config.validate();
    if (n_runs < 1)
        throw ConfigError("n_runs must be at least 1");
    if (learners.empty())
        throw ConfigError("no learners to run");

    ExperimentResult result;
    result.learners = learners;
    result.runs.resize(n_runs);
    const auto n_learners = static_cast<int>(learners.size());

    ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n_runs; ++r) {
        errors.run([&] {
            Environment env;
            if (factory) {
                env = factory(r);
            } else {
                auto env_rng = Rng::stream(config.seed, Stream::environment, {static_cast<std::uint64_t>(r)});
                env = sample_environment(config, env_rng);
            }
            auto log_rng = Rng::stream(config.seed, Stream::log, {static_cast<std::uint64_t>(r)});
            const auto log = generate_log(env, config.n, log_rng);

            std::vector<LearnedPolicy> policies;
            policies.reserve(n_learners);
            for (const auto l : learners)
                policies.push_back(fit_learner(l, log, model, alpha, &env));
            std::vector<const LearnedPolicy*> ptrs;
            for (const auto& p : policies)
                ptrs.push_back(&p);

            RunResult run;
            run.run_id = r;
            run.learners.resize(n_learners);
            std::vector<double> var_sum(n_learners, 0.0);
            for (int s = 0; s < env.m(); ++s) {
                auto eval_rng = Rng::stream(config.seed, Stream::evaluation,
                                            {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(s)});
                const auto evals = evaluate_policies(env, ptrs, s, config.n_eval, eval_rng);
                for (int k = 0; k < n_learners; ++k) {
                    run.learners[k].per_task.push_back(evals[k].suboptimality);
                    var_sum[k] += evals[k].mc_std_error * evals[k].mc_std_error;
                }
            }
            for (int k = 0; k < n_learners; ++k) {
                auto& lr = run.learners[k];
                double sum = 0.0;
                for (const double v : lr.per_task)
                    sum += v;
                lr.mean_suboptimality = sum / env.m();
                lr.std_error = std::sqrt(var_sum[k]) / env.m();
            }
            result.runs[r] = std::move(run);
        });
    }
    errors.rethrow();

    for (int k = 0; k < n_learners; ++k) {
        LearnerSummary sm;
        sm.learner = learners[k];
        double sum = 0.0;
        for (const auto& run : result.runs)
            sum += run.learners[k].mean_suboptimality;
        sm.mean = sum / n_runs;
        if (n_runs > 1) {
            double ss = 0.0;
            for (const auto& run : result.runs) {
                const double e = run.learners[k].mean_suboptimality - sm.mean;
                ss += e * e;
            }
            sm.std_error = std::sqrt(ss / (n_runs - 1)) / std::sqrt(static_cast<double>(n_runs));
        }
        result.summary.push_back(sm);
    }
    return result;
}

ExperimentResult run_experiment(const SyntheticEnvConfig& config, const std::vector<Learner>& learners, double alpha,
                                int n_runs)
{
    return run_experiment(config, config.model(), learners, alpha, n_runs);
}

namespace {

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix& a)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        rows.push_back(vector_json(a.row(i).transpose()));
    return rows;
}

Vector vector_from(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json& j, Eigen::Index cols)
{
    Matrix a(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto row = vector_from(j.at(i));
        if (row.size() != cols)
            throw DataError("ragged matrix in JSON");
        a.row(i) = row.transpose();
    }
    return a;
}

} // namespace

std::string environment_to_json(const Environment& env)
{
    json j;
    j["simulator_only"] = true;
    j["d"] = env.d();
    j["m"] = env.m();
    j["K"] = env.K;
    j["sigma"] = env.sigma;
    j["mu_star"] = vector_json(env.mu_star);
    j["thetas"] = matrix_json(env.thetas);
    json sampler;
    if (env.sampler.kind == SlateSampler::Kind::uniform_box) {
        sampler["kind"] = "uniform_box";
        sampler["half_width"] = env.sampler.half_width;
    } else {
        sampler["kind"] = "item_pool";
        sampler["scale"] = env.sampler.item_scale;
        sampler["items"] = matrix_json(env.sampler.items);
    }
    j["sampler"] = std::move(sampler);
    return j.dump(1);
}

Environment environment_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        Environment env;
        const int d = j.at("d").get<int>();
        env.K = j.at("K").get<int>();
        env.sigma = j.at("sigma").get<double>();
        env.mu_star = vector_from(j.at("mu_star"));
        env.thetas = matrix_from(j.at("thetas"), d);
        if (env.mu_star.size() != d || env.m() != j.at("m").get<int>())
            throw DataError("environment header disagrees with its arrays");
        const auto& sampler = j.at("sampler");
        const auto kind = sampler.at("kind").get<std::string>();
        if (kind == "uniform_box") {
            env.sampler.kind = SlateSampler::Kind::uniform_box;
            env.sampler.half_width = sampler.at("half_width").get<double>();
        } else if (kind == "item_pool") {
            env.sampler.kind = SlateSampler::Kind::item_pool;
            env.sampler.item_scale = sampler.at("scale").get<double>();
            env.sampler.items = matrix_from(sampler.at("items"), d);
        } else {
            throw DataError("unknown slate sampler '" + kind + "'");
        }
        return env;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed environment JSON: ") + e.what());
    }
}

void write_environment(const Environment& env, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write environment '" + path.string() + "'");
    out << environment_to_json(env) << '\n';
}

Environment read_environment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open environment '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return environment_from_json(ss.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string model_to_json(const HierModelConfig& model)
{
    json j;
    j["d"] = model.d();
    j["mu_q"] = vector_json(model.mu_q());
    j["Sigma_q"] = matrix_json(model.sigma_q());
    j["Sigma_0"] = matrix_json(model.sigma_0());
    j["sigma"] = model.sigma();
    return j.dump(1);
}

HierModelConfig model_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        const auto& src = j.contains("model") ? j.at("model") : j;
        const int d = src.at("d").get<int>();
        return HierModelConfig(vector_from(src.at("mu_q")), matrix_from(src.at("Sigma_q"), d),
                               matrix_from(src.at("Sigma_0"), d), src.at("sigma").get<double>());
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
}

} // namespace hieropo
