#include "hieropo/commands.hpp"

#include "hieropo/bounds.hpp"
#include "hieropo/dataset_io.hpp"
#include "hieropo/envsim.hpp"
#include "hieropo/error.hpp"
#include "hieropo/recsys.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hieropo {

using nlohmann::json;

std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

template <class F>
auto stage(const char* name, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const CommandError&) {
        throw;
    } catch (const std::exception& e) {
        throw CommandError(name, e.what());
    }
}

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

HierModelConfig load_model(const ExperimentConfig& config, const std::optional<fs::path>& model_path)
{
    if (model_path)
        return model_from_json(read_text(*model_path));
    return config.env.model();
}

constexpr const char* kEvalSchema = "# schema: hieropo.evaluate.v1";
constexpr const char* kRunsSchema = "# schema: hieropo.sweep_runs.v1";
constexpr const char* kSummarySchema = "# schema: hieropo.sweep_summary.v1";
constexpr const char* kBoundsSchema = "# schema: hieropo.bounds.v1";

} // namespace

void cmd_generate(const ExperimentConfig& config, const fs::path& dataset_out, const fs::path& env_out)
{
    stage("generate", [&] {
        config.validate();
        auto env_rng = Rng::stream(config.env.seed, Stream::environment, {0});
        const auto env = sample_environment(config.env, env_rng);
        auto log_rng = Rng::stream(config.env.seed, Stream::log, {0});
        const auto log = generate_log(env, config.env.n, log_rng);
        if (dataset_out.has_parent_path())
            fs::create_directories(dataset_out.parent_path());
        write_dataset(log, dataset_out);
        auto out = open_out(env_out);
        out << environment_to_json(env) << '\n';
    });
}

void cmd_fit(const fs::path& dataset_path, const ExperimentConfig& config, Learner learner, const fs::path& policy_out,
             const std::optional<fs::path>& env_path, const std::optional<fs::path>& model_path)
{
    const auto dataset = stage("read dataset", [&] { return read_dataset(dataset_path); });
    const auto model = stage("model", [&] { return load_model(config, model_path); });
    std::optional<Environment> env;
    if (learner == Learner::oracle) {
        if (!env_path)
            throw CommandError("fit", "the oracle learner needs the ground-truth environment (--env) for mu_star");
        env = stage("read environment", [&] { return read_environment(*env_path); });
    }
    const auto policy = stage("fit", [&] {
        return fit_learner(learner, dataset, model, config.alpha, env ? &*env : nullptr);
    });
    stage("write policy", [&] {
        auto out = open_out(policy_out);
        out << policy_to_json(policy) << '\n';
    });
}

void cmd_evaluate(const fs::path& policy_path, const fs::path& env_path, const ExperimentConfig& config,
                  const fs::path& csv_out)
{
    const auto policy = stage("read policy", [&] { return read_policy(policy_path); });
    const auto env = stage("read environment", [&] { return read_environment(env_path); });
    stage("evaluate", [&] {
        if (policy.d != env.d())
            throw ConfigError("policy has d = " + std::to_string(policy.d) + " but environment has d = " +
                              std::to_string(env.d()));
        if (policy.m() != env.m())
            throw ConfigError("policy has m = " + std::to_string(policy.m()) + " but environment has m = " +
                              std::to_string(env.m()));
        auto out = open_out(csv_out);
        out << kEvalSchema << '\n';
        out << "learner,task_id,value_opt,value_learned,suboptimality,mc_std_error,n_eval\n";
        double sum = 0.0;
        double var = 0.0;
        const auto tag = std::string(to_string(policy.learner));
        for (int s = 0; s < env.m(); ++s) {
            auto rng = Rng::stream(config.env.seed, Stream::evaluation, {0, static_cast<std::uint64_t>(s)});
            const auto r = evaluate_policy(env, policy, s, config.env.n_eval, rng);
            out << tag << ',' << s + 1 << ',' << format_double(r.value_opt) << ',' << format_double(r.value_learned)
                << ',' << format_double(r.suboptimality) << ',' << format_double(r.mc_std_error) << ',' << r.n_eval
                << '\n';
            sum += r.suboptimality;
            var += r.mc_std_error * r.mc_std_error;
        }
        out << tag << ",all,,," << format_double(sum / env.m()) << ',' << format_double(std::sqrt(var) / env.m()) << ','
            << config.env.n_eval << '\n';
    });
}

void cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir)
{
    stage("sweep", [&] {
        config.validate();
        fs::create_directories(out_dir);
        auto runs = open_out(out_dir / "sweep_runs.csv");
        auto summary = open_out(out_dir / "sweep_summary.csv");
        runs << kRunsSchema << '\n';
        runs << "axis,axis_value,learner,n,m,sigma_q,run_id,mean_suboptimality,se\n";
        summary << kSummarySchema << '\n';
        summary << "axis,axis_value,learner,n,m,sigma_q,n_runs,mean_suboptimality,se\n";
        for (const int value : config.sweep_values) {
            SyntheticEnvConfig env = config.env;
            (config.sweep_axis == "n" ? env.n : env.m) = value;
            const auto result = run_experiment(env, config.learners, config.alpha, config.n_runs);
            const auto prefix = config.sweep_axis + ',' + std::to_string(value) + ',';
            for (std::size_t k = 0; k < result.learners.size(); ++k) {
                const auto tag = std::string(to_string(result.learners[k]));
                const auto common = tag + ',' + std::to_string(env.n) + ',' + std::to_string(env.m) + ',' +
                                    format_double(env.sigma_q) + ',';
                for (const auto& run : result.runs)
                    runs << prefix << common << run.run_id + 1 << ','
                         << format_double(run.learners[k].mean_suboptimality) << ','
                         << format_double(run.learners[k].std_error) << '\n';
                summary << prefix << common << config.n_runs << ',' << format_double(result.summary[k].mean) << ','
                        << format_double(result.summary[k].std_error) << '\n';
            }
        }
    });
}

void cmd_bounds(const fs::path& dataset_path, const fs::path& env_path, const ExperimentConfig& config,
                const fs::path& json_out, const fs::path& csv_out, const std::optional<fs::path>& model_path)
{
    const auto dataset = stage("read dataset", [&] { return read_dataset(dataset_path); });
    const auto env = stage("read environment", [&] { return read_environment(env_path); });
    const auto model = stage("model", [&] { return load_model(config, model_path); });
    stage("bounds", [&] {
        if (env.d() != dataset.d || env.m() != dataset.m)
            throw ConfigError("dataset (m = " + std::to_string(dataset.m) + ", d = " + std::to_string(dataset.d) +
                              ") and environment (m = " + std::to_string(env.m()) + ", d = " +
                              std::to_string(env.d()) + ") disagree");
        const auto stats = compute_task_statistics(dataset, model);
        const auto precs = estimate_optimal_precisions(env, config.env.n_eval, config.env.seed);
        std::vector<Matrix> g_opt;
        for (const auto& p : precs)
            g_opt.push_back(p.mean);
        const auto est = estimate_gamma(stats, g_opt, model.sigma());
        const double gamma = config.gamma.value_or(est.gamma);
        const auto checks = check_assumptions(dataset, model);

        auto inputs = make_bound_inputs(model, stats, gamma, config.delta, g_opt);
        inputs.sparse_diagonal_model = checks.sparse_diagonal_model;

        json report;
        report["inputs"] = {{"delta", inputs.delta},
                            {"d", inputs.d},
                            {"gamma", gamma},
                            {"gamma_estimated", est.gamma},
                            {"gamma_forced", config.gamma.has_value()},
                            {"sigma", inputs.sigma},
                            {"lambda_min_prec_0", inputs.lambda_min_prec_0},
                            {"lambda_min_prec_q", inputs.lambda_min_prec_q},
                            {"lambda_max_cov_0", inputs.lambda_max_cov_0},
                            {"lambda_min_prec_flat", inputs.lambda_min_prec_flat},
                            {"task_counts", inputs.task_counts},
                            {"n_eval", config.env.n_eval}};
        json lam = json::array();
        for (const double v : inputs.lambda_max_inv_opt_prec)
            lam.push_back(std::isinf(v) ? json("inf") : json(v));
        report["inputs"]["lambda_max_inv_opt_prec"] = lam;
        json se = json::array();
        for (const auto& p : precs)
            se.push_back(p.std_error.maxCoeff());
        report["inputs"]["opt_prec_max_std_error"] = se;
        report["assumptions"] = {{"max_feature_norm", checks.max_feature_norm},
                                 {"bounded_features", checks.bounded_features},
                                 {"oversized_records", checks.oversized_records},
                                 {"features_one_sparse", checks.features_one_sparse},
                                 {"covariances_diagonal", checks.covariances_diagonal},
                                 {"sparse_diagonal_model", checks.sparse_diagonal_model}};
        json gamma_tasks = json::array();
        for (const double g : est.per_task)
            gamma_tasks.push_back(std::isinf(g) ? json("inf") : json(g));
        report["assumptions"]["gamma_per_task"] = gamma_tasks;

        auto csv = open_out(csv_out);
        csv << kBoundsSchema << '\n';
        csv << "task_id,n_s,gamma,variant,alpha,epsilon_task,epsilon_hyper,epsilon_total,flatopo_bound\n";
        json tasks = json::array();
        auto num = [](double v) { return std::isinf(v) ? json("inf") : json(v); };
        for (int s = 0; s < dataset.m; ++s) {
            json t;
            t["task_id"] = s + 1;
            t["n_s"] = inputs.task_counts[s];
            const double flat = flatopo_bound(inputs, inputs.task_counts[s]);
            t["flatopo_bound"] = flat;
            std::vector<BoundVariant> variants{BoundVariant::general};
            if (inputs.sparse_diagonal_model)
                variants.push_back(BoundVariant::diagonal);
            for (const auto v : variants) {
                const auto r = multi_task_bound(inputs, s, v);
                const char* name = v == BoundVariant::general ? "general" : "diagonal";
                t[name] = {{"alpha", r.alpha},
                           {"epsilon_task", num(r.epsilon_task)},
                           {"epsilon_hyper", num(r.epsilon_hyper)},
                           {"epsilon_total", num(r.epsilon_total)},
                           {"gamma_used", r.gamma_used}};
                if (!r.diagnostic.empty())
                    t[name]["diagnostic"] = r.diagnostic;
                csv << s + 1 << ',' << inputs.task_counts[s] << ',' << format_double(gamma) << ',' << name << ','
                    << format_double(r.alpha) << ',' << format_double(r.epsilon_task) << ','
                    << format_double(r.epsilon_hyper) << ',' << format_double(r.epsilon_total) << ','
                    << format_double(flat) << '\n';
            }
            tasks.push_back(std::move(t));
        }
        report["tasks"] = std::move(tasks);
        auto out = open_out(json_out);
        out << report.dump(1) << '\n';
    });
}

void cmd_recsys_prep(const fs::path& ratings_path, const ExperimentConfig& config, const fs::path& out_dir)
{
    const auto ratings = stage("read ratings", [&] { return read_ratings(ratings_path); });
    const auto fact = stage("als", [&] {
        return als_factorize(ratings, AlsOptions{config.rank, config.lambda_reg, config.als_sweeps, config.env.seed});
    });
    const auto gmm = stage("gmm", [&] {
        return gmm_fit(fact.U, GmmOptions{config.gmm_k, config.gmm_max_iters, config.gmm_tol, 1e-6, config.env.seed});
    });
    for (const auto& event : gmm.events)
        std::cerr << "gmm: " << event << '\n';
    const auto params = stage("estimate params", [&] {
        auto p = estimate_hier_params(fact, gmm, ratings);
        (void)p.model(); // validates SPD-ness of the estimated model
        return p;
    });
    const auto env = stage("build environment", [&] {
        return build_recsys_environment(params, fact, config.recsys_K, config.recsys_m, config.env.seed);
    });
    stage("write", [&] {
        fs::create_directories(out_dir);
        open_out(out_dir / "factorization.json") << factorization_to_json(fact) << '\n';
        open_out(out_dir / "params.json") << hier_params_to_json(params, ratings) << '\n';
        open_out(out_dir / "environment.json") << environment_to_json(env) << '\n';
    });
}

} // namespace hieropo
