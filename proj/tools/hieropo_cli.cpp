// hieropo: generate logs, fit pessimistic learners, evaluate, sweep, bound
// and prepare recommender environments.

#include "hieropo/commands.hpp"
#include "hieropo/error.hpp"
#include "hieropo/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace hieropo;

struct SharedFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
};

void add_shared(CLI::App* cmd, SharedFlags& flags)
{
    cmd->add_option("--config", flags.config_path, "Key-value config file");
    cmd->add_option("--set", flags.overrides, "Override a config key (key=value), repeatable");
    cmd->add_option("--seed", flags.seed, "Base seed");
    cmd->add_option("--threads", flags.threads, "Worker threads (1 = bit-exact determinism)");
}

ExperimentConfig resolve(const SharedFlags& flags)
{
    ExperimentConfig cfg;
    if (!flags.config_path.empty())
        cfg.load(flags.config_path);
    for (const auto& kv : flags.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (flags.seed)
        cfg.env.seed = *flags.seed;
    if (flags.threads)
        cfg.threads = *flags.threads;
    cfg.validate();
    set_num_threads(cfg.threads);
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical off-policy optimization for multi-task linear bandits"};
    app.require_subcommand(1);

    SharedFlags flags;

    auto* generate = app.add_subcommand("generate", "Sample an environment and a logged dataset");
    add_shared(generate, flags);
    std::string gen_dataset = "data/log.jsonl";
    std::string gen_env = "data/env.json";
    generate->add_option("--out", gen_dataset, "Dataset path (.jsonl or .csv)");
    generate->add_option("--env-out", gen_env, "Environment path (simulator-only ground truth)");

    auto* fit = app.add_subcommand("fit", "Fit a learner on a logged dataset");
    add_shared(fit, flags);
    std::string fit_dataset;
    std::string fit_learner = "hier";
    std::string fit_out = "policy.json";
    std::string fit_env;
    std::string fit_model;
    fit->add_option("--data", fit_dataset, "Logged dataset")->required();
    fit->add_option("--learner", fit_learner, "hier | flat | oracle | single");
    fit->add_option("--env", fit_env, "Environment file (required by the oracle learner)");
    fit->add_option("--model", fit_model, "Model JSON (e.g. params.json from recsys-prep)");
    fit->add_option("--out", fit_out, "Policy output path");

    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo suboptimality of a policy");
    add_shared(evaluate, flags);
    std::string eval_policy;
    std::string eval_env;
    std::string eval_out = "evaluation.csv";
    evaluate->add_option("--policy", eval_policy, "Policy JSON")->required();
    evaluate->add_option("--env", eval_env, "Environment JSON")->required();
    evaluate->add_option("--out", eval_out, "Results CSV");

    auto* sweep = app.add_subcommand("sweep", "Run learners over a sweep of n or m");
    add_shared(sweep, flags);
    std::string sweep_out = "sweep";
    sweep->add_option("--out", sweep_out, "Output directory");

    auto* bounds = app.add_subcommand("bounds", "Suboptimality bounds and assumption checks");
    add_shared(bounds, flags);
    std::string b_dataset;
    std::string b_env;
    std::string b_model;
    std::string b_out = "bounds.json";
    std::string b_csv = "bounds.csv";
    std::optional<double> b_gamma;
    bounds->add_option("--data", b_dataset, "Logged dataset")->required();
    bounds->add_option("--env", b_env, "Environment JSON")->required();
    bounds->add_option("--model", b_model, "Model JSON");
    bounds->add_option("--gamma", b_gamma, "Force gamma instead of estimating it");
    bounds->add_option("--out", b_out, "Report JSON");
    bounds->add_option("--csv", b_csv, "Report CSV");

    auto* recsys = app.add_subcommand("recsys-prep", "Factorize ratings and build a recommender environment");
    add_shared(recsys, flags);
    std::string r_ratings;
    std::string r_out = "recsys";
    recsys->add_option("--ratings", r_ratings, "Ratings file (CSV or ::-delimited)")->required();
    recsys->add_option("--out", r_out, "Output directory");

    auto* show = app.add_subcommand("show-config", "Print the resolved configuration");
    add_shared(show, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = resolve(flags);
        if (generate->parsed()) {
            cmd_generate(cfg, gen_dataset, gen_env);
        } else if (fit->parsed()) {
            cmd_fit(fit_dataset, cfg, parse_learner(fit_learner), fit_out,
                    fit_env.empty() ? std::nullopt : std::optional<fs::path>(fit_env),
                    fit_model.empty() ? std::nullopt : std::optional<fs::path>(fit_model));
        } else if (evaluate->parsed()) {
            cmd_evaluate(eval_policy, eval_env, cfg, eval_out);
        } else if (sweep->parsed()) {
            cmd_sweep(cfg, sweep_out);
        } else if (bounds->parsed()) {
            if (b_gamma)
                cfg.gamma = *b_gamma;
            cfg.validate();
            cmd_bounds(b_dataset, b_env, cfg, b_out, b_csv,
                       b_model.empty() ? std::nullopt : std::optional<fs::path>(b_model));
        } else if (recsys->parsed()) {
            cmd_recsys_prep(r_ratings, cfg, r_out);
        } else if (show->parsed()) {
            std::cout << cfg.to_text();
        }
    } catch (const CommandError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
