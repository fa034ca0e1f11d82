#include "hieropo/policy.hpp"

#include "hieropo/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hieropo {

using nlohmann::json;

std::string_view to_string(Learner learner)
{
    switch (learner) {
    case Learner::hier:
        return "hier";
    case Learner::flat:
        return "flat";
    case Learner::oracle:
        return "oracle";
    case Learner::single:
        return "single";
    }
    return "unknown";
}

Learner parse_learner(std::string_view tag)
{
    if (tag == "hier")
        return Learner::hier;
    if (tag == "flat")
        return Learner::flat;
    if (tag == "oracle")
        return Learner::oracle;
    if (tag == "single")
        return Learner::single;
    throw ConfigError("unknown learner '" + std::string(tag) + "' (expected hier, flat, oracle or single)");
}

namespace {

const TaskRewardModel& task_model(const LearnedPolicy& policy, int task, const ContextSlate& slate)
{
    if (task < 0 || task >= policy.m())
        throw ConfigError("task " + std::to_string(task + 1) + " not in policy with m = " + std::to_string(policy.m()));
    if (slate.dim() != policy.d)
        throw ConfigError("slate has d = " + std::to_string(slate.dim()) + " but policy has d = " +
                          std::to_string(policy.d));
    return policy.tasks[task];
}

RewardEstimate estimate(const TaskRewardModel& model, double alpha, const Eigen::Ref<const Vector>& phi)
{
    RewardEstimate e;
    e.alpha = alpha;
    e.r_hat = phi.dot(model.mean);
    if (alpha != 0.0) {
        const double radicand = phi.dot(model.cov * phi);
        e.width = alpha * std::sqrt(std::max(radicand, 0.0));
    }
    e.lcb = e.r_hat - e.width;
    return e;
}

void check_alpha(double alpha)
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("alpha must be a finite nonnegative number");
}

LearnedPolicy from_posteriors(Learner learner, double alpha, int d, std::vector<TaskRewardModel> tasks)
{
    LearnedPolicy p;
    p.learner = learner;
    p.alpha = alpha;
    p.d = d;
    p.tasks = std::move(tasks);
    return p;
}

} // namespace

std::vector<RewardEstimate> score(const LearnedPolicy& policy, int task, const ContextSlate& slate)
{
    const auto& model = task_model(policy, task, slate);
    std::vector<RewardEstimate> out;
    out.reserve(slate.num_actions());
    for (int a = 0; a < slate.num_actions(); ++a)
        out.push_back(estimate(model, policy.alpha, slate.features.row(a).transpose()));
    return out;
}

int act(const LearnedPolicy& policy, int task, const ContextSlate& slate)
{
    const auto& model = task_model(policy, task, slate);
    if (slate.num_actions() == 0)
        throw ConfigError("cannot act on an empty slate");
    int best = 0;
    double best_lcb = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < slate.num_actions(); ++a) {
        const double l = estimate(model, policy.alpha, slate.features.row(a).transpose()).lcb;
        if (l > best_lcb) {
            best_lcb = l;
            best = a;
        }
    }
    return best;
}

LearnedPolicy fit_hieropo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha)
{
    check_alpha(alpha);
    auto post = infer(dataset, config);
    std::vector<TaskRewardModel> tasks;
    tasks.reserve(post.marginals.size());
    for (auto& mp : post.marginals)
        tasks.push_back({std::move(mp.mean), std::move(mp.cov)});
    return from_posteriors(Learner::hier, alpha, config.d(), std::move(tasks));
}

LearnedPolicy fit_flatopo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha)
{
    check_alpha(alpha);
    const auto stats = compute_task_statistics(dataset, config);
    std::vector<TaskRewardModel> tasks(stats.size());
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < static_cast<int>(stats.size()); ++s) {
        auto fp = flat_task_posterior(stats[s], config);
        tasks[s] = {std::move(fp.mean), std::move(fp.cov)};
    }
    return from_posteriors(Learner::flat, alpha, config.d(), std::move(tasks));
}

LearnedPolicy fit_oracleopo(const LoggedDataset& dataset, const HierModelConfig& config, double alpha,
                            const Vector& mu_star)
{
    check_alpha(alpha);
    if (mu_star.size() != config.d())
        throw ConfigError("mu_star has length " + std::to_string(mu_star.size()) + ", expected " +
                          std::to_string(config.d()));
    const auto stats = compute_task_statistics(dataset, config);
    std::vector<TaskRewardModel> tasks(stats.size());
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < static_cast<int>(stats.size()); ++s) {
        auto cond = conditional_task_posterior(stats[s], config);
        tasks[s] = {cond.mean(mu_star), std::move(cond.cov)};
    }
    return from_posteriors(Learner::oracle, alpha, config.d(), std::move(tasks));
}

LearnedPolicy fit_single_task(const LoggedDataset& one_task, const Vector& prior_mean, const Matrix& prior_cov,
                              double sigma, double alpha)
{
    check_alpha(alpha);
    if (!one_task.records.empty()) {
        const int task = one_task.records.front().task;
        for (const auto& r : one_task.records)
            if (r.task != task)
                throw ConfigError("single-task learner given records from more than one task");
    }
    // The single-task model is the conditional posterior with μ_* = θ₀.
    const HierModelConfig cfg(prior_mean, Matrix::Identity(prior_mean.size(), prior_mean.size()), prior_cov, sigma);
    LoggedDataset ds = one_task;
    ds.m = 1;
    for (auto& r : ds.records)
        r.task = 0;
    const auto stats = compute_task_statistics(ds, cfg);
    auto cond = conditional_task_posterior(stats[0], cfg);
    std::vector<TaskRewardModel> tasks{{cond.mean(prior_mean), std::move(cond.cov)}};
    return from_posteriors(Learner::single, alpha, cfg.d(), std::move(tasks));
}

std::string policy_to_json(const LearnedPolicy& policy)
{
    json j;
    j["learner"] = std::string(to_string(policy.learner));
    j["d"] = policy.d;
    j["m"] = policy.m();
    j["alpha"] = policy.alpha;
    json tasks = json::array();
    for (int s = 0; s < policy.m(); ++s) {
        const auto& t = policy.tasks[s];
        std::vector<double> cov(static_cast<std::size_t>(policy.d) * policy.d);
        for (int i = 0; i < policy.d; ++i)
            for (int k = 0; k < policy.d; ++k)
                cov[static_cast<std::size_t>(i) * policy.d + k] = t.cov(i, k);
        tasks.push_back({{"task_id", s + 1},
                         {"mean", std::vector<double>(t.mean.data(), t.mean.data() + t.mean.size())},
                         {"cov", cov}});
    }
    j["tasks"] = std::move(tasks);
    return j.dump(1);
}

LearnedPolicy policy_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        LearnedPolicy p;
        p.learner = parse_learner(j.at("learner").get<std::string>());
        p.d = j.at("d").get<int>();
        p.alpha = j.at("alpha").get<double>();
        const int m = j.at("m").get<int>();
        const auto& tasks = j.at("tasks");
        if (p.d <= 0 || m < 0 || static_cast<int>(tasks.size()) != m)
            throw DataError("policy header inconsistent with task list");
        p.tasks.resize(m);
        for (const auto& t : tasks) {
            const int s = t.at("task_id").get<int>() - 1;
            if (s < 0 || s >= m)
                throw DataError("policy task_id out of range");
            const auto mean = t.at("mean").get<std::vector<double>>();
            const auto cov = t.at("cov").get<std::vector<double>>();
            if (static_cast<int>(mean.size()) != p.d || cov.size() != static_cast<std::size_t>(p.d) * p.d)
                throw DataError("policy task " + std::to_string(s + 1) + " has wrong vector sizes");
            p.tasks[s].mean = Eigen::Map<const Vector>(mean.data(), p.d);
            p.tasks[s].cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                cov.data(), p.d, p.d);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed policy JSON: ") + e.what());
    }
}

void write_policy(const LearnedPolicy& policy, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write policy '" + path.string() + "'");
    out << policy_to_json(policy) << '\n';
}

LearnedPolicy read_policy(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open policy '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return policy_from_json(ss.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace hieropo
