#include "hieropo/config.hpp"

#include "hieropo/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hieropo {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text)
{
    const auto s = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + s + "'");
    return value;
}

std::vector<std::string> split_list(std::string_view text)
{
    std::vector<std::string> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value)
{
    if (key == "d")
        env.d = parse_number<int>(key, value);
    else if (key == "K")
        env.K = parse_number<int>(key, value);
    else if (key == "m")
        env.m = parse_number<int>(key, value);
    else if (key == "n")
        env.n = parse_number<int>(key, value);
    else if (key == "sigma")
        env.sigma = parse_number<double>(key, value);
    else if (key == "sigma_q")
        env.sigma_q = parse_number<double>(key, value);
    else if (key == "sigma_0")
        env.sigma_0 = parse_number<double>(key, value);
    else if (key == "seed")
        env.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "n_eval")
        env.n_eval = parse_number<int>(key, value);
    else if (key == "learners") {
        learners.clear();
        for (const auto& tag : split_list(value))
            learners.push_back(parse_learner(tag));
    } else if (key == "alpha")
        alpha = parse_number<double>(key, value);
    else if (key == "delta")
        delta = parse_number<double>(key, value);
    else if (key == "n_runs")
        n_runs = parse_number<int>(key, value);
    else if (key == "sweep_axis")
        sweep_axis = trim(value);
    else if (key == "sweep_values") {
        sweep_values.clear();
        for (const auto& v : split_list(value))
            sweep_values.push_back(parse_number<int>(key, v));
    } else if (key == "threads")
        threads = parse_number<int>(key, value);
    else if (key == "gamma") {
        const auto t = trim(value);
        if (t.empty() || t == "auto")
            gamma.reset();
        else
            gamma = parse_number<double>(key, t);
    } else if (key == "rank")
        rank = parse_number<int>(key, value);
    else if (key == "lambda_reg")
        lambda_reg = parse_number<double>(key, value);
    else if (key == "als_sweeps")
        als_sweeps = parse_number<int>(key, value);
    else if (key == "gmm_k")
        gmm_k = parse_number<int>(key, value);
    else if (key == "gmm_max_iters")
        gmm_max_iters = parse_number<int>(key, value);
    else if (key == "gmm_tol")
        gmm_tol = parse_number<double>(key, value);
    else if (key == "recsys_K")
        recsys_K = parse_number<int>(key, value);
    else if (key == "recsys_m")
        recsys_m = parse_number<int>(key, value);
    else
        throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void ExperimentConfig::validate() const
{
    env.validate();
    // The learners are told the same isotropic model, which must be proper.
    if (!(env.sigma > 0.0) || !(env.sigma_q > 0.0))
        throw ConfigError("sigma and sigma_q must be positive");
    if (learners.empty())
        throw ConfigError("learner list is empty");
    if (!(alpha >= 0.0))
        throw ConfigError("alpha must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("delta must lie in (0, 1)");
    if (n_runs < 1)
        throw ConfigError("n_runs must be at least 1");
    if (sweep_axis != "n" && sweep_axis != "m")
        throw ConfigError("sweep_axis must be 'n' or 'm'");
    if (sweep_values.empty())
        throw ConfigError("sweep_values is empty");
    for (std::size_t i = 0; i < sweep_values.size(); ++i) {
        if (sweep_values[i] <= 0)
            throw ConfigError("sweep values must be positive");
        if (i > 0 && sweep_values[i] <= sweep_values[i - 1])
            throw ConfigError("sweep values must be strictly increasing");
    }
    if (threads < 0)
        throw ConfigError("threads must be nonnegative");
    if (gamma && !(*gamma >= 0.0))
        throw ConfigError("gamma must be nonnegative");
}

std::string ExperimentConfig::to_text() const
{
    std::ostringstream out;
    out << "# hieropo configuration\n";
    out << "d = " << env.d << '\n';
    out << "K = " << env.K << '\n';
    out << "m = " << env.m << '\n';
    out << "n = " << env.n << '\n';
    out << "sigma = " << fmt(env.sigma) << '\n';
    out << "sigma_q = " << fmt(env.sigma_q) << '\n';
    out << "sigma_0 = " << fmt(env.sigma_0) << '\n';
    out << "seed = " << env.seed << '\n';
    out << "n_eval = " << env.n_eval << '\n';
    out << "learners = ";
    for (std::size_t i = 0; i < learners.size(); ++i)
        out << (i ? "," : "") << to_string(learners[i]);
    out << '\n';
    out << "alpha = " << fmt(alpha) << '\n';
    out << "delta = " << fmt(delta) << '\n';
    out << "n_runs = " << n_runs << '\n';
    out << "sweep_axis = " << sweep_axis << '\n';
    out << "sweep_values = ";
    for (std::size_t i = 0; i < sweep_values.size(); ++i)
        out << (i ? "," : "") << sweep_values[i];
    out << '\n';
    out << "threads = " << threads << '\n';
    out << "gamma = " << (gamma ? fmt(*gamma) : std::string("auto")) << '\n';
    out << "rank = " << rank << '\n';
    out << "lambda_reg = " << fmt(lambda_reg) << '\n';
    out << "als_sweeps = " << als_sweeps << '\n';
    out << "gmm_k = " << gmm_k << '\n';
    out << "gmm_max_iters = " << gmm_max_iters << '\n';
    out << "gmm_tol = " << fmt(gmm_tol) << '\n';
    out << "recsys_K = " << recsys_K << '\n';
    out << "recsys_m = " << recsys_m << '\n';
    return out.str();
}

void ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const auto text = trim(std::string_view(line).substr(0, hash));
        if (text.empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        try {
            set(trim(std::string_view(text).substr(0, eq)), std::string_view(text).substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

} // namespace hieropo
