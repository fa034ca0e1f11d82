#include "hieropo/recsys.hpp"

#include "hieropo/error.hpp"
#include "hieropo/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace hieropo {

using nlohmann::json;

// --- ratings ---------------------------------------------------------------

std::vector<std::vector<std::pair<int, double>>> RatingsMatrix::by_user() const
{
    std::vector<std::vector<std::pair<int, double>>> out(n_users);
    for (const auto& r : entries)
        out[r.user].emplace_back(r.item, r.value);
    return out;
}

std::vector<std::vector<std::pair<int, double>>> RatingsMatrix::by_item() const
{
    std::vector<std::vector<std::pair<int, double>>> out(n_items);
    for (const auto& r : entries)
        out[r.item].emplace_back(r.user, r.value);
    return out;
}

RatingsMatrix make_ratings(const std::vector<RawRating>& raw)
{
    RatingsMatrix out;
    std::unordered_map<long long, int> users;
    std::unordered_map<long long, int> items;
    std::unordered_map<long long, std::vector<int>> seen; // dense user -> dense items
    for (const auto& r : raw) {
        auto [u, new_user] = users.try_emplace(r.user, static_cast<int>(out.user_ids.size()));
        if (new_user)
            out.user_ids.push_back(r.user);
        auto [i, new_item] = items.try_emplace(r.item, static_cast<int>(out.item_ids.size()));
        if (new_item)
            out.item_ids.push_back(r.item);
        auto& items_of_user = seen[u->second];
        if (std::find(items_of_user.begin(), items_of_user.end(), i->second) != items_of_user.end())
            throw DataError("duplicate rating for user " + std::to_string(r.user) + ", item " + std::to_string(r.item));
        items_of_user.push_back(i->second);
        out.entries.push_back({u->second, i->second, r.value});
    }
    out.n_users = static_cast<int>(out.user_ids.size());
    out.n_items = static_cast<int>(out.item_ids.size());
    return out;
}

RatingsMatrix parse_ratings(std::istream& in, const std::string& source)
{
    std::vector<RawRating> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        std::vector<std::string> cells;
        if (line.find("::") != std::string::npos) {
            std::size_t pos = 0;
            while (true) {
                const auto next = line.find("::", pos);
                cells.push_back(line.substr(pos, next - pos));
                if (next == std::string::npos)
                    break;
                pos = next + 2;
            }
        } else {
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
        }
        if (cells.size() < 3)
            throw DataError(source + ":" + std::to_string(lineno) + ": expected user, item, rating");
        try {
            RawRating r;
            r.user = std::stoll(cells[0]);
            r.item = std::stoll(cells[1]);
            r.value = std::stod(cells[2]);
            raw.push_back(r);
        } catch (const std::logic_error&) {
            if (raw.empty() && lineno == 1)
                continue; // header
            throw DataError(source + ":" + std::to_string(lineno) + ": unparsable rating line");
        }
    }
    if (raw.empty())
        throw DataError(source + ": no ratings");
    try {
        return make_ratings(raw);
    } catch (const DataError& e) {
        throw DataError(source + ": " + e.what());
    }
}

RatingsMatrix read_ratings(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open ratings '" + path.string() + "'");
    return parse_ratings(in, path.string());
}

RatingsMatrix make_synthetic_ratings(int n_users, int n_items, int rank, int groups, double group_spread, double noise,
                                     double density, std::uint64_t seed)
{
    if (n_users < 1 || n_items < 1 || rank < 1 || groups < 1)
        throw ConfigError("synthetic ratings need positive sizes");
    Rng rng(mix64(seed));
    Matrix centers(groups, rank);
    for (int g = 0; g < groups; ++g)
        for (int i = 0; i < rank; ++i)
            centers(g, i) = rng.normal();
    Matrix U(n_users, rank);
    for (int u = 0; u < n_users; ++u) {
        const auto g = static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)));
        for (int i = 0; i < rank; ++i)
            U(u, i) = centers(g, i) + group_spread * rng.normal();
    }
    Matrix V(n_items, rank);
    for (int j = 0; j < n_items; ++j)
        for (int i = 0; i < rank; ++i)
            V(j, i) = rng.normal();

    std::vector<RawRating> raw;
    std::vector<char> item_seen(n_items, 0);
    for (int u = 0; u < n_users; ++u) {
        const auto forced = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_items)));
        for (int j = 0; j < n_items; ++j) {
            const double keep = rng.uniform();
            const double eps = rng.normal();
            if (keep < density || j == forced) {
                raw.push_back({u + 1, j + 1, U.row(u).dot(V.row(j)) + noise * eps});
                item_seen[j] = 1;
            }
        }
    }
    for (int j = 0; j < n_items; ++j)
        if (!item_seen[j]) {
            const auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_users)));
            raw.push_back({u + 1, j + 1, U.row(u).dot(V.row(j)) + noise * rng.normal()});
        }
    return make_ratings(raw);
}

// --- ALS -------------------------------------------------------------------

double als_objective(const RatingsMatrix& ratings, const Matrix& U, const Matrix& V, double lambda_reg)
{
    double sse = 0.0;
    for (const auto& r : ratings.entries) {
        const double e = r.value - U.row(r.user).dot(V.row(r.item));
        sse += e * e;
    }
    return sse + lambda_reg * (U.squaredNorm() + V.squaredNorm());
}

double rating_rmse(const RatingsMatrix& ratings, const Matrix& U, const Matrix& V)
{
    if (ratings.entries.empty())
        return 0.0;
    double sse = 0.0;
    for (const auto& r : ratings.entries) {
        const double e = r.value - U.row(r.user).dot(V.row(r.item));
        sse += e * e;
    }
    return std::sqrt(sse / static_cast<double>(ratings.entries.size()));
}

void solve_factor_rows(const std::vector<std::vector<std::pair<int, double>>>& adjacency, const Matrix& fixed,
                       double lambda_reg, Matrix& out)
{
    const auto rank = fixed.cols();
    const int rows = static_cast<int>(adjacency.size());
    out.resize(rows, rank);
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < rows; ++i) {
        Matrix a = lambda_reg * Matrix::Identity(rank, rank);
        Vector b = Vector::Zero(rank);
        for (const auto& [j, r] : adjacency[i]) {
            a.noalias() += fixed.row(j).transpose() * fixed.row(j);
            b += r * fixed.row(j).transpose();
        }
        out.row(i) = a.llt().solve(b).transpose();
    }
}

Factorization als_factorize(const RatingsMatrix& ratings, const AlsOptions& options)
{
    if (options.rank < 1)
        throw ConfigError("ALS rank must be positive");
    if (!(options.lambda_reg > 0.0))
        throw ConfigError("ALS regularization must be positive");
    if (options.sweeps < 0)
        throw ConfigError("ALS sweeps must be nonnegative");
    const auto users = ratings.by_user();
    const auto items = ratings.by_item();
    for (int u = 0; u < ratings.n_users; ++u)
        if (users[u].empty())
            throw DataError("user " + std::to_string(ratings.user_ids[u]) + " has no ratings");
    for (int j = 0; j < ratings.n_items; ++j)
        if (items[j].empty())
            throw DataError("item " + std::to_string(ratings.item_ids[j]) + " has no ratings");

    Factorization f;
    f.rank = options.rank;
    f.lambda_reg = options.lambda_reg;
    auto rng = Rng::stream(options.seed, Stream::als_init);
    f.U.resize(ratings.n_users, options.rank);
    f.V.resize(ratings.n_items, options.rank);
    for (Eigen::Index i = 0; i < f.U.size(); ++i)
        f.U.data()[i] = 0.1 * rng.normal();
    for (Eigen::Index i = 0; i < f.V.size(); ++i)
        f.V.data()[i] = 0.1 * rng.normal();

    f.objective_trace.push_back(als_objective(ratings, f.U, f.V, options.lambda_reg));
    for (int sweep = 0; sweep < options.sweeps; ++sweep) {
        solve_factor_rows(users, f.V, options.lambda_reg, f.U);
        f.objective_trace.push_back(als_objective(ratings, f.U, f.V, options.lambda_reg));
        solve_factor_rows(items, f.U, options.lambda_reg, f.V);
        f.objective_trace.push_back(als_objective(ratings, f.U, f.V, options.lambda_reg));
        f.rmse_trace.push_back(rating_rmse(ratings, f.U, f.V));
    }
    return f;
}

// --- GMM -------------------------------------------------------------------

namespace {

struct ComponentFactor {
    Eigen::LLT<Matrix> llt;
    double log_norm = 0.0; // log weight − ½(d log 2π + log|Σ|)
};

std::vector<ComponentFactor> factor_components(const Vector& weights, const std::vector<Matrix>& covs)
{
    std::vector<ComponentFactor> out(covs.size());
    for (std::size_t c = 0; c < covs.size(); ++c) {
        out[c].llt.compute(covs[c]);
        if (out[c].llt.info() != Eigen::Success)
            throw NumericalError("GMM component covariance lost positive definiteness");
        const Matrix& l = out[c].llt.matrixL();
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        const auto d = static_cast<double>(covs[c].rows());
        out[c].log_norm = std::log(weights(c)) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
    }
    return out;
}

Matrix sample_covariance(const Matrix& points)
{
    const Vector mean = points.colwise().mean().transpose();
    const Matrix centered = points.rowwise() - mean.transpose();
    return centered.transpose() * centered / static_cast<double>(points.rows());
}

} // namespace

double gmm_e_step(const Matrix& points, const Vector& weights, const Matrix& means, const std::vector<Matrix>& covs,
                  Matrix& resp)
{
    const int n = static_cast<int>(points.rows());
    const int k = static_cast<int>(weights.size());
    const auto factors = factor_components(weights, covs);
    resp.resize(n, k);
    Vector point_ll(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const Vector diff = (points.row(i) - means.row(c)).transpose();
            const Vector z = factors[c].llt.matrixL().solve(diff);
            resp(i, c) = factors[c].log_norm - 0.5 * z.squaredNorm();
            top = std::max(top, resp(i, c));
        }
        double sum = 0.0;
        for (int c = 0; c < k; ++c)
            sum += std::exp(resp(i, c) - top);
        const double lse = top + std::log(sum);
        for (int c = 0; c < k; ++c)
            resp(i, c) = std::exp(resp(i, c) - lse);
        point_ll(i) = lse;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += point_ll(i);
    return total;
}

std::vector<int> GmmFit::assign(const Matrix& points) const
{
    Matrix resp;
    gmm_e_step(points, weights, means, covariances, resp);
    std::vector<int> out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        Eigen::Index best = 0;
        resp.row(i).maxCoeff(&best);
        out[i] = static_cast<int>(best);
    }
    return out;
}

GmmFit gmm_fit(const Matrix& points, const GmmOptions& options)
{
    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    const int k = options.k;
    if (k < 1)
        throw ConfigError("GMM needs k >= 1");
    if (n < k)
        throw ConfigError("GMM needs at least k points (n = " + std::to_string(n) + ", k = " + std::to_string(k) + ")");
    if (!(options.reg_covar >= 0.0))
        throw ConfigError("reg_covar must be nonnegative");

    const Matrix eye = Matrix::Identity(d, d);
    const Matrix global_cov = sample_covariance(points) + options.reg_covar * eye;

    // k-means++ seeding
    auto rng = Rng::stream(options.seed, Stream::gmm_init);
    GmmFit fit;
    fit.means.resize(k, d);
    fit.means.row(0) = points.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Vector dist2 = (points.rowwise() - fit.means.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                u -= dist2(pick);
                if (u < 0.0)
                    break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        fit.means.row(c) = points.row(pick);
        dist2 = dist2.cwiseMin((points.rowwise() - fit.means.row(c)).rowwise().squaredNorm());
    }
    fit.weights = Vector::Constant(k, 1.0 / k);
    fit.covariances.assign(k, global_cov);

    Matrix resp;
    for (int iter = 0; iter < options.max_iters; ++iter) {
        const double ll = gmm_e_step(points, fit.weights, fit.means, fit.covariances, resp);
        fit.log_likelihood_trace.push_back(ll);
        const auto len = fit.log_likelihood_trace.size();
        if (len >= 2 && ll - fit.log_likelihood_trace[len - 2] < options.tol)
            break;

        // M-step
        const Vector mass = resp.colwise().sum().transpose();
        for (int c = 0; c < k; ++c) {
            if (mass(c) < 1e-8) {
                // Re-seed at the point the mixture explains worst.
                Eigen::Index worst = 0;
                resp.rowwise().maxCoeff().minCoeff(&worst);
                fit.means.row(c) = points.row(worst);
                fit.covariances[c] = global_cov;
                fit.weights(c) = 1.0 / k;
                fit.events.push_back("iteration " + std::to_string(iter) + ": component " + std::to_string(c) +
                                     " re-initialized (responsibility mass " + std::to_string(mass(c)) + ")");
                continue;
            }
            const Vector mu = (resp.col(c).transpose() * points).transpose() / mass(c);
            const Matrix centered = points.rowwise() - mu.transpose();
            Matrix cov = centered.transpose() * resp.col(c).asDiagonal() * centered / mass(c);
            fit.means.row(c) = mu.transpose();
            fit.covariances[c] = symmetrize(cov) + options.reg_covar * eye;
            fit.weights(c) = mass(c) / n;
        }
        fit.weights /= fit.weights.sum();
    }
    return fit;
}

// --- hierarchical parameters -----------------------------------------------

EstimatedHierParams estimate_hier_params(const Factorization& factorization, const GmmFit& gmm,
                                         const RatingsMatrix& ratings)
{
    const int k = gmm.k();
    if (k < 2)
        throw ConfigError("estimating Sigma_q needs at least 2 clusters (k = " + std::to_string(k) + ")");
    const int d = static_cast<int>(gmm.means.cols());
    if (d != factorization.U.cols())
        throw ConfigError("GMM dimension does not match the factorization rank");

    EstimatedHierParams p;
    p.mu_q = gmm.means.colwise().mean().transpose();
    const Matrix centered = gmm.means.rowwise() - p.mu_q.transpose();
    const Matrix raw = symmetrize(centered.transpose() * centered / static_cast<double>(k));
    p.sigma_q_raw_eigenvalues = Eigen::SelfAdjointEigenSolver<Matrix>(raw, Eigen::EigenvaluesOnly).eigenvalues();
    p.sigma_q = raw + kCenterJitter * Matrix::Identity(d, d);

    const auto labels = gmm.assign(factorization.U);
    p.cluster_sizes.assign(k, 0);
    for (const int c : labels)
        ++p.cluster_sizes[c];
    p.cluster = static_cast<int>(std::max_element(p.cluster_sizes.begin(), p.cluster_sizes.end()) -
                                 p.cluster_sizes.begin());
    for (int u = 0; u < static_cast<int>(labels.size()); ++u)
        if (labels[u] == p.cluster)
            p.cluster_users.push_back(u);
    p.mu_star = gmm.means.row(p.cluster).transpose();
    p.sigma_0 = symmetrize(gmm.covariances[p.cluster]);
    if (min_eigenvalue(p.sigma_0) <= kSpdTolerance)
        p.sigma_0 += kCenterJitter * Matrix::Identity(d, d);

    p.sigma_raw = rating_rmse(ratings, factorization.U, factorization.V);
    p.sigma = std::max(p.sigma_raw, kSigmaFloor);
    return p;
}

Environment build_recsys_environment(const EstimatedHierParams& params, const Factorization& factorization, int K,
                                     int m, std::uint64_t seed, int run)
{
    const int pool = static_cast<int>(params.cluster_users.size());
    if (m < 1 || K < 1)
        throw ConfigError("recsys environment needs positive K and m");
    if (pool < m)
        throw ConfigError("largest cluster has " + std::to_string(pool) + " users, fewer than m = " +
                          std::to_string(m));
    if (factorization.V.rows() < K)
        throw ConfigError("K = " + std::to_string(K) + " exceeds the number of items");

    auto rng = Rng::stream(seed, Stream::recsys_tasks, {static_cast<std::uint64_t>(run)});
    std::vector<int> users = params.cluster_users;
    for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(pool - i)));
        std::swap(users[i], users[j]);
    }

    Environment env;
    env.K = K;
    env.sigma = params.sigma;
    env.mu_star = params.mu_star;
    env.thetas.resize(m, factorization.U.cols());
    for (int s = 0; s < m; ++s)
        env.thetas.row(s) = factorization.U.row(users[s]);
    const double top = factorization.V.rowwise().norm().maxCoeff();
    env.sampler.kind = SlateSampler::Kind::item_pool;
    env.sampler.item_scale = top > 1.0 ? 1.0 / top : 1.0;
    env.sampler.items = factorization.V * env.sampler.item_scale;
    return env;
}

namespace {

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat(const Matrix& a)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        rows.push_back(vec(a.row(i).transpose()));
    return rows;
}

} // namespace

std::string hier_params_to_json(const EstimatedHierParams& params, const RatingsMatrix& ratings)
{
    json j;
    j["model"] = {{"d", params.mu_q.size()},
                  {"mu_q", vec(params.mu_q)},
                  {"Sigma_q", mat(params.sigma_q)},
                  {"Sigma_0", mat(params.sigma_0)},
                  {"sigma", params.sigma}};
    j["sigma_raw"] = params.sigma_raw;
    j["sigma_q_raw_eigenvalues"] = vec(params.sigma_q_raw_eigenvalues);
    j["mu_star"] = vec(params.mu_star);
    j["cluster"] = params.cluster;
    j["cluster_sizes"] = params.cluster_sizes;
    std::vector<long long> users;
    for (const int u : params.cluster_users)
        users.push_back(ratings.user_ids[u]);
    j["cluster_user_ids"] = users;
    return j.dump(1);
}

std::string factorization_to_json(const Factorization& factorization)
{
    json j;
    j["rank"] = factorization.rank;
    j["lambda_reg"] = factorization.lambda_reg;
    j["rmse_trace"] = factorization.rmse_trace;
    j["objective_trace"] = factorization.objective_trace;
    j["U"] = mat(factorization.U);
    j["V"] = mat(factorization.V);
    return j.dump(1);
}

} // namespace hieropo
