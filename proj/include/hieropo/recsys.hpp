#pragma once

#include "hieropo/envsim.hpp"
#include "hieropo/linalg.hpp"
#include "hieropo/posterior.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hieropo {

struct Rating {
    int user = 0; // dense, 0-based
    int item = 0;
    double value = 0.0;
};

/// Sparse ratings with dense ids. `user_ids[u]` / `item_ids[i]` keep the
/// original ids from the input file.
struct RatingsMatrix {
    int n_users = 0;
    int n_items = 0;
    std::vector<Rating> entries;
    std::vector<long long> user_ids;
    std::vector<long long> item_ids;

    /// Per-user and per-item adjacency in entry order: (other index, rating).
    std::vector<std::vector<std::pair<int, double>>> by_user() const;
    std::vector<std::vector<std::pair<int, double>>> by_item() const;
};

struct RawRating {
    long long user = 0;
    long long item = 0;
    double value = 0.0;
};

/// Remaps ids densely in order of first appearance. Throws DataError on a
/// duplicate (user, item) pair.
RatingsMatrix make_ratings(const std::vector<RawRating>& raw);

/// MovieLens `user::item::rating[::timestamp]` or CSV `user,item,rating[,...]`
/// (a non-numeric first line is treated as a header).
RatingsMatrix parse_ratings(std::istream& in, const std::string& source = "<stream>");
RatingsMatrix read_ratings(const std::filesystem::path& path);

/// Low-rank ratings for tests and demos: users drawn around `groups` centers,
/// items standard normal, Gaussian rating noise, each entry kept with
/// probability `density` (every user and item keeps at least one rating).
RatingsMatrix make_synthetic_ratings(int n_users, int n_items, int rank, int groups, double group_spread,
                                     double noise, double density, std::uint64_t seed);

struct AlsOptions {
    int rank = 10;
    double lambda_reg = 0.1;
    int sweeps = 20;
    std::uint64_t seed = 1;
};

struct Factorization {
    Matrix U; // n_users × rank
    Matrix V; // n_items × rank
    int rank = 0;
    double lambda_reg = 0.0;
    std::vector<double> rmse_trace;      // after each full sweep
    std::vector<double> objective_trace; // initial value, then after each half-sweep
};

/// Σ (r − U_iᵀV_j)² + λ(‖U‖² + ‖V‖²) over observed entries.
double als_objective(const RatingsMatrix& ratings, const Matrix& U, const Matrix& V, double lambda_reg);
double rating_rmse(const RatingsMatrix& ratings, const Matrix& U, const Matrix& V);

/// One ALS half-sweep: every row of `out` becomes the ridge solution
/// (Σ f fᵀ + λI)⁻¹ Σ r f against the fixed factor. Parallel over rows.
void solve_factor_rows(const std::vector<std::vector<std::pair<int, double>>>& adjacency, const Matrix& fixed,
                       double lambda_reg, Matrix& out);

Factorization als_factorize(const RatingsMatrix& ratings, const AlsOptions& options);

struct GmmOptions {
    int k = 7;
    int max_iters = 200;
    double tol = 1e-8;
    double reg_covar = 1e-6;
    std::uint64_t seed = 1;
};

struct GmmFit {
    Vector weights;
    Matrix means; // k × d
    std::vector<Matrix> covariances;
    std::vector<double> log_likelihood_trace;
    std::vector<std::string> events; // component re-initializations

    int k() const { return static_cast<int>(weights.size()); }
    /// Most responsible component per point, lowest index on ties.
    std::vector<int> assign(const Matrix& points) const;
};

/// E-step: fills resp (n × k) and returns the total log-likelihood, summed in
/// point order. Parallel over points.
double gmm_e_step(const Matrix& points, const Vector& weights, const Matrix& means, const std::vector<Matrix>& covs,
                  Matrix& resp);

/// Full-covariance EM with k-means++ initialization.
GmmFit gmm_fit(const Matrix& points, const GmmOptions& options);

struct EstimatedHierParams {
    Vector mu_q;
    Matrix sigma_q;
    Vector sigma_q_raw_eigenvalues; // before jitter; rank-deficient when k ≤ d
    Vector mu_star;
    Matrix sigma_0;
    double sigma_raw = 0.0;
    double sigma = 0.0; // floored
    int cluster = 0;
    std::vector<int> cluster_sizes;
    std::vector<int> cluster_users; // dense user indices

    HierModelConfig model() const { return HierModelConfig(mu_q, sigma_q, sigma_0, sigma); }
};

inline constexpr double kCenterJitter = 1e-6;
inline constexpr double kSigmaFloor = 1e-6;

EstimatedHierParams estimate_hier_params(const Factorization& factorization, const GmmFit& gmm,
                                         const RatingsMatrix& ratings);

/// m users of the chosen cluster as tasks (θ_s = U_i), slates of K distinct
/// item rows. Item rows are scaled by one global constant so the largest
/// norm is at most 1; the constant is kept in sampler.item_scale.
/// Draws from stream (seed, recsys_tasks, run).
Environment build_recsys_environment(const EstimatedHierParams& params, const Factorization& factorization, int K,
                                     int m, std::uint64_t seed, int run = 0);

std::string hier_params_to_json(const EstimatedHierParams& params, const RatingsMatrix& ratings);
std::string factorization_to_json(const Factorization& factorization);

} // namespace hieropo
