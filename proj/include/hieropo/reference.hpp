#pragma once

// Straight serial loops for every OpenMP kernel. They fix the arithmetic
// order the parallel versions must reproduce bit for bit, and serve as the
// baseline in bench_kernels.

#include "hieropo/envsim.hpp"
#include "hieropo/posterior.hpp"

#include <utility>
#include <vector>

namespace hieropo::reference {

std::vector<TaskStatistics> compute_task_statistics(const LoggedDataset& dataset, const HierModelConfig& config);

std::vector<EvaluationResult> evaluate_policies(const Environment& env, const std::vector<const LearnedPolicy*>& policies,
                                                int task, int n_eval, Rng& rng);

void solve_factor_rows(const std::vector<std::vector<std::pair<int, double>>>& adjacency, const Matrix& fixed,
                       double lambda_reg, Matrix& out);

double gmm_e_step(const Matrix& points, const Vector& weights, const Matrix& means, const std::vector<Matrix>& covs,
                  Matrix& resp);

} // namespace hieropo::reference
