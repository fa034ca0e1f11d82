#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace hieropo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSpdTolerance = 1e-10;

/// (A + Aᵀ) / 2
Matrix symmetrize(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-10);

// Eigenvalues of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);
double max_eigenvalue(const Matrix& a);

/// Throws ConfigError naming `what` unless `a` is square, symmetric and has
/// all eigenvalues above `tol`.
void require_spd(const Matrix& a, std::string_view what, double tol = kSpdTolerance);

/// Inverse of an SPD matrix through a Cholesky solve against the identity.
/// Throws NumericalError when the factorization fails.
Matrix spd_inverse(const Matrix& a);

/// Solve a·x = b for SPD a.
Vector spd_solve(const Matrix& a, const Vector& b);
Matrix spd_solve(const Matrix& a, const Matrix& b);

/// True when a ⪯ b + tol·I in the PSD order.
bool psd_leq(const Matrix& a, const Matrix& b, double tol = kSpdTolerance);

bool is_diagonal(const Matrix& a, double tol = 1e-12);

} // namespace hieropo
