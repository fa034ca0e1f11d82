#include "hieropo/linalg.hpp"

#include "hieropo/error.hpp"

#include <string>

namespace hieropo {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_symmetric(const Matrix& a, double tol)
{
    if (a.rows() != a.cols())
        return false;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

namespace {

Vector symmetric_eigenvalues(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric eigenvalue decomposition did not converge");
    return solver.eigenvalues();
}

} // namespace

double min_eigenvalue(const Matrix& a)
{
    if (a.size() == 0)
        return 0.0;
    return symmetric_eigenvalues(a).minCoeff();
}

double max_eigenvalue(const Matrix& a)
{
    if (a.size() == 0)
        return 0.0;
    return symmetric_eigenvalues(a).maxCoeff();
}

void require_spd(const Matrix& a, std::string_view what, double tol)
{
    const std::string name(what);
    if (a.rows() != a.cols() || a.rows() == 0)
        throw ConfigError(name + " must be a non-empty square matrix");
    if (!a.allFinite())
        throw ConfigError(name + " has non-finite entries");
    if (!is_symmetric(a, tol))
        throw ConfigError(name + " is not symmetric");
    const double lo = min_eigenvalue(a);
    if (!(lo > tol))
        throw ConfigError(name + " is not positive definite (min eigenvalue " + std::to_string(lo) + ")");
}

Matrix spd_inverse(const Matrix& a)
{
    return spd_solve(a, Matrix(Matrix::Identity(a.rows(), a.cols())));
}

Vector spd_solve(const Matrix& a, const Vector& b)
{
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization failed on a matrix expected to be SPD");
    return llt.solve(b);
}

Matrix spd_solve(const Matrix& a, const Matrix& b)
{
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization failed on a matrix expected to be SPD");
    return llt.solve(b);
}

bool psd_leq(const Matrix& a, const Matrix& b, double tol)
{
    return min_eigenvalue(b - a) >= -tol;
}

bool is_diagonal(const Matrix& a, double tol)
{
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j && std::abs(a(i, j)) > tol)
                return false;
    return true;
}

} // namespace hieropo
