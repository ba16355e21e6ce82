#pragma once

#include <stdexcept>
#include <string>

#include "cnnrom/fem/assembly.hpp"

namespace cnnrom::fem {

struct SolveReport {
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, SolveReport report) : std::runtime_error(what), report_(report) {}
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

struct LinearSolution {
    Eigen::VectorXd u;
    SolveReport report;
};

/// Jacobi-preconditioned conjugate gradients on an SPD matrix until
/// ||A u - F|| <= tol * ||F||. Throws SolverError after max_iterations
/// (default 10 * n).
LinearSolution pcg(const CsrMatrix& A, const Eigen::VectorXd& F, double tol, int max_iterations = 0);

enum class LinearSolverKind { Auto, Pcg, Cholesky };

/// Auto picks a sparse Cholesky factorization below 5000 unknowns and PCG above.
/// Throws SolverError unless ||A u - F|| <= tol * ||F||.
LinearSolution solve_linear(const FemSystem& sys, double tol = 1e-10, LinearSolverKind kind = LinearSolverKind::Auto);

/// Sparse Cholesky solve; throws SolverError if A is not positive definite.
Eigen::VectorXd solve_cholesky(const CsrMatrix& A, const Eigen::VectorXd& F);

/// Sparse LU solve for general (possibly indefinite) matrices.
Eigen::VectorXd solve_lu(const CsrMatrix& A, const Eigen::VectorXd& F);

}  // namespace cnnrom::fem
