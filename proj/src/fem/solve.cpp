#include "cnnrom/fem/solve.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace cnnrom::fem {

LinearSolution pcg(const CsrMatrix& A, const Eigen::VectorXd& F, double tol, int max_iterations)
{
    const Eigen::Index n = F.size();
    if (A.rows() != n || A.cols() != n) {
        throw std::invalid_argument("pcg: dimension mismatch");
    }
    if (max_iterations <= 0) {
        max_iterations = static_cast<int>(std::max<Eigen::Index>(10 * n, 100));
    }
    const Eigen::VectorXd inv_diag = A.diagonal().cwiseInverse();
    if (!inv_diag.allFinite()) {
        throw SolverError("pcg: zero on the diagonal", {});
    }
    LinearSolution out{Eigen::VectorXd::Zero(n), {}};
    const double target = tol * F.norm();
    Eigen::VectorXd r = F;
    double rnorm = r.norm();
    if (rnorm <= target) {
        out.report = {0, rnorm, true};
        return out;
    }
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::VectorXd Ap = A.multiply(p);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) {
            throw SolverError("pcg: matrix is not positive definite", {it, rnorm, false});
        }
        const double alpha = rz / pAp;
        out.u += alpha * p;
        r -= alpha * Ap;
        rnorm = r.norm();
        if (rnorm <= target) {
            // Recompute the true residual to guard against drift in the recurrence.
            rnorm = (F - A.multiply(out.u)).norm();
            if (rnorm <= target) {
                out.report = {it, rnorm, true};
                return out;
            }
            r = F - A.multiply(out.u);
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    throw SolverError("pcg: no convergence after " + std::to_string(max_iterations) + " iterations",
                      {max_iterations, rnorm, false});
}

LinearSolution solve_linear(const FemSystem& sys, double tol, LinearSolverKind kind)
{
    if (kind == LinearSolverKind::Pcg || (kind == LinearSolverKind::Auto && sys.F.size() >= 5000)) {
        return pcg(sys.A, sys.F, tol);
    }
    LinearSolution out{solve_cholesky(sys.A, sys.F), {}};
    const double res = (sys.F - sys.A.multiply(out.u)).norm();
    out.report = {1, res, res <= tol * sys.F.norm()};
    if (!out.report.converged) {
        throw SolverError("solve_linear: direct solve residual above tolerance", out.report);
    }
    return out;
}

Eigen::VectorXd solve_cholesky(const CsrMatrix& A, const Eigen::VectorXd& F)
{
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A.to_eigen());
    if (llt.info() != Eigen::Success) {
        throw SolverError("solve_cholesky: factorization failed (matrix not SPD)", {});
    }
    return llt.solve(F);
}

Eigen::VectorXd solve_lu(const CsrMatrix& A, const Eigen::VectorXd& F)
{
    Eigen::SparseMatrix<double> m = A.to_eigen();
    m.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) {
        throw SolverError("solve_lu: factorization failed", {});
    }
    return lu.solve(F);
}

}  // namespace cnnrom::fem
