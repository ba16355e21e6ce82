#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cnnrom/fem/assembly.hpp"

namespace cnnrom::pod {

struct PodBasis {
    /// N_free x N, orthonormal columns ordered by descending singular value.
    Eigen::MatrixXd P;
    /// Every singular value of the snapshot matrix, descending.
    Eigen::VectorXd singular_values;
    /// Numerical rank of the snapshots; when below N the trailing columns of P
    /// complete an orthonormal basis and carry no snapshot information.
    int rank = 0;
    bool rank_deficient = false;
};

/// Top-N left singular vectors of the N_free x M snapshot matrix (thin SVD,
/// no mean-centering). Throws std::invalid_argument unless 1 <= N <= min(N_free, M).
PodBasis build_pod_basis(const Eigen::MatrixXd& snapshots, int N);

/// Sum over snapshots of ||u - P P^T u||^2.
double projection_error(const Eigen::MatrixXd& P, const Eigen::MatrixXd& snapshots);

struct ReducedSolution {
    Eigen::VectorXd u_N;
    Eigen::VectorXd u_hat;
};

/// Solves (P^T A P) u_N = P^T F by LU with partial pivoting; u_hat = P u_N.
/// Throws std::runtime_error when the reduced matrix is numerically singular.
ReducedSolution galerkin_reduce_solve(const Eigen::MatrixXd& P, const fem::FemSystem& sys);

struct PodCurvePoint {
    int N = 0;
    /// Relative test mean error of the Galerkin-reduced solutions.
    double eps_test = 0.0;
    /// Relative mean projection error on the training snapshots.
    double eps_train = 0.0;
};

/// Builds one basis on the training snapshots and reports the error for each N.
std::vector<PodCurvePoint> pod_error_curve(const Eigen::MatrixXd& train_snapshots,
                                           std::span<const fem::FemSystem> test_systems,
                                           std::span<const Eigen::VectorXd> test_solutions, std::span<const int> Ns);

}  // namespace cnnrom::pod
