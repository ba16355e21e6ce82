#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "cnnrom/fem/grid.hpp"

namespace cnnrom::fields {

/// Truncated Karhunen-Loeve expansion of a Gaussian field with covariance
/// exp(-|x1 - x2| / l) on the full node set of a grid.
struct KleModel {
    int Q = 0;
    double l = 0.0;
    double m = 0.0;
    /// Descending, nonnegative.
    Eigen::VectorXd lambdas;
    /// num_nodes x Q, orthonormal columns, rows in Grid2D::node order.
    Eigen::MatrixXd modes;
    fem::Grid2D grid;
};

/// Exponential covariance between two points; l may be +infinity.
double exponential_kernel(double x1, double y1, double x2, double y2, double l);

/// Dense covariance over the grid nodes, eigendecomposed; keeps the top Q pairs.
/// Throws std::invalid_argument for Q outside [1, num_nodes] or l <= 0,
/// std::runtime_error if the eigensolver fails.
KleModel build_kle(const fem::Grid2D& grid, double l, double m, int Q);

/// Log-field m + sum_i sqrt(lambda_i) z_i g_i as a flat nodal vector.
Eigen::VectorXd kle_log_field(const KleModel& kle, const Eigen::VectorXd& z);

/// K = exp(m + sum_i sqrt(lambda_i) z_i g_i).
fem::FieldNodal sample_grf(const KleModel& kle, const Eigen::VectorXd& z);
/// Same with z drawn standard normal from `seed`.
fem::FieldNodal sample_grf(const KleModel& kle, std::uint64_t seed);
Eigen::VectorXd draw_kle_coefficients(const KleModel& kle, std::uint64_t seed);

/// dK/dz (num_nodes x Q) at z; column i is sqrt(lambda_i) g_i exp(xi).
Eigen::MatrixXd grf_jacobian(const KleModel& kle, const Eigen::VectorXd& z);

}  // namespace cnnrom::fields
