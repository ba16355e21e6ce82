#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "cnnrom/fem/grid.hpp"

namespace cnnrom::fem {

/// Mean over samples of ||ref - pred||_2^2 / ||ref||_2^2.
/// Throws std::invalid_argument on length/shape mismatch or a zero-norm reference.
double relative_test_mean_error(std::span<const Eigen::VectorXd> preds, std::span<const Eigen::VectorXd> refs);

/// Discrete L2 norm sqrt(hx*hy * sum v_i^2) on a uniform grid.
double discrete_l2(const Eigen::VectorXd& v, double hx, double hy);

/// L2 norm of (exact - u_h) over the domain, where u_h is the finite element
/// function of the free-node vector (zero on the boundary). Integrated with
/// 4-point Gauss rules per element, so the interpolant itself is measured.
double l2_error(const Grid2D& grid, const Eigen::VectorXd& u_free, const std::function<double(double, double)>& exact);

}  // namespace cnnrom::fem
