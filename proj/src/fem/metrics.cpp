#include "cnnrom/fem/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace cnnrom::fem {

double relative_test_mean_error(std::span<const Eigen::VectorXd> preds, std::span<const Eigen::VectorXd> refs)
{
    if (preds.size() != refs.size()) {
        throw std::invalid_argument("relative_test_mean_error: prediction and reference counts differ");
    }
    if (refs.empty()) {
        throw std::invalid_argument("relative_test_mean_error: empty sample set");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (preds[i].size() != refs[i].size()) {
            throw std::invalid_argument("relative_test_mean_error: sample shape mismatch");
        }
        const double denom = refs[i].squaredNorm();
        if (denom == 0.0) {
            throw std::invalid_argument("relative_test_mean_error: zero-norm reference");
        }
        sum += (refs[i] - preds[i]).squaredNorm() / denom;
    }
    return sum / static_cast<double>(refs.size());
}

double discrete_l2(const Eigen::VectorXd& v, double hx, double hy)
{
    return std::sqrt(hx * hy * v.squaredNorm());
}

double l2_error(const Grid2D& grid, const Eigen::VectorXd& u_free, const std::function<double(double, double)>& exact)
{
    if (u_free.size() != grid.num_free()) {
        throw std::invalid_argument("l2_error: vector length does not match free-node count");
    }
    // Gauss-Legendre on [0, 1].
    const double a = 0.5 * std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = 0.5 * std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = 0.25 * (18.0 + std::sqrt(30.0)) / 36.0 * 2.0;
    const double wb = 0.25 * (18.0 - std::sqrt(30.0)) / 36.0 * 2.0;
    const std::array<double, 4> pts{0.5 - b, 0.5 - a, 0.5 + a, 0.5 + b};
    const std::array<double, 4> wts{wb, wa, wa, wb};

    const int count = grid.nodes_per_element();
    double sum = 0.0;
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        std::array<double, 4> px{};
        std::array<double, 4> py{};
        std::array<double, 4> val{};
        for (int k = 0; k < count; ++k) {
            const int n = nodes[static_cast<std::size_t>(k)];
            px[static_cast<std::size_t>(k)] = grid.x(grid.node_ix(n));
            py[static_cast<std::size_t>(k)] = grid.y(grid.node_iy(n));
            const int f = grid.free_index(n);
            val[static_cast<std::size_t>(k)] = f >= 0 ? u_free[f] : 0.0;
        }
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                const double s = pts[i];
                const double t = pts[j];
                std::array<double, 4> phi{};
                double jac = 0.0;
                if (count == 4) {
                    phi = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
                    jac = grid.hx() * grid.hy();
                } else {
                    // Collapsed map of the unit square onto the triangle.
                    phi = {1 - s, s * (1 - t), s * t, 0.0};
                    jac = 2.0 * grid.element_area() * s;
                }
                double x = 0.0;
                double y = 0.0;
                double uh = 0.0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
                    x += phi[k] * px[k];
                    y += phi[k] * py[k];
                    uh += phi[k] * val[k];
                }
                const double d = exact(x, y) - uh;
                sum += wts[i] * wts[j] * jac * d * d;
            }
        }
    }
    return std::sqrt(sum);
}

}  // namespace cnnrom::fem
