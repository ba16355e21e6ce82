#include "cnnrom/fields/kle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cnnrom/fields/rng.hpp"

namespace cnnrom::fields {

double exponential_kernel(double x1, double y1, double x2, double y2, double l)
{
    if (std::isinf(l)) {
        return 1.0;
    }
    return std::exp(-std::hypot(x1 - x2, y1 - y2) / l);
}

KleModel build_kle(const fem::Grid2D& grid, double l, double m, int Q)
{
    const int n = grid.num_nodes();
    if (Q < 1 || Q > n) {
        throw std::invalid_argument("build_kle: Q must lie in [1, node count]");
    }
    if (!(l > 0.0)) {
        throw std::invalid_argument("build_kle: bandwidth must be positive");
    }
    Eigen::MatrixXd C(n, n);
    for (int a = 0; a < n; ++a) {
        const double xa = grid.x(grid.node_ix(a));
        const double ya = grid.y(grid.node_iy(a));
        C(a, a) = 1.0;
        for (int b = 0; b < a; ++b) {
            const double k = exponential_kernel(xa, ya, grid.x(grid.node_ix(b)), grid.y(grid.node_iy(b)), l);
            C(a, b) = k;
            C(b, a) = k;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("build_kle: eigensolver failed");
    }
    // Eigen sorts ascending; take the last Q in reverse.
    KleModel kle{Q, l, m, Eigen::VectorXd(Q), Eigen::MatrixXd(n, Q), grid};
    for (int i = 0; i < Q; ++i) {
        const int src = n - 1 - i;
        kle.lambdas[i] = std::max(eig.eigenvalues()[src], 0.0);
        kle.modes.col(i) = eig.eigenvectors().col(src);
        Eigen::Index peak = 0;
        kle.modes.col(i).cwiseAbs().maxCoeff(&peak);
        if (kle.modes(peak, i) < 0.0) {
            kle.modes.col(i) *= -1.0;
        }
    }
    return kle;
}

Eigen::VectorXd kle_log_field(const KleModel& kle, const Eigen::VectorXd& z)
{
    if (z.size() != kle.Q) {
        throw std::invalid_argument("kle_log_field: coefficient count does not match Q");
    }
    const Eigen::VectorXd scaled = kle.lambdas.cwiseSqrt().cwiseProduct(z);
    return (kle.modes * scaled).array() + kle.m;
}

fem::FieldNodal sample_grf(const KleModel& kle, const Eigen::VectorXd& z)
{
    const Eigen::VectorXd xi = kle_log_field(kle, z);
    fem::FieldNodal K(kle.grid.ny(), kle.grid.nx());
    Eigen::Map<Eigen::VectorXd>(K.data(), K.size()) = xi.array().exp();
    return K;
}

Eigen::VectorXd draw_kle_coefficients(const KleModel& kle, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(kle.Q);
    for (int i = 0; i < kle.Q; ++i) {
        z[i] = normal(rng);
    }
    return z;
}

fem::FieldNodal sample_grf(const KleModel& kle, std::uint64_t seed)
{
    return sample_grf(kle, draw_kle_coefficients(kle, seed));
}

Eigen::MatrixXd grf_jacobian(const KleModel& kle, const Eigen::VectorXd& z)
{
    const Eigen::VectorXd K = kle_log_field(kle, z).array().exp();
    return K.asDiagonal() * kle.modes * kle.lambdas.cwiseSqrt().asDiagonal();
}

}  // namespace cnnrom::fields
