#include "doctest.h"

#include <random>
#include <vector>

#include "cnnrom/fem/assembly.hpp"
#include "cnnrom/fem/solve.hpp"
#include "cnnrom/fields/binomial.hpp"
#include "cnnrom/fields/rng.hpp"
#include "cnnrom/pod/pod.hpp"

using namespace cnnrom;
using namespace cnnrom::pod;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = normal(rng);
    }
    return m;
}

fem::FemSystem random_darcy(const fem::Grid2D& grid, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.5, 3.0);
    fem::FieldNodal K(grid.ny(), grid.nx());
    for (Eigen::Index i = 0; i < K.size(); ++i) {
        K.data()[i] = dist(rng);
    }
    return fem::assemble_darcy(K, grid);
}

}  // namespace

TEST_CASE("POD of a repeated snapshot")
{
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(6, 2);
    S(0, 0) = 1.0;
    S(0, 1) = 1.0;
    const PodBasis b = build_pod_basis(S, 1);
    CHECK(std::abs(std::abs(b.P(0, 0)) - 1.0) < 1e-14);
    CHECK(b.P.col(0).tail(5).norm() < 1e-14);
    CHECK(projection_error(b.P, S) < 1e-28);

    const PodBasis b2 = build_pod_basis(S, 2);
    CHECK(b2.rank == 1);
    CHECK(b2.rank_deficient);
    CHECK((b2.P.transpose() * b2.P - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK_THROWS_AS(build_pod_basis(S, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_pod_basis(S, 0), std::invalid_argument);
}

TEST_CASE("POD projection error equals the singular value tail")
{
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const Eigen::MatrixXd S = random_matrix(200, 50, seed);
        const Eigen::JacobiSVD<Eigen::MatrixXd> full(S);
        for (int N : {1, 7, 25, 49, 50}) {
            const PodBasis b = build_pod_basis(S, N);
            const double tail = full.singularValues().tail(50 - N).squaredNorm();
            CHECK(std::abs(projection_error(b.P, S) - tail) <= 1e-10 * S.squaredNorm());
            CHECK((b.P.transpose() * b.P - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
    const Eigen::MatrixXd S = random_matrix(20, 5, 9);
    const PodBasis b = build_pod_basis(S, 5);
    CHECK((b.P * (b.P.transpose() * S) - S).norm() <= 1e-10);
}

TEST_CASE("Galerkin-reduced solve")
{
    const fem::Grid2D grid = fem::build_grid(8, 8, fem::ElementKind::QuadBilinear);
    const fem::FemSystem sys = random_darcy(grid, 3);
    const Eigen::VectorXd u = fem::solve_linear(sys).u;

    // Exactness when the solution lies in the span.
    Eigen::MatrixXd P = random_matrix(grid.num_free(), 3, 4);
    P.col(1) = u;
    const ReducedSolution exact = galerkin_reduce_solve(P, sys);
    CHECK((exact.u_hat - u).norm() <= 1e-10 * u.norm());

    // Scalar Galerkin.
    const Eigen::VectorXd v = random_matrix(grid.num_free(), 1, 5).col(0).normalized();
    const ReducedSolution one = galerkin_reduce_solve(v, sys);
    CHECK(one.u_N[0] == doctest::Approx(v.dot(sys.F) / v.dot(sys.A.multiply(v))).epsilon(1e-12));

    // Residual orthogonality.
    const Eigen::MatrixXd Q = random_matrix(grid.num_free(), 6, 6);
    const ReducedSolution r = galerkin_reduce_solve(Q, sys);
    const Eigen::VectorXd res = sys.A.multiply(r.u_hat) - sys.F;
    CHECK((Q.transpose() * res).norm() <= 1e-10 * (Q.transpose() * sys.F).norm());

    CHECK_THROWS_AS(galerkin_reduce_solve(Eigen::MatrixXd::Zero(grid.num_free(), 2), sys), std::runtime_error);
    CHECK_THROWS_AS(galerkin_reduce_solve(Eigen::MatrixXd::Zero(3, 2), sys), std::invalid_argument);
}

TEST_CASE("POD error curve on binomial Darcy data")
{
    const fem::Grid2D grid = fem::build_grid(17, 17, fem::ElementKind::QuadBilinear);
    const fields::BinomialProcessCfg cfg;
    auto make = [&](int count, std::uint64_t seed, std::vector<fem::FemSystem>& systems,
                    std::vector<Eigen::VectorXd>& solutions) {
        for (int i = 0; i < count; ++i) {
            const auto K = fields::sample_binomial_field(cfg, grid, fields::derive_seed(seed, i));
            systems.push_back(fem::assemble_darcy(K, grid));
            solutions.push_back(fem::solve_linear(systems.back()).u);
        }
    };
    std::vector<fem::FemSystem> train_sys;
    std::vector<Eigen::VectorXd> train_u;
    std::vector<fem::FemSystem> test_sys;
    std::vector<Eigen::VectorXd> test_u;
    make(256, 100, train_sys, train_u);
    make(64, 200, test_sys, test_u);
    Eigen::MatrixXd S(grid.num_free(), static_cast<Eigen::Index>(train_u.size()));
    for (std::size_t i = 0; i < train_u.size(); ++i) {
        S.col(static_cast<Eigen::Index>(i)) = train_u[i];
    }

    const std::vector<int> Ns{1, 2, 5, 10, 20};
    const auto curve = pod_error_curve(S, test_sys, test_u, Ns);
    REQUIRE(curve.size() == Ns.size());
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].eps_test < curve[i - 1].eps_test);
        CHECK(curve[i].eps_train <= curve[i - 1].eps_train);
    }

    const std::vector<int> full{grid.num_free()};
    const auto all = pod_error_curve(S, test_sys, test_u, full);
    CHECK(all[0].eps_train <= 1e-10);
    CHECK(all[0].eps_test <= 1e-10);
}
