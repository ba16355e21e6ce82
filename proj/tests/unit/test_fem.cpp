#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "cnnrom/fem/assembly.hpp"
#include "cnnrom/fem/grid.hpp"
#include "cnnrom/fem/metrics.hpp"
#include "cnnrom/fem/nonlinear.hpp"
#include "cnnrom/fem/solve.hpp"

using namespace cnnrom::fem;
using std::numbers::pi;

namespace {

FieldNodal random_positive_field(const Grid2D& grid, unsigned seed, double lo = 0.5, double hi = 2.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    FieldNodal K(grid.ny(), grid.nx());
    for (Eigen::Index i = 0; i < K.size(); ++i) {
        K.data()[i] = dist(rng);
    }
    return K;
}

// Element stiffness of the unit-coefficient bilinear quad by 2x2 Gauss
// quadrature of the shape-function gradients (exact for these integrands).
Eigen::Matrix4d gauss_quad_stiffness(double hx, double hy)
{
    const double g = 1.0 / std::sqrt(3.0);
    const double pts[2] = {0.5 * (1 - g), 0.5 * (1 + g)};
    const int corner[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    for (double s : pts) {
        for (double t : pts) {
            Eigen::Matrix<double, 4, 2> grad;
            for (int a = 0; a < 4; ++a) {
                const double sx = corner[a][0] ? s : 1 - s;
                const double ty = corner[a][1] ? t : 1 - t;
                const double dsx = corner[a][0] ? 1.0 : -1.0;
                const double dty = corner[a][1] ? 1.0 : -1.0;
                grad(a, 0) = dsx * ty / hx;
                grad(a, 1) = sx * dty / hy;
            }
            k += 0.25 * hx * hy * grad * grad.transpose();
        }
    }
    return k;
}

// Fourier series for -Lap u = 1 on the unit square with zero boundary values.
double poisson_series(double x, double y, int terms)
{
    double sum = 0.0;
    for (int m = 1; m <= terms; m += 2) {
        for (int n = 1; n <= terms; n += 2) {
            sum += 16.0 / (std::pow(pi, 4) * m * n * (m * m + n * n)) * std::sin(m * pi * x) * std::sin(n * pi * y);
        }
    }
    return sum;
}

double manufactured_error(int nodes, ElementKind kind)
{
    const Grid2D grid = build_grid(nodes, nodes, kind);
    const FieldNodal K = FieldNodal::Ones(nodes, nodes);
    const auto sys = assemble_diffusion(K, grid, [](double x, double y) {
        return 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y);
    });
    const auto sol = solve_linear(sys);
    return l2_error(grid, sol.u, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
}

}  // namespace

TEST_CASE("build_grid free-node counts")
{
    CHECK(build_grid(3, 3, ElementKind::QuadBilinear).num_free() == 1);
    CHECK(build_grid(61, 61, ElementKind::QuadBilinear).num_free() == 3481);
    CHECK(build_grid(65, 65, ElementKind::TriLinear).num_free() == 3969);
    CHECK_THROWS_AS(build_grid(2, 5, ElementKind::QuadBilinear), std::invalid_argument);

    const Grid2D g = build_grid(6, 5, ElementKind::TriLinear);
    CHECK(g.num_elements() == 2 * 5 * 4);
    for (int n = 0; n < g.num_nodes(); ++n) {
        CHECK((g.free_index(n) < 0) == g.is_boundary(n));
        if (g.free_index(n) >= 0) {
            CHECK(g.free_node(g.free_index(n)) == n);
        }
    }
}

TEST_CASE("triangles share the cell diagonal consistently")
{
    const Grid2D g = build_grid(4, 4, ElementKind::TriLinear);
    for (int cell = 0; cell < g.num_cells(); ++cell) {
        const auto lower = g.element_nodes(2 * cell);
        const auto upper = g.element_nodes(2 * cell + 1);
        CHECK(lower[0] == upper[0]);
        CHECK(lower[2] == upper[1]);
        CHECK(g.node_ix(lower[2]) == g.node_ix(lower[0]) + 1);
        CHECK(g.node_iy(lower[2]) == g.node_iy(lower[0]) + 1);
    }
}

TEST_CASE("nodal_to_element averages vertices")
{
    const Grid2D g = build_grid(5, 5, ElementKind::QuadBilinear);
    CHECK(nodal_to_element(FieldNodal::Constant(5, 5, 3.5), g).isApproxToConstant(3.5));

    const Grid2D single(2, 2, ElementKind::QuadBilinear, 1.0, 1.0);
    FieldNodal corners(2, 2);
    corners << 1, 2, 3, 4;
    CHECK(nodal_to_element(corners, single)[0] == doctest::Approx(2.5));

    FieldNodal checker(5, 5);
    for (int iy = 0; iy < 5; ++iy) {
        for (int ix = 0; ix < 5; ++ix) {
            checker(iy, ix) = (ix + iy) % 2;
        }
    }
    CHECK(nodal_to_element(checker, g).isApproxToConstant(0.5));
    CHECK_THROWS_AS(nodal_to_element(FieldNodal::Ones(4, 5), g), std::invalid_argument);
}

TEST_CASE("element stiffness matches quadrature oracle")
{
    Eigen::Matrix4d expected;
    expected << 4, -1, -2, -1,
               -1, 4, -1, -2,
               -2, -1, 4, -1,
               -1, -2, -1, 4;
    expected /= 6.0;
    const Grid2D unit(2, 2, ElementKind::QuadBilinear, 1.0, 1.0);
    CHECK((element_stiffness(unit, 0) - gauss_quad_stiffness(1.0, 1.0)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((element_stiffness(unit, 0) - expected).cwiseAbs().maxCoeff() < 1e-14);

    const Grid2D stretched(3, 3, ElementKind::QuadBilinear, 0.3, 0.7);
    CHECK((element_stiffness(stretched, 2) - gauss_quad_stiffness(0.3, 0.7)).cwiseAbs().maxCoeff() < 1e-14);

    // P1 stiffness rows sum to zero and the matrix reproduces |T| |grad phi|^2 on the diagonal.
    const Grid2D tri(2, 2, ElementKind::TriLinear, 1.0, 1.0);
    const Eigen::Matrix4d k = element_stiffness(tri, 0);
    CHECK(k.topLeftCorner<3, 3>().rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(k(0, 0) == doctest::Approx(0.5));
    CHECK(k(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("assemble_darcy load and linearity")
{
    const Grid2D g = build_grid(9, 9, ElementKind::QuadBilinear);
    const double h = g.h();
    const auto sys = assemble_darcy(FieldNodal::Ones(9, 9), g);
    CHECK(sys.F.size() == g.num_free());
    CHECK(sys.F.isApproxToConstant(h * h));
    CHECK(sys.A.is_symmetric(1e-12));

    const FieldNodal K = random_positive_field(g, 3);
    const auto s1 = assemble_darcy(K, g);
    const auto s2 = assemble_darcy(2.0 * K, g);
    CHECK((s2.A.to_dense() - 2.0 * s1.A.to_dense()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(s2.F == s1.F);

    FieldNodal bad = K;
    bad(4, 4) = 0.0;
    CHECK_THROWS_AS(assemble_darcy(bad, g), std::invalid_argument);

    const Grid2D t = build_grid(9, 9, ElementKind::TriLinear);
    CHECK(assemble_darcy(FieldNodal::Ones(9, 9), t).F.isApproxToConstant(h * h));
}

TEST_CASE("assembled Darcy operator is symmetric positive definite")
{
    for (ElementKind kind : {ElementKind::QuadBilinear, ElementKind::TriLinear}) {
        const Grid2D g = build_grid(13, 11, kind);
        const auto sys = assemble_darcy(random_positive_field(g, 11, 1.0, 1000.0), g);
        CHECK(sys.A.is_symmetric(1e-12));
        CHECK_NOTHROW(solve_cholesky(sys.A, sys.F));
    }
}

TEST_CASE("solve_linear basics")
{
    FemSystem sys{CsrMatrix::identity(4), Eigen::VectorXd::Unit(4, 0), build_grid(4, 4, ElementKind::QuadBilinear)};
    CHECK((solve_linear(sys).u - Eigen::VectorXd::Unit(4, 0)).norm() < 1e-14);
    CHECK((pcg(sys.A, sys.F, 1e-12).u - Eigen::VectorXd::Unit(4, 0)).norm() < 1e-14);

    const Grid2D g = build_grid(17, 17, ElementKind::QuadBilinear);
    const auto base = solve_linear(assemble_darcy(FieldNodal::Ones(17, 17), g));
    const auto stiff = solve_linear(assemble_darcy(FieldNodal::Constant(17, 17, 1000.0), g));
    CHECK((stiff.u * 1000.0 - base.u).norm() <= 1e-10 * base.u.norm());
}

TEST_CASE("pcg agrees with the direct solver on a high-contrast field")
{
    const Grid2D g = build_grid(21, 21, ElementKind::QuadBilinear);
    const auto sys = assemble_darcy(random_positive_field(g, 5, 1.0, 1000.0), g);
    const auto it = solve_linear(sys, 1e-10, LinearSolverKind::Pcg);
    const auto direct = solve_linear(sys, 1e-10, LinearSolverKind::Cholesky);
    CHECK(it.report.converged);
    CHECK(it.report.iterations > 1);
    CHECK((sys.A.multiply(it.u) - sys.F).norm() <= 1e-10 * sys.F.norm());
    CHECK((it.u - direct.u).norm() <= 1e-6 * direct.u.norm());
    CHECK_THROWS_AS(pcg(sys.A, sys.F, 1e-14, 2), SolverError);
}

TEST_CASE("Poisson centre value matches the Fourier series oracle")
{
    const double exact = poisson_series(0.5, 0.5, 401);
    CHECK(exact == doctest::Approx(0.0736713).epsilon(1e-6));
    double prev_err = 1.0;
    for (int nodes : {33, 65, 129}) {
        const Grid2D g = build_grid(nodes, nodes, ElementKind::QuadBilinear);
        const auto sol = solve_linear(assemble_darcy(FieldNodal::Ones(nodes, nodes), g));
        const double centre = sol.u[g.free_index(g.node(nodes / 2, nodes / 2))];
        CHECK(centre == doctest::Approx(sol.u.maxCoeff()));
        const double err = std::abs(centre - exact);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err / exact < 1e-4);
}

TEST_CASE("l2_error integrates the finite element function")
{
    const auto exact = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
    for (ElementKind kind : {ElementKind::QuadBilinear, ElementKind::TriLinear}) {
        const Grid2D g = build_grid(9, 9, kind);
        CHECK(l2_error(g, Eigen::VectorXd::Zero(g.num_free()), exact) == doctest::Approx(0.5).epsilon(1e-6));
    }
    // Single hat function on a 3x3 grid: quad norm^2 = (2h/3)^2, tri norm^2 = 6 * (h^2/2) / 6.
    const auto zero = [](double, double) { return 0.0; };
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    CHECK(l2_error(build_grid(3, 3, ElementKind::QuadBilinear), one, zero) == doctest::Approx(1.0 / 3.0));
    CHECK(l2_error(build_grid(3, 3, ElementKind::TriLinear), one, zero) == doctest::Approx(std::sqrt(0.125)));
}

TEST_CASE("manufactured solution converges at second order")
{
    for (ElementKind kind : {ElementKind::QuadBilinear, ElementKind::TriLinear}) {
        const double ratio = manufactured_error(17, kind) / manufactured_error(33, kind);
        CAPTURE(to_string(kind));
        CHECK(ratio >= 3.2);
        CHECK(ratio <= 4.8);
    }
}

TEST_CASE("nonlinear source Newton solve")
{
    const Grid2D g = build_grid(17, 17, ElementKind::QuadBilinear);
    const double h = g.h();
    const Eigen::VectorXd load0 = nonlinear_source_load(g, Eigen::VectorXd::Zero(g.num_free()));
    CHECK(load0.isApproxToConstant(h * h));

    const auto sol = solve_nonlinear_source(FieldNodal::Ones(17, 17), g);
    CHECK(sol.iterations <= 20);
    const auto& sys = sol.system;
    CHECK((sys.A.multiply(sol.u) - sys.F).norm() / sys.F.norm() <= 1e-8);
    CHECK((nonlinear_source_load(g, sol.u) - sys.F).norm() == doctest::Approx(0.0));

    const auto rough = solve_nonlinear_source(random_positive_field(g, 8, 0.2, 5.0), g);
    CHECK((rough.system.A.multiply(rough.u) - rough.system.F).norm() / rough.system.F.norm() <= 1e-8);
}

TEST_CASE("nonlinear Newton failure is reported with its trace")
{
    const Grid2D g = build_grid(9, 9, ElementKind::QuadBilinear);
    NewtonConfig cfg;
    cfg.max_iterations = 1;
    cfg.tol = 1e-15;
    try {
        solve_nonlinear_source(FieldNodal::Ones(9, 9), g, cfg);
        FAIL("expected NewtonError");
    } catch (const NewtonError& err) {
        CHECK(!err.residuals().empty());
        CHECK(err.halvings().size() == 1);
    }
}

TEST_CASE("p-Laplacian solve")
{
    const Grid2D g = build_grid(17, 17, ElementKind::TriLinear);
    const FieldNodal K = random_positive_field(g, 21, 0.3, 3.0);

    SUBCASE("p = 2 reduces to Darcy")
    {
        const auto p2 = solve_plaplace(K, g, 2.0);
        const auto darcy = assemble_darcy(K, g);
        const auto lin = solve_linear(darcy);
        CHECK((p2.u - lin.u).norm() <= 1e-10 * lin.u.norm());
        CHECK((p2.system.A.to_dense() - darcy.A.to_dense()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("p = 3 is self-consistent and energy decreases")
    {
        const auto p3 = solve_plaplace(K, g, 3.0);
        const auto& sys = p3.system;
        CHECK((sys.A.multiply(p3.u) - sys.F).norm() / sys.F.norm() <= 1e-8);
        for (std::size_t i = 1; i < p3.energy_history.size(); ++i) {
            CHECK(p3.energy_history[i] <= p3.energy_history[i - 1]);
        }
        CHECK(sys.A.is_symmetric(1e-12));
    }
    SUBCASE("energy gradient equals A(u) u - F (finite differences)")
    {
        const double p = 3.0;
        const Eigen::VectorXd coeff = nodal_to_element(K, g);
        const Eigen::VectorXd F = assemble_load(g, [](double, double) { return 1.0; });
        std::mt19937_64 rng(4);
        std::normal_distribution<double> nd;
        Eigen::VectorXd u(g.num_free());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            u[i] = 0.05 * nd(rng);
        }
        // Secant stiffness at u reproduces the gradient.
        Eigen::VectorXd secant(coeff.size());
        for (int e = 0; e < coeff.size(); ++e) {
            const auto nodes = g.element_nodes(e);
            double v[3];
            for (int a = 0; a < 3; ++a) {
                const int f = g.free_index(nodes[static_cast<std::size_t>(a)]);
                v[a] = f >= 0 ? u[f] : 0.0;
            }
            // Gradient on the two triangle shapes of a uniform split.
            double gx = 0.0;
            double gy = 0.0;
            if (e % 2 == 0) {
                gx = (v[1] - v[0]) / g.hx();
                gy = (v[2] - v[1]) / g.hy();
            } else {
                gx = (v[1] - v[2]) / g.hx();
                gy = (v[2] - v[0]) / g.hy();
            }
            secant[e] = coeff[e] * std::pow(std::hypot(gx, gy), p - 2.0);
        }
        const Eigen::VectorXd grad = assemble_stiffness(g, secant).multiply(u) - F;
        const double step = 1e-6;
        for (int i : {0, 17, 100, 224}) {
            Eigen::VectorXd up = u;
            Eigen::VectorXd um = u;
            up[i] += step;
            um[i] -= step;
            const double fd = (plaplace_energy(g, coeff, p, up, F) - plaplace_energy(g, coeff, p, um, F)) / (2 * step);
            CHECK(fd == doctest::Approx(grad[i]).epsilon(1e-6));
        }
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(solve_plaplace(K, g, 1.5), std::invalid_argument);
        const Grid2D q = build_grid(17, 17, ElementKind::QuadBilinear);
        CHECK_THROWS_AS(solve_plaplace(K, q, 3.0), std::invalid_argument);
    }
}

TEST_CASE("relative_test_mean_error")
{
    std::vector<Eigen::VectorXd> refs{Eigen::VectorXd::LinSpaced(5, 1.0, 2.0), Eigen::VectorXd::Constant(5, -3.0)};
    CHECK(relative_test_mean_error(refs, refs) == 0.0);
    std::vector<Eigen::VectorXd> zeros{Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(5)};
    CHECK(relative_test_mean_error(zeros, refs) == doctest::Approx(1.0));
    std::vector<Eigen::VectorXd> one{refs[0]};
    std::vector<Eigen::VectorXd> scaled{1.1 * refs[0]};
    CHECK(relative_test_mean_error(scaled, one) == doctest::Approx(0.01));
    CHECK_THROWS_AS(relative_test_mean_error(one, refs), std::invalid_argument);
    CHECK_THROWS_AS(relative_test_mean_error(one, std::vector<Eigen::VectorXd>{Eigen::VectorXd::Zero(5)}),
                    std::invalid_argument);
}
