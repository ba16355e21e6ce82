#include "doctest.h"

#include <random>

#include "cnnrom/fem/solve.hpp"
#include "cnnrom/fields/channels.hpp"
#include "cnnrom/fields/kle.hpp"
#include "cnnrom/msfem/msfem.hpp"

using namespace cnnrom;
using namespace cnnrom::msfem;

namespace {

fem::FieldNodal random_K(int n, std::uint64_t seed)
{
    const fem::Grid2D g(n, n, fem::ElementKind::QuadBilinear, 1.0 / (n - 1), 1.0 / (n - 1));
    const fields::KleModel kle = fields::build_kle(g, 0.2, 0.0, std::min(20, n * n));
    return fields::sample_grf(kle, seed).array() * 2.0;
}

fem::FieldNodal coarse_hat_on_fine(const fem::Grid2D& fine, const CoarseMesh& mesh, int I, int J)
{
    fem::FieldNodal v(fine.ny(), fine.nx());
    for (int iy = 0; iy < fine.ny(); ++iy) {
        for (int ix = 0; ix < fine.nx(); ++ix) {
            const double sx = std::max(0.0, 1.0 - std::abs(fine.x(ix) / mesh.H - I));
            const double sy = std::max(0.0, 1.0 - std::abs(fine.y(iy) / mesh.H - J));
            v(iy, ix) = sx * sy;
        }
    }
    return v;
}

}  // namespace

TEST_CASE("coarse mesh nesting")
{
    const CoarseMesh m = CoarseMesh::make(33, 4);
    CHECK(m.ratio == 8);
    CHECK(m.num_coarse_free() == 9);
    CHECK_THROWS_AS(CoarseMesh::make(33, 5), std::invalid_argument);
    const Region r = oversampled_region(m, 0, 3, 1);
    CHECK(r.x0 == 0);
    CHECK(r.x1 == 16);
    CHECK(r.y0 == 16);
    CHECK(r.y1 == 32);
    const Region all = oversampled_region(m, 1, 1, -1);
    CHECK(all.nx() == 33);
}

TEST_CASE("local basis: bilinear for constant coefficient, exact boundary, partition of unity")
{
    const int n = 13;
    const double h = 0.05;
    const fem::FieldNodal K1 = fem::FieldNodal::Constant(n, n, 3.0);
    for (int c = 0; c < 4; ++c) {
        CHECK((solve_local_basis(K1, c, h) - corner_hat(n, n, c)).cwiseAbs().maxCoeff() <= 1e-8);
    }
    const fem::FieldNodal K = random_K(n, 5);
    fem::FieldNodal sum = fem::FieldNodal::Zero(n, n);
    for (int c = 0; c < 4; ++c) {
        const fem::FieldNodal phi = solve_local_basis(K, c, h);
        const fem::FieldNodal hat = corner_hat(n, n, c);
        for (int i = 0; i < n; ++i) {
            CHECK(phi(0, i) == hat(0, i));
            CHECK(phi(n - 1, i) == hat(n - 1, i));
            CHECK(phi(i, 0) == hat(i, 0));
            CHECK(phi(i, n - 1) == hat(i, n - 1));
        }
        sum += phi;
    }
    CHECK((sum.array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("recombination: identity without oversampling, delta property with it")
{
    const CoarseMesh mesh = CoarseMesh::make(25, 4);
    const fem::FieldNodal K = random_K(25, 8);
    const double h = 1.0 / 24;
    const Region target = element_region(mesh, 1, 2);
    const auto phi0 = direct_local_basis()(restrict_field(K, target), h);
    CHECK((recombination_matrix(phi0, target, target) - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <= 1e-14);

    const Region outer = oversampled_region(mesh, 1, 2, 1);
    const auto phi = direct_local_basis()(restrict_field(K, outer), h);
    const Eigen::Matrix4d c = recombination_matrix(phi, outer, target);
    CHECK((c.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
    const MsBasisSet set = build_ms_basis(K, fem::build_grid(25, 25, fem::ElementKind::QuadBilinear), mesh);
    const auto& eb = set.element_bases[2 * 4 + 1];
    const int m = mesh.ratio;
    for (int i = 0; i < 4; ++i) {
        const fem::FieldNodal& v = eb[static_cast<std::size_t>(i)];
        const double at[4] = {v(0, 0), v(0, m), v(m, m), v(m, 0)};
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(at[j] - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
    }
}

TEST_CASE("constant coefficient reduces to coarse bilinear FEM")
{
    const CoarseMesh mesh = CoarseMesh::make(33, 4);
    const fem::Grid2D fine = fem::build_grid(33, 33, fem::ElementKind::QuadBilinear);
    const fem::FieldNodal K = fem::FieldNodal::Constant(33, 33, 2.0);
    for (const int ring : {0, 1, -1}) {
        const MsBasisSet set = build_ms_basis(K, fine, mesh, {ring});
        const Eigen::MatrixXd Phi(set.Phi);
        for (int J = 1; J < 4; ++J) {
            for (int I = 1; I < 4; ++I) {
                const Eigen::VectorXd hat = fem::restrict_to_free(coarse_hat_on_fine(fine, mesh, I, J), fine);
                CHECK((Phi.col((J - 1) * 3 + (I - 1)) - hat).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
        const fem::Grid2D coarse = fem::build_grid(5, 5, fem::ElementKind::QuadBilinear);
        const Eigen::MatrixXd Ac = fem::assemble_stiffness(coarse, Eigen::VectorXd::Constant(16, 2.0)).to_dense();
        CHECK((set.A_coarse - Ac).cwiseAbs().maxCoeff() <= 1e-8 * Ac.cwiseAbs().maxCoeff());

        const fem::SourceFn f = make_source("exp-sum");
        const MsSolution s = msfem_solve(set, f);
        const Eigen::VectorXd Fc = Phi.transpose() * fem::assemble_load(fine, f);
        const Eigen::VectorXd uc = Ac.ldlt().solve(Fc);
        CHECK((s.u_coarse - uc).norm() <= 1e-8 * uc.norm());
    }
}

TEST_CASE("one basis set serves several sources")
{
    const CoarseMesh mesh = CoarseMesh::make(33, 4);
    const fem::Grid2D fine = fem::build_grid(33, 33, fem::ElementKind::QuadBilinear);
    const fem::FieldNodal K = random_K(33, 3);
    const MsBasisSet set = build_ms_basis(K, fine, mesh);
    CHECK(set.local_solves == 4 * 16);
    const MsSolution a = msfem_solve(set, make_source("exp-sum"));
    const MsSolution b = msfem_solve(set, make_source("sin-sum"));
    CHECK(set.local_solves == 4 * 16);
    CHECK(a.u_fine.allFinite());
    CHECK(b.u_fine.allFinite());
    CHECK((a.u_fine - b.u_fine).norm() > 0.0);
    CHECK_THROWS_AS(make_source("cosine"), std::invalid_argument);
}

TEST_CASE("coarse refinement reduces the error on a channel field")
{
    const int n = 65;
    const fem::Grid2D fine = fem::build_grid(n, n, fem::ElementKind::QuadBilinear);
    const fem::FieldNodal K = fields::synth_channel_image(n, 3, 4.0, 11);
    const fem::SourceFn f = make_source("exp-sum");
    const Eigen::VectorXd ref = fem::solve_linear(fem::assemble_diffusion(K, fine, f)).u;
    double prev = 1e300;
    for (const int E : {4, 8, 16}) {
        const MsBasisSet set = build_ms_basis(K, fine, CoarseMesh::make(n, E), {1});
        const double err = relative_error(msfem_solve(set, f).u_fine, ref);
        INFO("elements " << E << " error " << err);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("rotational dataset and equivariance")
{
    const int n = 11;
    const double h = 0.1;
    const fem::FieldNodal K = random_K(n, 21);
    const std::vector<galerkin::Sample> data = rotational_dataset({K}, h);
    REQUIRE(data.size() == 4);
    for (int r = 0; r < 4; ++r) {
        const fem::FieldNodal turned = fields::rotate90(K, r);
        CHECK(data[static_cast<std::size_t>(r)].K == turned);
        const fem::FieldNodal direct = fields::rotate90(solve_local_basis(K, (4 - r) % 4, h), r);
        const fem::FieldNodal label = fem::extend_from_free(data[static_cast<std::size_t>(r)].u,
                                                            data[static_cast<std::size_t>(r)].system.grid);
        const fem::FieldNodal inner_direct = direct.block(1, 1, n - 2, n - 2);
        CHECK((label.block(1, 1, n - 2, n - 2) - inner_direct).cwiseAbs().maxCoeff() <= 1e-10);
    }
    const std::vector<galerkin::Sample> flat = rotational_dataset({fem::FieldNodal::Constant(n, n, 2.0)}, h);
    for (int r = 1; r < 4; ++r) {
        CHECK((flat[static_cast<std::size_t>(r)].u - flat[0].u).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(rotational_dataset({fem::FieldNodal::Ones(5, 6)}, h), std::invalid_argument);
}

TEST_CASE("net-provided local bases keep exact boundary data and fall back on size mismatch")
{
    galerkin::BasisNetCfg cfg;
    cfg.free_nx = cfg.free_ny = 7;
    cfg.channels = {4};
    cfg.kernel = 3;
    cfg.N = 3;
    nn::ParamStore store;
    galerkin::init_basis_net(store, cfg, 4);
    int fallbacks = 0;
    const LocalBasisFn net = net_local_basis(store, cfg, direct_local_basis(), &fallbacks);
    const fem::FieldNodal K = random_K(9, 2);
    const auto phi = net(K, 0.125);
    CHECK(fallbacks == 0);
    for (int c = 0; c < 4; ++c) {
        const fem::FieldNodal hat = corner_hat(9, 9, c);
        const fem::FieldNodal& p = phi[static_cast<std::size_t>(c)];
        CHECK(p.row(0) == hat.row(0));
        CHECK(p.col(8) == hat.col(8));
        CHECK(p.allFinite());
    }
    net(random_K(11, 2), 0.1);
    CHECK(fallbacks == 1);
}
