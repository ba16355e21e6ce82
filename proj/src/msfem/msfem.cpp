#include "cnnrom/msfem/msfem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cnnrom/fem/solve.hpp"
#include "cnnrom/fields/channels.hpp"

namespace cnnrom::msfem {

namespace {

std::array<int, 2> corner_offset(int corner)
{
    switch (corner) {
    case 0: return {0, 0};
    case 1: return {1, 0};
    case 2: return {1, 1};
    case 3: return {0, 1};
    }
    throw std::invalid_argument("corner index must lie in 0..3");
}

fem::FemSystem local_system(const fem::FieldNodal& K_region, int corner, double h, fem::FieldNodal* boundary)
{
    const auto ny = static_cast<int>(K_region.rows());
    const auto nx = static_cast<int>(K_region.cols());
    const fem::Grid2D grid(nx, ny, fem::ElementKind::QuadBilinear, h, h);
    *boundary = corner_hat(nx, ny, corner);
    Eigen::VectorXd lift;
    fem::CsrMatrix A = fem::assemble_stiffness(grid, fem::nodal_to_element(K_region, grid), boundary, &lift);
    return {std::move(A), std::move(lift), grid};
}

}  // namespace

CoarseMesh CoarseMesh::make(int fine_nodes, int elements)
{
    if (elements < 2 || fine_nodes < 3 || (fine_nodes - 1) % elements != 0) {
        throw std::invalid_argument("CoarseMesh: " + std::to_string(elements) + " coarse elements do not nest in " +
                                    std::to_string(fine_nodes) + " fine nodes");
    }
    return {fine_nodes, elements, (fine_nodes - 1) / elements, 1.0 / elements};
}

Region element_region(const CoarseMesh& mesh, int ex, int ey)
{
    const int m = mesh.ratio;
    return {ex * m, ey * m, (ex + 1) * m, (ey + 1) * m};
}

Region oversampled_region(const CoarseMesh& mesh, int ex, int ey, int ring)
{
    const int last = mesh.fine_nodes - 1;
    if (ring < 0) {
        return {0, 0, last, last};
    }
    const int m = mesh.ratio;
    return {std::max(0, (ex - ring) * m), std::max(0, (ey - ring) * m), std::min(last, (ex + 1 + ring) * m),
            std::min(last, (ey + 1 + ring) * m)};
}

fem::FieldNodal restrict_field(const fem::FieldNodal& field, const Region& r)
{
    return field.block(r.y0, r.x0, r.ny(), r.nx());
}

fem::FieldNodal corner_hat(int nx, int ny, int corner)
{
    const auto [cx, cy] = corner_offset(corner);
    fem::FieldNodal g(ny, nx);
    for (int iy = 0; iy < ny; ++iy) {
        const double t = static_cast<double>(iy) / (ny - 1);
        for (int ix = 0; ix < nx; ++ix) {
            const double s = static_cast<double>(ix) / (nx - 1);
            g(iy, ix) = (cx == 1 ? s : 1.0 - s) * (cy == 1 ? t : 1.0 - t);
        }
    }
    return g;
}

galerkin::Sample local_problem(const fem::FieldNodal& K_region, int corner, double h)
{
    fem::FieldNodal boundary;
    fem::FemSystem sys = local_system(K_region, corner, h, &boundary);
    Eigen::VectorXd u = sys.A.rows() > 0 ? fem::solve_cholesky(sys.A, sys.F) : Eigen::VectorXd();
    return {K_region, std::move(u), std::move(sys)};
}

fem::FieldNodal solve_local_basis(const fem::FieldNodal& K_region, int corner, double h)
{
    fem::FieldNodal boundary;
    const fem::FemSystem sys = local_system(K_region, corner, h, &boundary);
    if (sys.A.rows() == 0) {
        return boundary;
    }
    const Eigen::VectorXd u = fem::solve_cholesky(sys.A, sys.F);
    for (int k = 0; k < sys.grid.num_free(); ++k) {
        boundary.data()[sys.grid.free_node(k)] = u[k];
    }
    return boundary;
}

LocalBasisFn direct_local_basis()
{
    return [](const fem::FieldNodal& K, double h) {
        std::array<fem::FieldNodal, 4> out;
        for (int c = 0; c < 4; ++c) {
            out[static_cast<std::size_t>(c)] = solve_local_basis(K, c, h);
        }
        return out;
    };
}

LocalBasisFn net_local_basis(const nn::ParamStore& store, const galerkin::BasisNetCfg& cfg, LocalBasisFn fallback,
                             int* fallbacks)
{
    return [&store, cfg, fallback = std::move(fallback), fallbacks](const fem::FieldNodal& K, double h) {
        if (K.rows() != K.cols() || K.rows() - 2 != cfg.free_ny || K.cols() - 2 != cfg.free_nx) {
            if (fallbacks != nullptr) {
                ++*fallbacks;
            }
            return fallback(K, h);
        }
        std::array<fem::FieldNodal, 4> out;
        for (int c = 0; c < 4; ++c) {
            // Turning by (4 - c) quarter turns moves corner c onto corner 0.
            const fem::FieldNodal turned = fields::rotate90(K, (4 - c) % 4);
            fem::FieldNodal field;
            const fem::FemSystem sys = local_system(turned, 0, h, &field);
            nn::Tape tape;
            nn::Forward f{tape, const_cast<nn::ParamStore&>(store), false, false};
            const std::vector<fem::FieldNodal> in{turned};
            const nn::Var P = galerkin::basis_forward(f, cfg, tape.leaf(galerkin::stack_inputs(in, sys.grid)));
            const Eigen::VectorXd u =
                galerkin::galerkin_activation(galerkin::basis_matrix(P.value(), 0), sys.A, sys.F).u_hat;
            for (int k = 0; k < sys.grid.num_free(); ++k) {
                field.data()[sys.grid.free_node(k)] = u[k];
            }
            out[static_cast<std::size_t>(c)] = fields::rotate90(field, c);
        }
        return out;
    };
}

std::vector<galerkin::Sample> rotational_dataset(const std::vector<fem::FieldNodal>& patches, double h)
{
    std::vector<galerkin::Sample> out;
    for (const fem::FieldNodal& p : patches) {
        if (p.rows() != p.cols()) {
            throw std::invalid_argument("rotational_dataset: patches must be square");
        }
        for (int r = 0; r < 4; ++r) {
            out.push_back(local_problem(fields::rotate90(p, r), 0, h));
        }
    }
    return out;
}

Eigen::Matrix4d recombination_matrix(const std::array<fem::FieldNodal, 4>& phi, const Region& outer,
                                     const Region& target)
{
    Eigen::Matrix4d V;
    for (int j = 0; j < 4; ++j) {
        const auto [cx, cy] = corner_offset(j);
        const int ix = (cx == 1 ? target.x1 : target.x0) - outer.x0;
        const int iy = (cy == 1 ? target.y1 : target.y0) - outer.y0;
        for (int k = 0; k < 4; ++k) {
            V(k, j) = phi[static_cast<std::size_t>(k)](iy, ix);
        }
    }
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(V);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
        throw std::runtime_error("recombination_matrix: singular nodal matrix");
    }
    return lu.inverse();
}

MsBasisSet build_ms_basis(const fem::FieldNodal& K, const fem::Grid2D& fine, const CoarseMesh& mesh,
                          const MsBasisCfg& cfg, const LocalBasisFn& provider)
{
    if (fine.kind() != fem::ElementKind::QuadBilinear || fine.nx() != mesh.fine_nodes || fine.ny() != mesh.fine_nodes) {
        throw std::invalid_argument("build_ms_basis: fine grid must be the square quad grid of the coarse mesh");
    }
    if (!fine.same_shape(K)) {
        throw std::invalid_argument("build_ms_basis: K does not match the fine grid");
    }
    const double h = fine.h();
    const int E = mesh.elements;
    const int nc = mesh.coarse_nodes();
    MsBasisSet set{mesh, fine, {}, {}, {}, {}, {}, 0};
    set.element_bases.resize(static_cast<std::size_t>(E) * E);

    // Elements sharing each fine node, for trace averaging.
    std::vector<int> count(static_cast<std::size_t>(fine.num_nodes()), 0);
    for (int ey = 0; ey < E; ++ey) {
        for (int ex = 0; ex < E; ++ex) {
            const Region r = element_region(mesh, ex, ey);
            for (int iy = r.y0; iy <= r.y1; ++iy) {
                for (int ix = r.x0; ix <= r.x1; ++ix) {
                    ++count[static_cast<std::size_t>(fine.node(ix, iy))];
                }
            }
        }
    }

    auto coarse_free = [nc](int I, int J) {
        return (I <= 0 || J <= 0 || I >= nc - 1 || J >= nc - 1) ? -1 : (J - 1) * (nc - 2) + (I - 1);
    };
    std::vector<Eigen::Triplet<double>> trip;
    for (int ey = 0; ey < E; ++ey) {
        for (int ex = 0; ex < E; ++ex) {
            const Region outer = oversampled_region(mesh, ex, ey, cfg.ring);
            const Region target = element_region(mesh, ex, ey);
            const std::array<fem::FieldNodal, 4> phi = provider(restrict_field(K, outer), h);
            set.local_solves += 4;
            const Eigen::Matrix4d c = recombination_matrix(phi, outer, target);
            auto& eb = set.element_bases[static_cast<std::size_t>(ey * E + ex)];
            for (int i = 0; i < 4; ++i) {
                fem::FieldNodal v = fem::FieldNodal::Zero(target.ny(), target.nx());
                for (int k = 0; k < 4; ++k) {
                    v += c(i, k) * phi[static_cast<std::size_t>(k)].block(target.y0 - outer.y0, target.x0 - outer.x0,
                                                                          target.ny(), target.nx());
                }
                eb[static_cast<std::size_t>(i)] = v;
                const auto [cx, cy] = corner_offset(i);
                const int p = coarse_free(ex + cx, ey + cy);
                if (p < 0) {
                    continue;
                }
                for (int iy = target.y0; iy <= target.y1; ++iy) {
                    for (int ix = target.x0; ix <= target.x1; ++ix) {
                        const int node = fine.node(ix, iy);
                        const int f = fine.free_index(node);
                        const double val = v(iy - target.y0, ix - target.x0);
                        if (f >= 0 && val != 0.0) {
                            trip.emplace_back(f, p, val / count[static_cast<std::size_t>(node)]);
                        }
                    }
                }
            }
        }
    }
    set.Phi.resize(fine.num_free(), mesh.num_coarse_free());
    set.Phi.setFromTriplets(trip.begin(), trip.end());

    set.A_fine = fem::assemble_stiffness(fine, fem::nodal_to_element(K, fine));
    const Eigen::SparseMatrix<double> A = set.A_fine.to_eigen();
    const Eigen::SparseMatrix<double> Ac = set.Phi.transpose() * (A * set.Phi);
    set.A_coarse = Eigen::MatrixXd(Ac);
    set.A_coarse_ldlt.compute(set.A_coarse);
    if (set.A_coarse_ldlt.info() != Eigen::Success || !(set.A_coarse_ldlt.vectorD().minCoeff() > 0.0)) {
        throw std::runtime_error("build_ms_basis: singular coarse system");
    }
    return set;
}

MsSolution msfem_solve(const MsBasisSet& basis, const fem::SourceFn& f)
{
    const Eigen::VectorXd F = fem::assemble_load(basis.fine, f);
    MsSolution s;
    s.u_coarse = basis.A_coarse_ldlt.solve(basis.Phi.transpose() * F);
    s.u_fine = basis.Phi * s.u_coarse;
    return s;
}

double relative_error(const Eigen::VectorXd& u, const Eigen::VectorXd& ref)
{
    return (u - ref).norm() / ref.norm();
}

fem::SourceFn make_source(const std::string& kind, double a, double b)
{
    if (kind == "constant") {
        return [a](double, double) { return a; };
    }
    if (kind == "exp-sum") {
        return [a, b](double x, double y) { return a * std::exp(b * (x + y)); };
    }
    if (kind == "sin-sum") {
        return [a, b](double x, double y) { return a * std::sin(2.0 * std::numbers::pi * b * (x + y)); };
    }
    throw std::invalid_argument("unknown source '" + kind + "' (constant, exp-sum, sin-sum)");
}

}  // namespace cnnrom::msfem
