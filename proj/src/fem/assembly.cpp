#include "cnnrom/fem/assembly.hpp"

#include <stdexcept>

namespace cnnrom::fem {

namespace {

Eigen::Matrix4d quad_stiffness(double hx, double hy)
{
    // Exact integrals of grad(phi_i).grad(phi_j) for bilinear shape functions
    // on an hx-by-hy cell, nodes (0,0),(1,0),(1,1),(0,1).
    Eigen::Matrix4d kx;
    kx << 2, -2, -1, 1,
         -2, 2, 1, -1,
         -1, 1, 2, -2,
          1, -1, -2, 2;
    Eigen::Matrix4d ky;
    ky << 2, 1, -1, -2,
          1, 2, -2, -1,
         -1, -2, 2, 1,
         -2, -1, 1, 2;
    return (hy / hx) / 6.0 * kx + (hx / hy) / 6.0 * ky;
}

Eigen::Matrix4d tri_stiffness(const Grid2D& grid, const std::array<int, 4>& nodes)
{
    Eigen::Matrix<double, 3, 2> p;
    for (int a = 0; a < 3; ++a) {
        const int n = nodes[static_cast<std::size_t>(a)];
        p(a, 0) = grid.x(grid.node_ix(n));
        p(a, 1) = grid.y(grid.node_iy(n));
    }
    Eigen::Matrix2d jac;
    jac << p(1, 0) - p(0, 0), p(2, 0) - p(0, 0),
           p(1, 1) - p(0, 1), p(2, 1) - p(0, 1);
    const double det = jac.determinant();
    // Reference gradients of the barycentric functions.
    Eigen::Matrix<double, 2, 3> ref;
    ref << -1, 1, 0,
           -1, 0, 1;
    const Eigen::Matrix<double, 2, 3> grads = jac.inverse().transpose() * ref;
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    k.topLeftCorner<3, 3>() = 0.5 * std::abs(det) * grads.transpose() * grads;
    return k;
}

}  // namespace

Eigen::Matrix4d element_stiffness(const Grid2D& grid, int element)
{
    if (grid.kind() == ElementKind::QuadBilinear) {
        return quad_stiffness(grid.hx(), grid.hy());
    }
    return tri_stiffness(grid, grid.element_nodes(element));
}

double shape_integral(const Grid2D& grid)
{
    return grid.element_area() / grid.nodes_per_element();
}

CsrMatrix assemble_stiffness(const Grid2D& grid, const Eigen::VectorXd& element_coeff,
                             const FieldNodal* boundary_values, Eigen::VectorXd* lift)
{
    if (element_coeff.size() != grid.num_elements()) {
        throw std::invalid_argument("assemble_stiffness: coefficient count does not match element count");
    }
    if (boundary_values != nullptr && !grid.same_shape(*boundary_values)) {
        throw std::invalid_argument("assemble_stiffness: boundary field shape mismatch");
    }
    if (lift != nullptr) {
        *lift = Eigen::VectorXd::Zero(grid.num_free());
    }
    const int count = grid.nodes_per_element();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(grid.num_elements() * count * count));
    const bool quad = grid.kind() == ElementKind::QuadBilinear;
    const Eigen::Matrix4d quad_k = quad ? quad_stiffness(grid.hx(), grid.hy()) : Eigen::Matrix4d::Zero();
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        const Eigen::Matrix4d ke = element_coeff[e] * (quad ? quad_k : tri_stiffness(grid, nodes));
        for (int a = 0; a < count; ++a) {
            const int fa = grid.free_index(nodes[static_cast<std::size_t>(a)]);
            if (fa < 0) {
                continue;
            }
            for (int b = 0; b < count; ++b) {
                const int nb = nodes[static_cast<std::size_t>(b)];
                const int fb = grid.free_index(nb);
                if (fb >= 0) {
                    triplets.push_back({fa, fb, ke(a, b)});
                } else if (boundary_values != nullptr && lift != nullptr) {
                    (*lift)[fa] -= ke(a, b) * boundary_values->data()[nb];
                }
            }
        }
    }
    return CsrMatrix::from_triplets(grid.num_free(), grid.num_free(), std::move(triplets));
}

Eigen::VectorXd assemble_load(const Grid2D& grid, const Eigen::VectorXd& element_source)
{
    if (element_source.size() != grid.num_elements()) {
        throw std::invalid_argument("assemble_load: source count does not match element count");
    }
    const double w = shape_integral(grid);
    const int count = grid.nodes_per_element();
    Eigen::VectorXd F = Eigen::VectorXd::Zero(grid.num_free());
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        for (int a = 0; a < count; ++a) {
            const int fa = grid.free_index(nodes[static_cast<std::size_t>(a)]);
            if (fa >= 0) {
                F[fa] += w * element_source[e];
            }
        }
    }
    return F;
}

Eigen::VectorXd assemble_load(const Grid2D& grid, const SourceFn& f)
{
    Eigen::VectorXd source(grid.num_elements());
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto c = grid.element_center(e);
        source[e] = f(c[0], c[1]);
    }
    return assemble_load(grid, source);
}

FemSystem assemble_diffusion(const FieldNodal& K, const Grid2D& grid, const SourceFn& f)
{
    if (!grid.same_shape(K)) {
        throw std::invalid_argument("assemble_darcy: field shape does not match grid");
    }
    if (!(K.minCoeff() > 0.0) || !K.allFinite()) {
        throw std::invalid_argument("assemble_darcy: coefficient must be finite and strictly positive");
    }
    return FemSystem{assemble_stiffness(grid, nodal_to_element(K, grid)), assemble_load(grid, f), grid};
}

FemSystem assemble_darcy(const FieldNodal& K, const Grid2D& grid)
{
    return assemble_diffusion(K, grid, [](double, double) { return 1.0; });
}

}  // namespace cnnrom::fem
