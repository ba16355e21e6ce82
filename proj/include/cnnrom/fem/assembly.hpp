#pragma once

#include <functional>
#include <optional>

#include "cnnrom/fem/grid.hpp"
#include "cnnrom/fem/sparse.hpp"

namespace cnnrom::fem {

/// Dirichlet-eliminated linear system A u = F on the free nodes of `grid`.
struct FemSystem {
    CsrMatrix A;
    Eigen::VectorXd F;
    Grid2D grid;
};

using SourceFn = std::function<double(double x, double y)>;

/// Reference element stiffness for unit coefficient, in the node order of
/// Grid2D::element_nodes. Rows/cols beyond nodes_per_element() are zero.
Eigen::Matrix4d element_stiffness(const Grid2D& grid, int element);

/// Integral of each local shape function over one element.
double shape_integral(const Grid2D& grid);

/// Stiffness on free nodes for per-element coefficients, Dirichlet rows and
/// columns eliminated. When `boundary_values` (full nodal field) is given,
/// the lifting term -A_fb g is returned in `lift`.
CsrMatrix assemble_stiffness(const Grid2D& grid, const Eigen::VectorXd& element_coeff,
                             const FieldNodal* boundary_values = nullptr, Eigen::VectorXd* lift = nullptr);

/// Load vector on free nodes, f evaluated at element centroids.
Eigen::VectorXd assemble_load(const Grid2D& grid, const SourceFn& f);

/// Load vector on free nodes from per-element source values.
Eigen::VectorXd assemble_load(const Grid2D& grid, const Eigen::VectorXd& element_source);

/// Darcy system -div(K grad u) = 1, u = 0 on the boundary. K must be strictly positive.
FemSystem assemble_darcy(const FieldNodal& K, const Grid2D& grid);

/// Same operator with an arbitrary source term.
FemSystem assemble_diffusion(const FieldNodal& K, const Grid2D& grid, const SourceFn& f);

}  // namespace cnnrom::fem
