#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cnnrom::fem {

enum class ElementKind { QuadBilinear, TriLinear };

const char* to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& name);

/// Nodal scalar field on the full node lattice. Row index is y, column is x,
/// so the row-major flattening matches Grid2D::node().
using FieldNodal = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Structured 2D mesh of a rectangle anchored at the origin (at least 2x2 nodes).
///
/// Interior nodes are numbered row-major (y outer, x inner) from 0 to
/// num_free()-1; boundary nodes carry no free index. Triangular grids split
/// every cell along the (ix,iy)-(ix+1,iy+1) diagonal.
class Grid2D {
public:
    Grid2D(int nx, int ny, ElementKind kind, double hx, double hy);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    /// Spacing along x; equals hy for every grid built by build_grid.
    double h() const { return hx_; }
    ElementKind kind() const { return kind_; }

    int num_nodes() const { return nx_ * ny_; }
    int num_free() const { return (nx_ - 2) * (ny_ - 2); }
    int free_nx() const { return nx_ - 2; }
    int free_ny() const { return ny_ - 2; }
    int num_cells() const { return (nx_ - 1) * (ny_ - 1); }
    int num_elements() const { return kind_ == ElementKind::QuadBilinear ? num_cells() : 2 * num_cells(); }
    int nodes_per_element() const { return kind_ == ElementKind::QuadBilinear ? 4 : 3; }

    int node(int ix, int iy) const { return iy * nx_ + ix; }
    int node_ix(int node) const { return node % nx_; }
    int node_iy(int node) const { return node / nx_; }
    double x(int ix) const { return ix * hx_; }
    double y(int iy) const { return iy * hy_; }
    bool is_boundary(int node) const;

    /// Free index of a node, or -1 on the boundary.
    int free_index(int node) const { return free_index_[static_cast<std::size_t>(node)]; }
    int free_node(int k) const { return free_nodes_[static_cast<std::size_t>(k)]; }

    /// Node indices of element e, counterclockwise. Quads: (0,0),(1,0),(1,1),(0,1).
    std::array<int, 4> element_nodes(int e) const;
    /// Cell containing element e.
    int element_cell(int e) const { return kind_ == ElementKind::QuadBilinear ? e : e / 2; }
    double element_area() const;
    /// Centroid of element e.
    std::array<double, 2> element_center(int e) const;

    bool same_shape(const FieldNodal& field) const { return field.rows() == ny_ && field.cols() == nx_; }

private:
    int nx_;
    int ny_;
    ElementKind kind_;
    double hx_;
    double hy_;
    std::vector<int> free_index_;
    std::vector<int> free_nodes_;
};

/// Unit-square grid with nx*ny nodes. Throws std::invalid_argument if nx or ny < 3.
Grid2D build_grid(int nx, int ny, ElementKind kind);

/// Per-element coefficients from nodal values (arithmetic mean of the element's vertices).
Eigen::VectorXd nodal_to_element(const FieldNodal& field, const Grid2D& grid);

/// Values of a nodal field at the free nodes, in free-index order.
Eigen::VectorXd restrict_to_free(const FieldNodal& field, const Grid2D& grid);

/// Inverse of restrict_to_free; boundary nodes receive `boundary_value`.
FieldNodal extend_from_free(const Eigen::VectorXd& free_values, const Grid2D& grid, double boundary_value = 0.0);

}  // namespace cnnrom::fem
