#include "cnnrom/fem/grid.hpp"

#include <stdexcept>
#include <string>

namespace cnnrom::fem {

const char* to_string(ElementKind kind)
{
    return kind == ElementKind::QuadBilinear ? "quad" : "tri";
}

ElementKind element_kind_from_string(const std::string& name)
{
    if (name == "quad" || name == "quad-bilinear") {
        return ElementKind::QuadBilinear;
    }
    if (name == "tri" || name == "tri-linear") {
        return ElementKind::TriLinear;
    }
    throw std::invalid_argument("unknown element kind: " + name);
}

Grid2D::Grid2D(int nx, int ny, ElementKind kind, double hx, double hy)
    : nx_(nx), ny_(ny), kind_(kind), hx_(hx), hy_(hy)
{
    if (nx < 2 || ny < 2) {
        throw std::invalid_argument("Grid2D: need at least 2 nodes per axis, got " + std::to_string(nx) + "x" +
                                    std::to_string(ny));
    }
    if (!(hx > 0.0) || !(hy > 0.0)) {
        throw std::invalid_argument("Grid2D: spacing must be positive");
    }
    free_index_.assign(static_cast<std::size_t>(nx * ny), -1);
    free_nodes_.reserve(static_cast<std::size_t>(num_free()));
    for (int iy = 1; iy < ny - 1; ++iy) {
        for (int ix = 1; ix < nx - 1; ++ix) {
            free_index_[static_cast<std::size_t>(node(ix, iy))] = static_cast<int>(free_nodes_.size());
            free_nodes_.push_back(node(ix, iy));
        }
    }
}

bool Grid2D::is_boundary(int n) const
{
    const int ix = node_ix(n);
    const int iy = node_iy(n);
    return ix == 0 || iy == 0 || ix == nx_ - 1 || iy == ny_ - 1;
}

std::array<int, 4> Grid2D::element_nodes(int e) const
{
    const int cell = element_cell(e);
    const int cx = cell % (nx_ - 1);
    const int cy = cell / (nx_ - 1);
    const int n00 = node(cx, cy);
    const int n10 = node(cx + 1, cy);
    const int n11 = node(cx + 1, cy + 1);
    const int n01 = node(cx, cy + 1);
    if (kind_ == ElementKind::QuadBilinear) {
        return {n00, n10, n11, n01};
    }
    if (e % 2 == 0) {
        return {n00, n10, n11, -1};
    }
    return {n00, n11, n01, -1};
}

double Grid2D::element_area() const
{
    const double cell = hx_ * hy_;
    return kind_ == ElementKind::QuadBilinear ? cell : 0.5 * cell;
}

std::array<double, 2> Grid2D::element_center(int e) const
{
    const auto nodes = element_nodes(e);
    const int count = nodes_per_element();
    double cx = 0.0;
    double cy = 0.0;
    for (int a = 0; a < count; ++a) {
        cx += x(node_ix(nodes[static_cast<std::size_t>(a)]));
        cy += y(node_iy(nodes[static_cast<std::size_t>(a)]));
    }
    return {cx / count, cy / count};
}

Grid2D build_grid(int nx, int ny, ElementKind kind)
{
    if (nx < 3 || ny < 3) {
        throw std::invalid_argument("build_grid: need at least 3 nodes per axis");
    }
    return Grid2D(nx, ny, kind, 1.0 / (nx - 1), 1.0 / (ny - 1));
}

Eigen::VectorXd nodal_to_element(const FieldNodal& field, const Grid2D& grid)
{
    if (!grid.same_shape(field)) {
        throw std::invalid_argument("nodal_to_element: field shape does not match grid");
    }
    const double* values = field.data();
    const int count = grid.nodes_per_element();
    Eigen::VectorXd out(grid.num_elements());
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        double sum = 0.0;
        for (int a = 0; a < count; ++a) {
            sum += values[nodes[static_cast<std::size_t>(a)]];
        }
        out[e] = sum / count;
    }
    return out;
}

Eigen::VectorXd restrict_to_free(const FieldNodal& field, const Grid2D& grid)
{
    if (!grid.same_shape(field)) {
        throw std::invalid_argument("restrict_to_free: field shape does not match grid");
    }
    Eigen::VectorXd out(grid.num_free());
    for (int k = 0; k < grid.num_free(); ++k) {
        out[k] = field.data()[grid.free_node(k)];
    }
    return out;
}

FieldNodal extend_from_free(const Eigen::VectorXd& free_values, const Grid2D& grid, double boundary_value)
{
    if (free_values.size() != grid.num_free()) {
        throw std::invalid_argument("extend_from_free: vector length does not match free-node count");
    }
    FieldNodal out = FieldNodal::Constant(grid.ny(), grid.nx(), boundary_value);
    for (int k = 0; k < grid.num_free(); ++k) {
        out.data()[grid.free_node(k)] = free_values[k];
    }
    return out;
}

}  // namespace cnnrom::fem
