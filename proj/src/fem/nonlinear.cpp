#include "cnnrom/fem/nonlinear.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>

namespace cnnrom::fem {

namespace {

constexpr double kTenPi = 10.0 * std::numbers::pi;

double safe_norm(const Eigen::VectorXd& v)
{
    return std::max(v.norm(), 1e-300);
}

/// Element means of a free-node vector (boundary nodes are zero).
Eigen::VectorXd element_means(const Grid2D& grid, const Eigen::VectorXd& u)
{
    const int count = grid.nodes_per_element();
    Eigen::VectorXd out(grid.num_elements());
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        double sum = 0.0;
        for (int a = 0; a < count; ++a) {
            const int f = grid.free_index(nodes[static_cast<std::size_t>(a)]);
            if (f >= 0) {
                sum += u[f];
            }
        }
        out[e] = sum / count;
    }
    return out;
}

/// d(load)/du for the element-mean source quadrature.
CsrMatrix source_jacobian(const Grid2D& grid, const Eigen::VectorXd& u)
{
    const Eigen::VectorXd means = element_means(grid, u);
    const int count = grid.nodes_per_element();
    const double w = shape_integral(grid) / count;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(grid.num_elements() * count * count));
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        const double d = w * nonlinear_source_derivative(means[e]);
        for (int a = 0; a < count; ++a) {
            const int fa = grid.free_index(nodes[static_cast<std::size_t>(a)]);
            if (fa < 0) {
                continue;
            }
            for (int b = 0; b < count; ++b) {
                const int fb = grid.free_index(nodes[static_cast<std::size_t>(b)]);
                if (fb >= 0) {
                    t.push_back({fa, fb, d});
                }
            }
        }
    }
    return CsrMatrix::from_triplets(grid.num_free(), grid.num_free(), std::move(t));
}

CsrMatrix subtract(const CsrMatrix& a, const CsrMatrix& b)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
    for (std::int64_t r = 0; r < a.rows(); ++r) {
        for (std::int64_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
            t.push_back({r, a.col_indices()[k], a.values()[k]});
        }
        for (std::int64_t k = b.row_offsets()[r]; k < b.row_offsets()[r + 1]; ++k) {
            t.push_back({r, b.col_indices()[k], -b.values()[k]});
        }
    }
    return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

void check_coefficient(const FieldNodal& K, const Grid2D& grid)
{
    if (!grid.same_shape(K)) {
        throw std::invalid_argument("nonlinear solve: field shape does not match grid");
    }
    if (!(K.minCoeff() > 0.0) || !K.allFinite()) {
        throw std::invalid_argument("nonlinear solve: coefficient must be finite and strictly positive");
    }
}

// Per-element gradient operators for a triangular grid: rows are d/dx, d/dy,
// columns follow element_nodes order.
struct TriGeometry {
    std::vector<Eigen::Matrix<double, 2, 3>> grads;
    std::vector<std::array<int, 3>> free_ids;
    double area = 0.0;
};

TriGeometry tri_geometry(const Grid2D& grid)
{
    TriGeometry g;
    g.area = grid.element_area();
    g.grads.reserve(static_cast<std::size_t>(grid.num_elements()));
    g.free_ids.reserve(static_cast<std::size_t>(grid.num_elements()));
    Eigen::Matrix<double, 2, 3> ref;
    ref << -1, 1, 0,
           -1, 0, 1;
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto nodes = grid.element_nodes(e);
        Eigen::Matrix<double, 3, 2> p;
        std::array<int, 3> ids{};
        for (int a = 0; a < 3; ++a) {
            const int n = nodes[static_cast<std::size_t>(a)];
            p(a, 0) = grid.x(grid.node_ix(n));
            p(a, 1) = grid.y(grid.node_iy(n));
            ids[static_cast<std::size_t>(a)] = grid.free_index(n);
        }
        Eigen::Matrix2d jac;
        jac << p(1, 0) - p(0, 0), p(2, 0) - p(0, 0),
               p(1, 1) - p(0, 1), p(2, 1) - p(0, 1);
        g.grads.push_back(jac.inverse().transpose() * ref);
        g.free_ids.push_back(ids);
    }
    return g;
}

Eigen::Vector2d element_gradient(const TriGeometry& geo, int e, const Eigen::VectorXd& u)
{
    Eigen::Vector3d local;
    for (int a = 0; a < 3; ++a) {
        const int f = geo.free_ids[static_cast<std::size_t>(e)][static_cast<std::size_t>(a)];
        local[a] = f >= 0 ? u[f] : 0.0;
    }
    return geo.grads[static_cast<std::size_t>(e)] * local;
}

double energy(const TriGeometry& geo, const Eigen::VectorXd& coeff, double p, const Eigen::VectorXd& u,
              const Eigen::VectorXd& F)
{
    double sum = 0.0;
    for (int e = 0; e < coeff.size(); ++e) {
        sum += geo.area * coeff[e] * std::pow(element_gradient(geo, e, u).norm(), p) / p;
    }
    return sum - F.dot(u);
}

/// Stiffness with coefficient K_e |grad u|^(p-2); A(u) u - F is the energy gradient.
Eigen::VectorXd secant_coefficients(const TriGeometry& geo, const Eigen::VectorXd& coeff, double p,
                                    const Eigen::VectorXd& u)
{
    Eigen::VectorXd out(coeff.size());
    for (int e = 0; e < coeff.size(); ++e) {
        out[e] = coeff[e] * std::pow(element_gradient(geo, e, u).norm(), p - 2.0);
    }
    return out;
}

CsrMatrix energy_hessian(const Grid2D& grid, const TriGeometry& geo, const Eigen::VectorXd& coeff, double p,
                         const Eigen::VectorXd& u)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(grid.num_elements() * 9));
    for (int e = 0; e < grid.num_elements(); ++e) {
        const auto& G = geo.grads[static_cast<std::size_t>(e)];
        const Eigen::Vector2d g = element_gradient(geo, e, u);
        const double s = g.norm();
        const double scale = geo.area * coeff[e] * std::pow(s, p - 2.0);
        Eigen::Matrix2d inner = Eigen::Matrix2d::Identity();
        if (s > 0.0) {
            const Eigen::Vector2d unit = g / s;
            inner += (p - 2.0) * unit * unit.transpose();
        }
        const Eigen::Matrix3d he = scale * G.transpose() * inner * G;
        const auto& ids = geo.free_ids[static_cast<std::size_t>(e)];
        for (int a = 0; a < 3; ++a) {
            if (ids[static_cast<std::size_t>(a)] < 0) {
                continue;
            }
            for (int b = 0; b < 3; ++b) {
                if (ids[static_cast<std::size_t>(b)] >= 0) {
                    t.push_back({ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(b)], he(a, b)});
                }
            }
        }
    }
    return CsrMatrix::from_triplets(grid.num_free(), grid.num_free(), std::move(t));
}

/// Solves H d = rhs, shifting the diagonal until the Cholesky factorization succeeds.
Eigen::VectorXd shifted_cholesky_solve(const CsrMatrix& H, const Eigen::VectorXd& rhs)
{
    Eigen::SparseMatrix<double> m = H.to_eigen();
    const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double shift = 0.0;
    for (int attempt = 0; attempt < 20; ++attempt) {
        Eigen::SparseMatrix<double> shifted = m;
        if (shift > 0.0) {
            for (int i = 0; i < shifted.rows(); ++i) {
                shifted.coeffRef(i, i) += shift;
            }
        }
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(shifted);
        if (llt.info() == Eigen::Success) {
            return llt.solve(rhs);
        }
        shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
    }
    throw SolverError("solve_plaplace: Hessian factorization failed", {});
}

}  // namespace

double nonlinear_source(double u)
{
    return std::sin(kTenPi * u) + std::cos(kTenPi * u);
}

double nonlinear_source_derivative(double u)
{
    return kTenPi * (std::cos(kTenPi * u) - std::sin(kTenPi * u));
}

Eigen::VectorXd nonlinear_source_load(const Grid2D& grid, const Eigen::VectorXd& u_free)
{
    Eigen::VectorXd means = element_means(grid, u_free);
    for (Eigen::Index e = 0; e < means.size(); ++e) {
        means[e] = nonlinear_source(means[e]);
    }
    return assemble_load(grid, means);
}

NonlinearSolution solve_nonlinear_source(const FieldNodal& K, const Grid2D& grid, const NewtonConfig& cfg)
{
    check_coefficient(K, grid);
    const CsrMatrix A = assemble_stiffness(grid, nodal_to_element(K, grid));
    // Start from one Picard step off u = 0; Newton from zero stalls on the indefinite Jacobian.
    const Eigen::VectorXd u0 = solve_cholesky(A, nonlinear_source_load(grid, Eigen::VectorXd::Zero(grid.num_free())));
    NonlinearSolution out{u0, FemSystem{A, {}, grid}, 0, {}, {}, {}};
    Eigen::VectorXd& u = out.u;
    Eigen::VectorXd F = nonlinear_source_load(grid, u);
    Eigen::VectorXd R = A.multiply(u) - F;
    for (int it = 0;; ++it) {
        const double rel = R.norm() / safe_norm(F);
        out.residual_history.push_back(rel);
        if (rel <= cfg.tol) {
            out.iterations = it;
            out.system.F = F;
            return out;
        }
        if (it == cfg.max_iterations) {
            throw NewtonError("solve_nonlinear_source: no convergence in " + std::to_string(it) + " iterations",
                              {it, rel, false}, out.residual_history, out.halvings);
        }
        const Eigen::VectorXd step = solve_lu(subtract(A, source_jacobian(grid, u)), -R);
        double t = 1.0;
        int halvings = 0;
        const double r0 = R.norm();
        for (;; ++halvings) {
            const Eigen::VectorXd trial = u + t * step;
            const Eigen::VectorXd F_trial = nonlinear_source_load(grid, trial);
            const Eigen::VectorXd R_trial = A.multiply(trial) - F_trial;
            if (R_trial.norm() < (1.0 - 1e-4 * t) * r0 || R_trial.norm() / safe_norm(F_trial) <= cfg.tol) {
                u = trial;
                F = F_trial;
                R = R_trial;
                break;
            }
            if (halvings == cfg.max_halvings) {
                out.halvings.push_back(halvings);
                throw NewtonError("solve_nonlinear_source: damping exhausted", {it, rel, false},
                                  out.residual_history, out.halvings);
            }
            t *= 0.5;
        }
        out.halvings.push_back(halvings);
    }
}

double plaplace_energy(const Grid2D& grid, const Eigen::VectorXd& element_coeff, double p, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& F)
{
    if (grid.kind() != ElementKind::TriLinear) {
        throw std::invalid_argument("plaplace_energy: triangular grid required");
    }
    return energy(tri_geometry(grid), element_coeff, p, u, F);
}

NonlinearSolution solve_plaplace(const FieldNodal& K, const Grid2D& grid, double p, const PLaplaceConfig& cfg)
{
    check_coefficient(K, grid);
    if (grid.kind() != ElementKind::TriLinear) {
        throw std::invalid_argument("solve_plaplace: triangular grid required");
    }
    if (!(p >= 2.0)) {
        throw std::invalid_argument("solve_plaplace: p must be >= 2");
    }
    const TriGeometry geo = tri_geometry(grid);
    const Eigen::VectorXd coeff = nodal_to_element(K, grid);
    const Eigen::VectorXd F = assemble_load(grid, [](double, double) { return 1.0; });
    const double fnorm = safe_norm(F);

    // Start from the Darcy solution scaled to minimize the energy along its ray.
    Eigen::VectorXd u = solve_cholesky(assemble_stiffness(grid, coeff), F);
    {
        double a = 0.0;
        for (int e = 0; e < coeff.size(); ++e) {
            a += geo.area * coeff[e] * std::pow(element_gradient(geo, e, u).norm(), p);
        }
        const double b = F.dot(u);
        if (a > 0.0 && b > 0.0) {
            u *= std::pow(b / a, 1.0 / (p - 1.0));
        }
    }

    NonlinearSolution out{u, FemSystem{CsrMatrix{}, F, grid}, 0, {}, {}, {}};
    double E = energy(geo, coeff, p, u, F);
    for (int it = 0;; ++it) {
        CsrMatrix A = assemble_stiffness(grid, secant_coefficients(geo, coeff, p, u));
        const Eigen::VectorXd grad = A.multiply(u) - F;
        const double rel = grad.norm() / fnorm;
        out.residual_history.push_back(rel);
        out.energy_history.push_back(E);
        if (rel <= cfg.tol) {
            out.u = u;
            out.system = FemSystem{std::move(A), F, grid};
            out.iterations = it;
            return out;
        }
        if (it == cfg.max_iterations) {
            throw NewtonError("solve_plaplace: no convergence in " + std::to_string(it) + " iterations",
                              {it, rel, false}, out.residual_history, out.halvings);
        }
        const Eigen::VectorXd step = shifted_cholesky_solve(energy_hessian(grid, geo, coeff, p, u), -grad);
        const double slope = grad.dot(step);
        double t = 1.0;
        int halvings = 0;
        bool accepted = false;
        for (; halvings <= cfg.max_halvings; ++halvings, t *= 0.5) {
            const Eigen::VectorXd trial = u + t * step;
            const double E_trial = energy(geo, coeff, p, trial, F);
            if (E_trial <= E + cfg.armijo * t * slope) {
                u = trial;
                E = E_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Near convergence the energy decrease drops below round-off; take the
            // full step if it does not raise the energy and shrinks the gradient.
            const Eigen::VectorXd trial = u + step;
            const double E_trial = energy(geo, coeff, p, trial, F);
            const Eigen::VectorXd g_trial =
                assemble_stiffness(grid, secant_coefficients(geo, coeff, p, trial)).multiply(trial) - F;
            if (E_trial <= E && g_trial.norm() < grad.norm()) {
                u = trial;
                E = E_trial;
                halvings = 0;
            } else {
                out.halvings.push_back(halvings);
                throw NewtonError("solve_plaplace: line search failed", {it, rel, false}, out.residual_history,
                                  out.halvings);
            }
        }
        out.halvings.push_back(halvings);
    }
}

}  // namespace cnnrom::fem
