#pragma once

#include <vector>

#include "cnnrom/fem/solve.hpp"

namespace cnnrom::fem {

struct NewtonConfig {
    double tol = 1e-10;   ///< relative residual ||R|| / ||F(u)||
    int max_iterations = 50;
    int max_halvings = 30;
};

/// Output of a nonlinear solve: the solution together with the system
/// linearized at that solution, so that A u = F holds to solver tolerance.
struct NonlinearSolution {
    Eigen::VectorXd u;
    FemSystem system;
    int iterations = 0;
    std::vector<double> residual_history;  ///< relative residual per accepted iterate
    std::vector<double> energy_history;    ///< p-Laplacian only
    std::vector<int> halvings;             ///< damping halvings per step
};

/// Thrown when Newton stalls; carries the damping trace.
class NewtonError : public SolverError {
public:
    NewtonError(const std::string& what, SolveReport report, std::vector<double> residuals, std::vector<int> halvings)
        : SolverError(what, report), residuals_(std::move(residuals)), halvings_(std::move(halvings))
    {
    }
    const std::vector<double>& residuals() const { return residuals_; }
    const std::vector<int>& halvings() const { return halvings_; }

private:
    std::vector<double> residuals_;
    std::vector<int> halvings_;
};

/// Source nonlinearity sin(10 pi u) + cos(10 pi u) and its derivative.
double nonlinear_source(double u);
double nonlinear_source_derivative(double u);

/// Load vector on free nodes for the source evaluated at element means of u.
Eigen::VectorXd nonlinear_source_load(const Grid2D& grid, const Eigen::VectorXd& u_free);

/// -div(K grad u) = sin(10 pi u) + cos(10 pi u), u = 0 on the boundary, by damped Newton from u = 0.
NonlinearSolution solve_nonlinear_source(const FieldNodal& K, const Grid2D& grid, const NewtonConfig& cfg = {});

struct PLaplaceConfig {
    double tol = 1e-10;  ///< ||grad E|| / ||F||
    int max_iterations = 50;
    int max_halvings = 30;
    double armijo = 1e-4;
};

/// Discrete energy (1/p) sum_e |e| K_e |grad u|_e^p - F.u on a triangular grid.
double plaplace_energy(const Grid2D& grid, const Eigen::VectorXd& element_coeff, double p, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& F);

/// Minimizes the p-Laplacian energy with load f = 1 by damped Newton with
/// Armijo backtracking. Triangular grids only (constant element gradients).
/// The returned system carries the stiffness with coefficient K |grad u_h|^(p-2).
NonlinearSolution solve_plaplace(const FieldNodal& K, const Grid2D& grid, double p, const PLaplaceConfig& cfg = {});

}  // namespace cnnrom::fem
