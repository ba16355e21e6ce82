#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "cnnrom/galerkin/basis_net.hpp"

namespace cnnrom::msfem {

/// Coarse quadrilateral mesh nested in a square fine grid: `elements` coarse
/// cells per axis, each covering `ratio` fine cells per axis.
struct CoarseMesh {
    int fine_nodes = 0;
    int elements = 0;
    int ratio = 0;
    double H = 0.0;

    /// Throws std::invalid_argument unless (fine_nodes - 1) is a multiple of elements.
    static CoarseMesh make(int fine_nodes, int elements);
    int coarse_nodes() const { return elements + 1; }
    int num_coarse_free() const { return (elements - 1) * (elements - 1); }
};

/// Inclusive box of fine node indices.
struct Region {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
    int nx() const { return x1 - x0 + 1; }
    int ny() const { return y1 - y0 + 1; }
};

Region element_region(const CoarseMesh& mesh, int ex, int ey);
/// Element box grown by `ring` coarse cells per side and clipped to the
/// domain; ring < 0 selects the whole domain.
Region oversampled_region(const CoarseMesh& mesh, int ex, int ey, int ring);

fem::FieldNodal restrict_field(const fem::FieldNodal& field, const Region& r);

/// Bilinear function on an nx x ny lattice equal to 1 at `corner` and 0 at the
/// other three. Corners: 0 (x0,y0), 1 (x1,y0), 2 (x1,y1), 3 (x0,y1).
fem::FieldNodal corner_hat(int nx, int ny, int corner);

/// Local problem -div(K grad phi) = 0 with phi = corner_hat on the boundary,
/// as a Galerkin sample: interior stiffness, lifted load and interior solution.
galerkin::Sample local_problem(const fem::FieldNodal& K_region, int corner, double h);

/// Full-lattice solution of the local problem for one corner.
fem::FieldNodal solve_local_basis(const fem::FieldNodal& K_region, int corner, double h);

/// Four local functions (one per corner of the region) for K on a region.
using LocalBasisFn = std::function<std::array<fem::FieldNodal, 4>(const fem::FieldNodal& K_region, double h)>;

/// Direct fine-scale solves.
LocalBasisFn direct_local_basis();

/// Galerkin predictions of a Basis net trained on rotational_dataset samples
/// for corner 0; the other corners come from rotated inputs. Regions whose
/// interior does not match the net resolution go to `fallback`, counted in
/// `*fallbacks` when given.
LocalBasisFn net_local_basis(const nn::ParamStore& store, const galerkin::BasisNetCfg& cfg, LocalBasisFn fallback,
                             int* fallbacks = nullptr);

/// Four clockwise quarter turns of each square patch, labelled with the
/// corner-0 local solution of the turned field.
std::vector<galerkin::Sample> rotational_dataset(const std::vector<fem::FieldNodal>& patches, double h);

/// c with c V = I, where V(k, j) is function k at target corner j.
Eigen::Matrix4d recombination_matrix(const std::array<fem::FieldNodal, 4>& phi, const Region& outer,
                                     const Region& target);

struct MsBasisCfg {
    int ring = 1;
};

struct MsBasisSet {
    CoarseMesh mesh;
    fem::Grid2D fine;
    /// Column p is the averaged global basis of coarse free node p on fine free nodes.
    Eigen::SparseMatrix<double> Phi;
    /// Fine stiffness for the coefficient field the set was built for.
    fem::CsrMatrix A_fine;
    Eigen::MatrixXd A_coarse;
    Eigen::LDLT<Eigen::MatrixXd> A_coarse_ldlt;
    /// Recombined per-element functions, indexed ey * elements + ex.
    std::vector<std::array<fem::FieldNodal, 4>> element_bases;
    int local_solves = 0;
};

/// Local problems, recombination and trace averaging for K on `fine`.
MsBasisSet build_ms_basis(const fem::FieldNodal& K, const fem::Grid2D& fine, const CoarseMesh& mesh,
                          const MsBasisCfg& cfg = {}, const LocalBasisFn& provider = direct_local_basis());

struct MsSolution {
    Eigen::VectorXd u_coarse;
    /// Prolongation Phi u_coarse on the fine free nodes.
    Eigen::VectorXd u_fine;
};

/// Coarse solve for a source; touches only the prebuilt basis set.
MsSolution msfem_solve(const MsBasisSet& basis, const fem::SourceFn& f);

/// ||u - ref|| / ||ref||.
double relative_error(const Eigen::VectorXd& u, const Eigen::VectorXd& ref);

/// "constant" (a), "exp-sum" (a exp(b (x + y))), "sin-sum" (a sin(2 pi b (x + y))).
fem::SourceFn make_source(const std::string& kind, double a = 1.0, double b = 1.0);

}  // namespace cnnrom::msfem
