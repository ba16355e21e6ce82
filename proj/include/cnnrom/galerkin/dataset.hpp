#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnnrom/fem/nonlinear.hpp"
#include "cnnrom/fields/binomial.hpp"
#include "cnnrom/nn/tensor.hpp"

namespace cnnrom::galerkin {

enum class Equation { Darcy, NonlinearSource, PLaplace };
std::string to_string(Equation e);
Equation equation_from_string(const std::string& name);

enum class FieldKind { Binomial, Kle };
std::string to_string(FieldKind k);
FieldKind field_kind_from_string(const std::string& name);

/// One training record: input field, label and the fine-scale system it solves.
struct Sample {
    fem::FieldNodal K;
    Eigen::VectorXd u;
    fem::FemSystem system;
};

struct GenCfg {
    int nodes = 17;
    fem::ElementKind element = fem::ElementKind::QuadBilinear;
    Equation equation = Equation::Darcy;
    double p = 3.0;
    FieldKind field = FieldKind::Binomial;
    fields::BinomialProcessCfg binomial;
    double kle_l = 0.1;
    double kle_m = 0.0;
    int kle_Q = 20;
    int num_train = 512;
    int num_test = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedData {
    std::vector<Sample> train;
    std::vector<Sample> test;
    /// Seed indices whose solve failed; the generator moves on to the next index.
    std::vector<std::int64_t> failures;
};

/// Draws K for seed index i from derive_seed(cfg.seed, i), solves the
/// configured equation and keeps (K, u_h, A_h, F_h). Train samples take the
/// first successful indices, test samples the following ones.
GeneratedData generate_data(const GenCfg& cfg);

/// Solves the configured equation for one field.
Sample solve_sample(const fem::FieldNodal& K, const fem::Grid2D& grid, Equation eq, double p);

/// Symmetries of the square that map the mesh onto itself: all eight for
/// quads, the four preserving the cell diagonal for triangles. Index 0 is the
/// identity.
std::vector<int> grid_symmetries(const fem::Grid2D& grid);

/// Image of a sample under symmetry t (0..7): K, u, A and F are permuted
/// consistently, so the result is the record the solver would produce for the
/// transformed field. Throws std::invalid_argument for non-square grids or a
/// transform that does not preserve the mesh.
Sample transform_sample(const Sample& s, int t);

/// Adds N(0, sigma^2) to every label entry.
void add_label_noise(std::span<Sample> samples, double sigma, std::uint64_t seed);

/// Network input [B, 1, ny_free, nx_free] holding K at the free nodes.
nn::Tensor stack_inputs(std::span<const Sample* const> batch);
nn::Tensor stack_inputs(std::span<const fem::FieldNodal> fields, const fem::Grid2D& grid);

std::vector<const Sample*> pointers(std::span<const Sample> samples);

}  // namespace cnnrom::galerkin
