#include "cnnrom/galerkin/dataset.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "cnnrom/fem/parallel.hpp"
#include "cnnrom/fields/kle.hpp"
#include "cnnrom/fields/rng.hpp"

namespace cnnrom::galerkin {

std::string to_string(Equation e)
{
    switch (e) {
    case Equation::Darcy: return "darcy";
    case Equation::NonlinearSource: return "nonlinear";
    case Equation::PLaplace: return "plaplace";
    }
    return "?";
}

Equation equation_from_string(const std::string& name)
{
    if (name == "darcy") return Equation::Darcy;
    if (name == "nonlinear") return Equation::NonlinearSource;
    if (name == "plaplace") return Equation::PLaplace;
    throw std::invalid_argument("unknown equation '" + name + "' (darcy, nonlinear, plaplace)");
}

std::string to_string(FieldKind k)
{
    return k == FieldKind::Binomial ? "binomial" : "kle";
}

FieldKind field_kind_from_string(const std::string& name)
{
    if (name == "binomial") return FieldKind::Binomial;
    if (name == "kle") return FieldKind::Kle;
    throw std::invalid_argument("unknown field kind '" + name + "' (binomial, kle)");
}

void GenCfg::validate() const
{
    if (nodes < 3) {
        throw std::invalid_argument("GenCfg: nodes must be >= 3");
    }
    if (num_train < 0 || num_test < 0) {
        throw std::invalid_argument("GenCfg: sample counts must be >= 0");
    }
    if (equation == Equation::PLaplace && element != fem::ElementKind::TriLinear) {
        throw std::invalid_argument("GenCfg: the p-Laplacian needs triangular elements");
    }
    if (equation == Equation::PLaplace && !(p > 1.0)) {
        throw std::invalid_argument("GenCfg: p must exceed 1");
    }
    if (field == FieldKind::Binomial) {
        binomial.validate();
    }
    else if (!(kle_l > 0.0) || kle_Q < 1 || kle_Q > nodes * nodes) {
        throw std::invalid_argument("GenCfg: KLE needs l > 0 and 1 <= Q <= node count");
    }
}

Sample solve_sample(const fem::FieldNodal& K, const fem::Grid2D& grid, Equation eq, double p)
{
    switch (eq) {
    case Equation::Darcy: {
        fem::FemSystem sys = fem::assemble_darcy(K, grid);
        Eigen::VectorXd u = fem::solve_linear(sys).u;
        return {K, std::move(u), std::move(sys)};
    }
    case Equation::NonlinearSource: {
        fem::NonlinearSolution s = fem::solve_nonlinear_source(K, grid);
        return {K, std::move(s.u), std::move(s.system)};
    }
    case Equation::PLaplace: {
        fem::NonlinearSolution s = fem::solve_plaplace(K, grid, p);
        return {K, std::move(s.u), std::move(s.system)};
    }
    }
    throw std::logic_error("solve_sample: bad equation");
}

GeneratedData generate_data(const GenCfg& cfg)
{
    cfg.validate();
    const fem::Grid2D grid = fem::build_grid(cfg.nodes, cfg.nodes, cfg.element);
    std::optional<fields::KleModel> kle;
    if (cfg.field == FieldKind::Kle) {
        kle = fields::build_kle(grid, cfg.kle_l, cfg.kle_m, cfg.kle_Q);
    }
    GeneratedData out;
    const std::int64_t wanted = static_cast<std::int64_t>(cfg.num_train) + cfg.num_test;
    std::int64_t index = 0;
    // Rounds of independent solves; results are appended in index order so the
    // split does not depend on the worker count.
    while (static_cast<std::int64_t>(out.train.size() + out.test.size()) < wanted) {
        const std::int64_t round = wanted - static_cast<std::int64_t>(out.train.size() + out.test.size());
        std::vector<std::optional<Sample>> solved(static_cast<std::size_t>(round));
        fem::parallel_for(round, [&](std::int64_t k) {
            const std::uint64_t s = fields::derive_seed(cfg.seed, static_cast<std::uint64_t>(index + k));
            const fem::FieldNodal K =
                kle ? fields::sample_grf(*kle, s) : fields::sample_binomial_field(cfg.binomial, grid, s);
            try {
                solved[static_cast<std::size_t>(k)] = solve_sample(K, grid, cfg.equation, cfg.p);
            } catch (const fem::SolverError&) {
            }
        });
        for (std::int64_t k = 0; k < round; ++k) {
            auto& smp = solved[static_cast<std::size_t>(k)];
            if (!smp) {
                out.failures.push_back(index + k);
                continue;
            }
            auto& dst = static_cast<int>(out.train.size()) < cfg.num_train ? out.train : out.test;
            dst.push_back(std::move(*smp));
        }
        if (static_cast<std::int64_t>(out.failures.size()) > wanted) {
            throw std::runtime_error("generate_data: more solver failures than requested samples");
        }
        index += round;
    }
    return out;
}

namespace {

std::array<int, 2> map_node(int t, int ix, int iy, int n)
{
    switch (t) {
    case 0: return {ix, iy};
    case 1: return {n - 1 - ix, iy};
    case 2: return {ix, n - 1 - iy};
    case 3: return {n - 1 - ix, n - 1 - iy};
    case 4: return {iy, ix};
    case 5: return {n - 1 - iy, n - 1 - ix};
    case 6: return {n - 1 - iy, ix};
    case 7: return {iy, n - 1 - ix};
    }
    throw std::invalid_argument("transform_sample: symmetry index must lie in 0..7");
}

}  // namespace

std::vector<int> grid_symmetries(const fem::Grid2D& grid)
{
    if (grid.nx() != grid.ny() || grid.hx() != grid.hy()) {
        return {0};
    }
    if (grid.kind() == fem::ElementKind::TriLinear) {
        return {0, 3, 4, 5};
    }
    return {0, 1, 2, 3, 4, 5, 6, 7};
}

Sample transform_sample(const Sample& s, int t)
{
    const fem::Grid2D& g = s.system.grid;
    const std::vector<int> allowed = grid_symmetries(g);
    if (std::find(allowed.begin(), allowed.end(), t) == allowed.end()) {
        throw std::invalid_argument("transform_sample: symmetry " + std::to_string(t) + " does not preserve the mesh");
    }
    if (t == 0) {
        return s;
    }
    const int n = g.nx();
    std::vector<std::int64_t> perm(static_cast<std::size_t>(g.num_free()));
    Sample out{fem::FieldNodal(n, n), Eigen::VectorXd(g.num_free()), {{}, Eigen::VectorXd(g.num_free()), g}};
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const auto [jx, jy] = map_node(t, ix, iy, n);
            out.K(jy, jx) = s.K(iy, ix);
            const int k = g.free_index(g.node(ix, iy));
            if (k >= 0) {
                perm[static_cast<std::size_t>(k)] = g.free_index(g.node(jx, jy));
            }
        }
    }
    std::vector<fem::Triplet> trip;
    trip.reserve(static_cast<std::size_t>(s.system.A.nnz()));
    const fem::CsrMatrix& A = s.system.A;
    for (std::int64_t r = 0; r < A.rows(); ++r) {
        out.u[perm[static_cast<std::size_t>(r)]] = s.u[r];
        out.system.F[perm[static_cast<std::size_t>(r)]] = s.system.F[r];
        for (std::int64_t k = A.row_offsets()[static_cast<std::size_t>(r)]; k < A.row_offsets()[static_cast<std::size_t>(r) + 1]; ++k) {
            trip.push_back({perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(A.col_indices()[static_cast<std::size_t>(k)])],
                            A.values()[static_cast<std::size_t>(k)]});
        }
    }
    out.system.A = fem::CsrMatrix::from_triplets(A.rows(), A.cols(), std::move(trip));
    return out;
}

void add_label_noise(std::span<Sample> samples, double sigma, std::uint64_t seed)
{
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fields::Rng rng = fields::make_rng(fields::derive_seed(seed, i));
        std::normal_distribution<double> nd(0.0, sigma);
        for (Eigen::Index k = 0; k < samples[i].u.size(); ++k) {
            samples[i].u[k] += nd(rng);
        }
    }
}

nn::Tensor stack_inputs(std::span<const Sample* const> batch)
{
    if (batch.empty()) {
        throw std::invalid_argument("stack_inputs: empty batch");
    }
    const fem::Grid2D& g = batch.front()->system.grid;
    nn::Tensor x(nn::Shape{static_cast<std::int64_t>(batch.size()), 1, g.free_ny(), g.free_nx()});
    const auto nf = g.num_free();
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b]->system.grid.num_free() != nf) {
            throw std::invalid_argument("stack_inputs: mixed resolutions in one batch");
        }
        Eigen::Map<Eigen::VectorXd>(x.data() + static_cast<std::int64_t>(b) * nf, nf) =
            fem::restrict_to_free(batch[b]->K, batch[b]->system.grid);
    }
    return x;
}

nn::Tensor stack_inputs(std::span<const fem::FieldNodal> fields, const fem::Grid2D& grid)
{
    const auto nf = grid.num_free();
    nn::Tensor x(nn::Shape{static_cast<std::int64_t>(fields.size()), 1, grid.free_ny(), grid.free_nx()});
    for (std::size_t b = 0; b < fields.size(); ++b) {
        if (!grid.same_shape(fields[b])) {
            throw std::invalid_argument("stack_inputs: field does not match the grid");
        }
        Eigen::Map<Eigen::VectorXd>(x.data() + static_cast<std::int64_t>(b) * nf, nf) =
            fem::restrict_to_free(fields[b], grid);
    }
    return x;
}

std::vector<const Sample*> pointers(std::span<const Sample> samples)
{
    std::vector<const Sample*> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        out.push_back(&s);
    }
    return out;
}

}  // namespace cnnrom::galerkin
