#include "cnnrom/galerkin/gradient_gate.hpp"

#include "cnnrom/fields/kle.hpp"
#include "cnnrom/fields/rng.hpp"

namespace cnnrom::galerkin {

nn::GradCheckResult basis_gradient_gate(const GateCfg& cfg)
{
    const fem::Grid2D grid = fem::build_grid(cfg.nodes, cfg.nodes, fem::ElementKind::QuadBilinear);
    const fields::KleModel kle = fields::build_kle(grid, 0.3, 0.0, grid.num_nodes());
    std::vector<Sample> samples;
    for (int i = 0; i < cfg.batch; ++i) {
        const fem::FieldNodal K = fields::sample_grf(kle, fields::derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        samples.push_back(solve_sample(K, grid, Equation::Darcy, 2.0));
    }
    const std::vector<const Sample*> batch = pointers(samples);

    BasisNetCfg net;
    net.free_nx = grid.free_nx();
    net.free_ny = grid.free_ny();
    net.channels = {cfg.channels};
    net.kernel = cfg.kernel;
    net.N = cfg.N;
    net.activation = cfg.activation;
    net.lambda_G = cfg.lambda_G;
    nn::ParamStore store;
    init_basis_net(store, net, fields::derive_seed(cfg.seed, 1u << 20));

    // Train-mode BN; the running-stat updates touch buffers only.
    auto loss = [&](nn::ParamStore& s, bool with_grad) {
        nn::Tape tape;
        nn::Forward f{tape, s, true, true};
        const BasisLoss bl = basis_loss(f, net, batch);
        if (bl.galerkin.num_valid() != static_cast<int>(batch.size())) {
            throw IllConditionedError("basis_gradient_gate: reduced matrix rejected", 0.0);
        }
        if (with_grad) {
            tape.backward(bl.total);
        }
        return bl.total.value()[0];
    };
    return nn::grad_check(loss, store, cfg.eps, 0, cfg.seed);
}

}  // namespace cnnrom::galerkin
