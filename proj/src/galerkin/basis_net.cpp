#include "cnnrom/galerkin/basis_net.hpp"

#include <stdexcept>
#include <string>

#include "cnnrom/fem/metrics.hpp"

namespace cnnrom::galerkin {

namespace {

std::string block_name(std::size_t i)
{
    return "basis.block" + std::to_string(i);
}

}  // namespace

void BasisNetCfg::validate() const
{
    if (N < 1) {
        throw std::invalid_argument("BasisNetCfg: N must be >= 1");
    }
    if (kernel < 1 || kernel % 2 == 0) {
        throw std::invalid_argument("BasisNetCfg: kernel must be odd");
    }
    if (!(lambda_G >= 0.0)) {
        throw std::invalid_argument("BasisNetCfg: lambda_G must be >= 0");
    }
    if (free_nx < 1 || free_ny < 1) {
        throw std::invalid_argument("BasisNetCfg: empty input resolution");
    }
    for (const int c : channels) {
        if (c < 1) {
            throw std::invalid_argument("BasisNetCfg: channel widths must be >= 1");
        }
    }
}

void init_basis_net(nn::ParamStore& store, const BasisNetCfg& cfg, std::uint64_t seed)
{
    cfg.validate();
    fields::Rng rng = fields::make_rng(seed);
    int in = 1;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        nn::init_conv(store, block_name(i) + ".conv", cfg.channels[i], in, cfg.kernel, rng, cfg.activation);
        nn::init_batchnorm(store, block_name(i) + ".bn", cfg.channels[i]);
        in = cfg.channels[i];
    }
    nn::init_conv(store, "basis.head", cfg.N, in, 1, rng, nn::Activation::Identity);
}

nn::Var basis_forward(nn::Forward& f, const BasisNetCfg& cfg, nn::Var K)
{
    const nn::Shape& s = K.shape();
    if (s.size() != 4 || s[1] != 1 || s[2] != cfg.free_ny || s[3] != cfg.free_nx) {
        throw std::invalid_argument("basis_forward: expected input [B, 1, " + std::to_string(cfg.free_ny) + ", " +
                                    std::to_string(cfg.free_nx) + "], got " + nn::shape_string(s));
    }
    nn::Var x = cfg.log_input ? nn::log(K) : K;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        x = nn::conv_block(f, block_name(i), x, 1, cfg.activation);
    }
    return nn::conv_layer(f, "basis.head", x);
}

BasisLoss basis_loss(nn::Forward& f, const BasisNetCfg& cfg, std::span<const Sample* const> batch)
{
    nn::Tape& t = f.tape;
    const nn::Var K = t.leaf(stack_inputs(batch));
    const nn::Var P = basis_forward(f, cfg, K);
    std::vector<const fem::FemSystem*> systems;
    for (const Sample* s : batch) {
        systems.push_back(&s->system);
    }
    BasisLoss out{{}, {}, {}, galerkin_batch(P, systems)};
    const int valid = out.galerkin.num_valid();
    if (valid == 0) {
        out.misfit = out.penalty = out.total = t.leaf(nn::Tensor(nn::Shape{1}, 0.0));
        return out;
    }
    const auto B = static_cast<std::int64_t>(batch.size());
    const auto Nf = out.galerkin.u_hat.shape()[1];
    nn::Tensor target(nn::Shape{B, Nf});
    nn::Tensor row_mask(nn::Shape{B, Nf});
    nn::Tensor mask(nn::Shape{B});
    for (std::int64_t b = 0; b < B; ++b) {
        const bool ok = out.galerkin.valid[static_cast<std::size_t>(b)];
        Eigen::Map<Eigen::VectorXd>(target.data() + b * Nf, Nf) = batch[static_cast<std::size_t>(b)]->u;
        Eigen::Map<Eigen::VectorXd>(row_mask.data() + b * Nf, Nf).setConstant(ok ? 1.0 : 0.0);
        mask[b] = ok ? 1.0 : 0.0;
    }
    const fem::Grid2D& g = batch.front()->system.grid;
    const double inv = 1.0 / valid;
    const nn::Var diff = nn::sub(out.galerkin.u_hat, t.leaf(std::move(target)));
    out.misfit = nn::scale(nn::sum(nn::mul_const(nn::square(diff), row_mask)), g.hx() * g.hy() * inv);
    out.penalty = nn::scale(nn::sum(nn::mul_const(nn::square(out.galerkin.cond), mask)), cfg.lambda_G * inv);
    out.total = nn::add(out.misfit, out.penalty);
    return out;
}

BasisEval evaluate_basis(nn::ParamStore& store, const BasisNetCfg& cfg, std::span<const Sample> samples,
                         int batch_size)
{
    BasisEval ev;
    if (samples.empty()) {
        return ev;
    }
    const std::vector<const Sample*> ptrs = pointers(samples);
    std::vector<Eigen::VectorXd> refs;
    double cond_sum = 0.0;
    int cond_count = 0;
    for (std::size_t start = 0; start < ptrs.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t len = std::min(ptrs.size() - start, static_cast<std::size_t>(batch_size));
        const std::span<const Sample* const> batch(ptrs.data() + start, len);
        nn::Tape tape;
        nn::Forward f{tape, store, false, false};
        const nn::Var P = basis_forward(f, cfg, tape.leaf(stack_inputs(batch)));
        std::vector<const fem::FemSystem*> systems;
        for (const Sample* s : batch) {
            systems.push_back(&s->system);
        }
        const GalerkinBatch gb = galerkin_batch(P, systems);
        const nn::Tensor& u = gb.u_hat.value();
        const auto Nf = u.dim(1);
        for (std::size_t b = 0; b < len; ++b) {
            ev.predictions.emplace_back(Eigen::Map<const Eigen::VectorXd>(u.data() + static_cast<std::int64_t>(b) * Nf, Nf));
            refs.push_back(batch[b]->u);
            if (gb.valid[b]) {
                cond_sum += gb.cond.value()[static_cast<std::int64_t>(b)];
                ++cond_count;
            }
            else {
                ++ev.skipped;
            }
        }
    }
    ev.eps_test = fem::relative_test_mean_error(ev.predictions, refs);
    ev.mean_cond = cond_count > 0 ? cond_sum / cond_count : 0.0;
    return ev;
}

std::vector<Eigen::MatrixXd> predict_bases(nn::ParamStore& store, const BasisNetCfg& cfg,
                                           std::span<const Sample> samples, int batch_size)
{
    std::vector<Eigen::MatrixXd> out;
    const std::vector<const Sample*> ptrs = pointers(samples);
    for (std::size_t start = 0; start < ptrs.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t len = std::min(ptrs.size() - start, static_cast<std::size_t>(batch_size));
        nn::Tape tape;
        nn::Forward f{tape, store, false, false};
        const nn::Var P = basis_forward(f, cfg, tape.leaf(stack_inputs({ptrs.data() + start, len})));
        for (std::size_t b = 0; b < len; ++b) {
            out.push_back(basis_matrix(P.value(), static_cast<std::int64_t>(b)));
        }
    }
    return out;
}

}  // namespace cnnrom::galerkin
