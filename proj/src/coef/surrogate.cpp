#include "cnnrom/coef/surrogate.hpp"

#include <stdexcept>

#include "cnnrom/fem/metrics.hpp"

namespace cnnrom::coef {

namespace {

// Eval-mode passes read parameters and buffers only.
nn::ParamStore& readonly(const nn::ParamStore& store)
{
    return const_cast<nn::ParamStore&>(store);
}

}  // namespace

void SurrogateModel::validate() const
{
    basis_cfg.validate();
    coef_cfg.validate();
    if (basis_cfg.N != coef_cfg.N) {
        throw std::invalid_argument("SurrogateModel: Basis and Coef nets disagree on N");
    }
    if (basis_cfg.free_nx != coef_cfg.free_nx || basis_cfg.free_ny != coef_cfg.free_ny ||
        basis_cfg.free_nx != nodes - 2 || basis_cfg.free_ny != nodes - 2) {
        throw std::invalid_argument("SurrogateModel: network resolution does not match the grid");
    }
}

fem::Grid2D SurrogateModel::grid() const
{
    return fem::build_grid(nodes, nodes, element);
}

nn::Var surrogate_forward(nn::Tape& tape, const SurrogateModel& model, nn::Var K)
{
    nn::Forward fb{tape, readonly(model.basis), false, false};
    const nn::Var P = galerkin::basis_forward(fb, model.basis_cfg, K);
    nn::Forward fc{tape, readonly(model.coef), false, false};
    const nn::Var c = coef_forward(fc, model.coef_cfg, K);
    return nn::combine_channels(P, c);
}

std::vector<Eigen::VectorXd> surrogate_predict(std::span<const fem::FieldNodal> K, const SurrogateModel& model)
{
    std::vector<Eigen::VectorXd> out;
    if (K.empty()) {
        return out;
    }
    const fem::Grid2D g = model.grid();
    nn::Tape tape;
    const nn::Var u = surrogate_forward(tape, model, tape.leaf(galerkin::stack_inputs(K, g)));
    const auto Nf = u.shape()[1];
    for (std::size_t b = 0; b < K.size(); ++b) {
        out.emplace_back(Eigen::Map<const Eigen::VectorXd>(u.value().data() + static_cast<std::int64_t>(b) * Nf, Nf));
    }
    return out;
}

Eigen::VectorXd surrogate_predict(const fem::FieldNodal& K, const SurrogateModel& model)
{
    return surrogate_predict(std::span<const fem::FieldNodal>(&K, 1), model).front();
}

nn::Var coef_loss(nn::Forward& f, const CoefNetCfg& cfg, const nn::Tensor& bases,
                  std::span<const galerkin::Sample* const> batch)
{
    nn::Tape& t = f.tape;
    const nn::Var c = coef_forward(f, cfg, t.leaf(galerkin::stack_inputs(batch)));
    const nn::Var u = nn::combine_channels(t.leaf(bases), c);
    const auto B = static_cast<std::int64_t>(batch.size());
    const auto Nf = u.shape()[1];
    nn::Tensor target(nn::Shape{B, Nf});
    for (std::int64_t b = 0; b < B; ++b) {
        Eigen::Map<Eigen::VectorXd>(target.data() + b * Nf, Nf) = batch[static_cast<std::size_t>(b)]->u;
    }
    const fem::Grid2D& g = batch.front()->system.grid;
    return nn::scale(nn::sum(nn::square(nn::sub(u, t.leaf(std::move(target))))), g.hx() * g.hy() / static_cast<double>(B));
}

galerkin::TrainResult train_coef(nn::ParamStore init, const CoefNetCfg& cfg, const nn::ParamStore& basis,
                                 const galerkin::BasisNetCfg& basis_cfg, const galerkin::TrainCfg& train_cfg,
                                 std::span<const galerkin::Sample> train, std::span<const galerkin::Sample> test,
                                 const galerkin::EpochHook& hook)
{
    cfg.validate();
    if (cfg.N != basis_cfg.N) {
        throw std::invalid_argument("train_coef: Coef and Basis nets disagree on N");
    }
    const std::vector<Eigen::MatrixXd> test_bases = galerkin::predict_bases(readonly(basis), basis_cfg, test);

    auto loss = [&](nn::Forward& f, std::span<const galerkin::Sample* const> batch) {
        nn::Tape basis_tape;
        nn::Forward fb{basis_tape, readonly(basis), false, false};
        const nn::Var P = galerkin::basis_forward(fb, basis_cfg, basis_tape.leaf(galerkin::stack_inputs(batch)));
        return galerkin::StepLoss{coef_loss(f, cfg, P.value(), batch), static_cast<int>(batch.size()), 0};
    };
    auto eval = [&](nn::ParamStore& store) {
        if (test.empty()) {
            return std::pair{0.0, 0.0};
        }
        std::vector<Eigen::VectorXd> preds;
        std::vector<Eigen::VectorXd> refs;
        const std::vector<const galerkin::Sample*> ptrs = galerkin::pointers(test);
        constexpr std::size_t chunk = 64;
        for (std::size_t start = 0; start < ptrs.size(); start += chunk) {
            const std::size_t len = std::min(chunk, ptrs.size() - start);
            nn::Tape tape;
            nn::Forward f{tape, store, false, false};
            const nn::Var c = coef_forward(f, cfg, tape.leaf(galerkin::stack_inputs({ptrs.data() + start, len})));
            for (std::size_t b = 0; b < len; ++b) {
                const Eigen::VectorXd cb =
                    Eigen::Map<const Eigen::VectorXd>(c.value().data() + static_cast<std::int64_t>(b) * cfg.N, cfg.N);
                preds.push_back(test_bases[start + b] * cb);
                refs.push_back(ptrs[start + b]->u);
            }
        }
        return std::pair{fem::relative_test_mean_error(preds, refs), 0.0};
    };
    return galerkin::train_loop(std::move(init), train_cfg, train, loss, eval, hook);
}

double evaluate_surrogate(const SurrogateModel& model, std::span<const galerkin::Sample> samples)
{
    std::vector<fem::FieldNodal> K;
    std::vector<Eigen::VectorXd> refs;
    for (const galerkin::Sample& s : samples) {
        K.push_back(s.K);
        refs.push_back(s.u);
    }
    std::vector<Eigen::VectorXd> preds;
    constexpr std::size_t chunk = 64;
    for (std::size_t start = 0; start < K.size(); start += chunk) {
        const std::size_t len = std::min(chunk, K.size() - start);
        for (auto& p : surrogate_predict(std::span<const fem::FieldNodal>(K.data() + start, len), model)) {
            preds.push_back(std::move(p));
        }
    }
    return fem::relative_test_mean_error(preds, refs);
}

}  // namespace cnnrom::coef
