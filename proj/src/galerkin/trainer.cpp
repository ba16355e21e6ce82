#include "cnnrom/galerkin/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cnnrom/fields/rng.hpp"

namespace cnnrom::galerkin {

void TrainCfg::validate() const
{
    if (batch < 2) {
        throw std::invalid_argument("TrainCfg: batch must be >= 2 (batch norm)");
    }
    if (epochs < 0) {
        throw std::invalid_argument("TrainCfg: epochs must be >= 0");
    }
    if (!(lr0 > 0.0) || lr_floor < 0.0 || lr_floor > lr0) {
        throw std::invalid_argument("TrainCfg: need 0 <= lr_floor <= lr0 and lr0 > 0");
    }
    if (!(max_skip_rate >= 0.0 && max_skip_rate <= 1.0)) {
        throw std::invalid_argument("TrainCfg: max_skip_rate must lie in [0, 1]");
    }
}

TrainResult train_loop(nn::ParamStore params, const TrainCfg& cfg, std::span<const Sample> train,
                       const BatchLossFn& loss, const EvalFn& eval, const EpochHook& hook)
{
    cfg.validate();
    const std::size_t n = train.size();
    const std::size_t steps_per_epoch = n / static_cast<std::size_t>(cfg.batch) +
                                        (n % static_cast<std::size_t>(cfg.batch) >= 2 ? 1 : 0);
    if (steps_per_epoch == 0 && cfg.epochs > 0) {
        throw std::invalid_argument("train_loop: need at least two training samples");
    }
    const nn::CosineSchedule sched{cfg.lr0, std::max<std::int64_t>(1, static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs),
                                   cfg.lr_floor};
    nn::Adam adam;
    TrainResult res;

    auto [eps0, mon0] = eval(params);
    res.history.push_back({0, std::nan(""), eps0, cfg.lr0, 0, mon0});
    res.best = params;
    double best_eps = eps0;

    std::int64_t step = 0;
    std::vector<std::size_t> order(n);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        fields::Rng rng = fields::make_rng(fields::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
        }
        std::vector<int> sym(n, 0);
        if (cfg.augment && n > 0) {
            const std::vector<int> allowed = grid_symmetries(train.front().system.grid);
            for (auto& t : sym) {
                t = allowed[rng() % allowed.size()];
            }
        }
        double loss_sum = 0.0;
        int loss_count = 0;
        int skipped = 0;
        int seen = 0;
        double lr = cfg.lr0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const std::size_t start = s * static_cast<std::size_t>(cfg.batch);
            const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch), n - start);
            std::vector<Sample> transformed;
            std::vector<const Sample*> batch;
            if (cfg.augment) {
                transformed.reserve(len);
                for (std::size_t k = 0; k < len; ++k) {
                    transformed.push_back(transform_sample(train[order[start + k]], sym[order[start + k]]));
                }
                batch = pointers(transformed);
            }
            else {
                for (std::size_t k = 0; k < len; ++k) {
                    batch.push_back(&train[order[start + k]]);
                }
            }
            lr = nn::cosine_lr(step, sched);
            ++step;
            params.zero_grad();
            nn::Tape tape;
            nn::Forward f{tape, params, true, true};
            const StepLoss sl = loss(f, batch);
            skipped += sl.skipped;
            seen += sl.valid + sl.skipped;
            if (sl.valid == 0) {
                continue;
            }
            const double value = sl.loss.value()[0];
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "training diverged: loss " << value << " at epoch " << epoch << " step " << s;
                throw TrainingAborted(msg.str());
            }
            tape.backward(sl.loss);
            adam.step(params, lr);
            loss_sum += value;
            ++loss_count;
        }
        if (seen > 0 && static_cast<double>(skipped) / seen > cfg.max_skip_rate) {
            std::ostringstream msg;
            msg << "training aborted at epoch " << epoch << ": " << skipped << " of " << seen
                << " samples had an ill-conditioned reduced matrix (limit rate " << cfg.max_skip_rate << ")";
            throw TrainingAborted(msg.str());
        }
        auto [eps, mon] = eval(params);
        EpochRecord rec{epoch, loss_count > 0 ? loss_sum / loss_count : std::nan(""), eps, lr, skipped, mon};
        res.history.push_back(rec);
        if (eps < best_eps) {
            best_eps = eps;
            res.best = params;
            res.best_epoch = epoch;
        }
        if (hook) {
            hook(rec);
        }
    }
    res.last = std::move(params);
    return res;
}

TrainResult train_basis(nn::ParamStore init, const BasisNetCfg& net, const TrainCfg& cfg,
                        std::span<const Sample> train, std::span<const Sample> test, const EpochHook& hook)
{
    net.validate();
    const std::span<const Sample> monitor = test.first(std::min<std::size_t>(test.size(), 32));
    auto loss = [&net](nn::Forward& f, std::span<const Sample* const> batch) {
        BasisLoss bl = basis_loss(f, net, batch);
        const int valid = bl.galerkin.num_valid();
        return StepLoss{bl.total, valid, static_cast<int>(batch.size()) - valid};
    };
    auto eval = [&](nn::ParamStore& store) {
        const BasisEval ev = evaluate_basis(store, net, test);
        const double mon = monitor.empty() ? 0.0 : evaluate_basis(store, net, monitor).mean_cond;
        return std::pair{ev.eps_test, mon};
    };
    return train_loop(std::move(init), cfg, train, loss, eval, hook);
}

}  // namespace cnnrom::galerkin
