#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnnrom/galerkin/basis_net.hpp"
#include "cnnrom/nn/optim.hpp"

namespace cnnrom::galerkin {

struct TrainCfg {
    int batch = 32;
    int epochs = 100;
    double lr0 = 1e-3;
    double lr_floor = 0.0;
    std::uint64_t seed = 0;
    /// Fraction of rejected samples in one epoch above which training aborts.
    double max_skip_rate = 0.5;
    /// Replace each training sample by a random mesh symmetry of itself per epoch.
    bool augment = false;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double eps_test = 0.0;
    double lr = 0.0;
    int skipped = 0;
    /// Mean cond_F(A_N) over a fixed monitor batch (0 when not tracked).
    double monitor_cond = 0.0;
};

struct TrainResult {
    /// Parameters with the lowest held-out error seen at the end of an epoch.
    nn::ParamStore best;
    nn::ParamStore last;
    int best_epoch = 0;
    /// Entry 0 describes the initial parameters.
    std::vector<EpochRecord> history;
};

class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StepLoss {
    nn::Var loss;
    int valid = 0;
    int skipped = 0;
};

using BatchLossFn = std::function<StepLoss(nn::Forward& f, std::span<const Sample* const> batch)>;
/// Held-out error and monitor value for a parameter set.
using EvalFn = std::function<std::pair<double, double>(nn::ParamStore& store)>;
using EpochHook = std::function<void(const EpochRecord&)>;

/// Minibatch Adam with a cosine learning-rate decay over all steps. Each
/// epoch draws its permutation (and symmetry choices) from
/// derive_seed(cfg.seed, epoch), so runs are bitwise repeatable. A trailing
/// batch of one sample is dropped.
TrainResult train_loop(nn::ParamStore params, const TrainCfg& cfg, std::span<const Sample> train,
                       const BatchLossFn& loss, const EvalFn& eval, const EpochHook& hook = {});

/// Basis-net training on (K, u_h, A_h, F_h) records.
TrainResult train_basis(nn::ParamStore init, const BasisNetCfg& net, const TrainCfg& cfg,
                        std::span<const Sample> train, std::span<const Sample> test, const EpochHook& hook = {});

}  // namespace cnnrom::galerkin
