#include "cnnrom/nn/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cnnrom::nn {

double cosine_lr(std::int64_t step, const CosineSchedule& schedule)
{
    if (schedule.total_steps < 1 || step < 0 || step > schedule.total_steps) {
        throw std::out_of_range("cosine_lr: step outside [0, total_steps]");
    }
    const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
    return schedule.floor + (schedule.lr0 - schedule.floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ParamStore& store, double lr)
{
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, e] : store.entries()) {
        if (!e.trainable) {
            continue;
        }
        auto it = state_.find(name);
        if (it == state_.end()) {
            it = state_.emplace(name, Moments{Tensor(e.value.shape()), Tensor(e.value.shape())}).first;
        }
        auto m = it->second.m.vec();
        auto v = it->second.v.vec();
        const auto g = e.grad.vec();
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
        e.value.vec().array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }
}

}  // namespace cnnrom::nn
