#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cnnrom/nn/tape.hpp"

namespace cnnrom::nn {

struct CosineSchedule {
    double lr0 = 1e-4;
    std::int64_t total_steps = 1;
    double floor = 0.0;
};

/// floor + (lr0 - floor) (1 + cos(pi step / total)) / 2.
/// Throws std::out_of_range unless 0 <= step <= total_steps.
double cosine_lr(std::int64_t step, const CosineSchedule& schedule);

/// Bias-corrected Adam over the trainable entries of a ParamStore.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// One update with the store's current gradients.
    void step(ParamStore& store, double lr);
    std::int64_t steps() const { return t_; }

private:
    struct Moments {
        Tensor m;
        Tensor v;
    };
    double beta1_;
    double beta2_;
    double eps_;
    std::int64_t t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace cnnrom::nn
