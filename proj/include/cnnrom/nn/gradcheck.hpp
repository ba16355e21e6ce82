#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cnnrom/nn/tape.hpp"

namespace cnnrom::nn {

/// Evaluates a scalar loss at the store's current values. When `with_grad`
/// is set it must also add d(loss)/d(param) into the store's grad buffers.
using LossFn = std::function<double(ParamStore& store, bool with_grad)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    std::int64_t checked = 0;
};

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

/// Central differences on trainable coordinates against the analytic gradient.
/// `max_per_param` > 0 checks that many randomly chosen coordinates per tensor.
/// Coordinates whose analytic and numeric derivatives are both below
/// `floor_ratio` times the largest analytic derivative are compared in
/// absolute terms against that floor.
GradCheckResult grad_check(const LossFn& loss, ParamStore& store, double eps = 1e-5, std::int64_t max_per_param = 0,
                           std::uint64_t seed = 0, double floor_ratio = 1e-4);

/// Directional derivatives along random unit directions in parameter space.
GradCheckResult grad_check_directions(const LossFn& loss, ParamStore& store, int directions, double eps = 1e-5,
                                      std::uint64_t seed = 0);

}  // namespace cnnrom::nn
