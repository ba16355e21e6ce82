#pragma once

#include <cstdint>
#include <vector>

#include "cnnrom/galerkin/basis_net.hpp"
#include "cnnrom/nn/gradcheck.hpp"

namespace cnnrom::galerkin {

/// Tiny end-to-end configuration: conv -> BN -> act -> 1x1 conv -> Galerkin
/// activation + lambda_G cond_F^2 on Darcy systems with log-normal K.
struct GateCfg {
    int nodes = 5;
    int N = 2;
    int channels = 4;
    int kernel = 3;
    int batch = 4;
    double lambda_G = 1e-3;
    nn::Activation activation = nn::Activation::Relu;
    double eps = 1e-5;
    std::uint64_t seed = 0;
};

/// Full-loss gradient of every trainable parameter against central differences.
nn::GradCheckResult basis_gradient_gate(const GateCfg& cfg);

}  // namespace cnnrom::galerkin
