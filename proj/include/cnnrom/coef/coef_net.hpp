#pragma once

#include <vector>

#include "cnnrom/nn/layers.hpp"

namespace cnnrom::coef {

struct CoefNetCfg {
    int free_nx = 15;
    int free_ny = 15;
    std::vector<int> channels{8, 8, 16, 16, 32, 32};
    std::vector<int> strides{1, 2, 1, 2, 1, 2};
    int kernel = 7;
    std::vector<int> fc{300, 300};
    int N = 5;
    nn::Activation activation = nn::Activation::Relu;
    bool log_input = true;

    void validate() const;
    /// Spatial size after the conv stack (ceil division per stride-2 block).
    std::pair<int, int> feature_size() const;
};

/// Creates every parameter under the prefix "coef.".
void init_coef_net(nn::ParamStore& store, const CoefNetCfg& cfg, std::uint64_t seed);

/// K at the free nodes [B, 1, ny, nx] -> coefficients [B, N].
nn::Var coef_forward(nn::Forward& f, const CoefNetCfg& cfg, nn::Var K);

}  // namespace cnnrom::coef
