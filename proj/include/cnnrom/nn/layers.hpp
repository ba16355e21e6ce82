#pragma once

#include <string>

#include "cnnrom/fields/rng.hpp"
#include "cnnrom/nn/ops.hpp"

namespace cnnrom::nn {

/// Everything a network forward pass needs besides its input.
struct Forward {
    Tape& tape;
    ParamStore& store;
    /// Batch statistics (and running-stat updates) instead of running statistics.
    bool train = false;
    /// Record gradients for parameters; false freezes the network while still
    /// propagating gradients to its input.
    bool track_params = true;
};

/// Kaiming-normal kernel `prefix.w` [out, in, k, k] and zero bias `prefix.b`.
void init_conv(ParamStore& store, const std::string& prefix, int out, int in, int k, fields::Rng& rng,
               Activation next);
/// gamma = 1, beta = 0, running mean 0 and variance 1 (buffers).
void init_batchnorm(ParamStore& store, const std::string& prefix, int channels);
/// Kaiming-normal `prefix.w` [out, in] and zero bias `prefix.b`.
void init_linear(ParamStore& store, const std::string& prefix, int out, int in, fields::Rng& rng, Activation next);

Var conv_layer(Forward& f, const std::string& prefix, Var x, int stride = 1);
Var batchnorm_layer(Forward& f, const std::string& prefix, Var x);
Var linear_layer(Forward& f, const std::string& prefix, Var x);

/// Configured conv -> batch norm -> activation block.
Var conv_block(Forward& f, const std::string& prefix, Var x, int stride, Activation act);

}  // namespace cnnrom::nn
