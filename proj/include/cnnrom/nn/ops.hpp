#pragma once

#include <string>
#include <vector>

#include "cnnrom/nn/tape.hpp"

namespace cnnrom::nn {

enum class Activation { Relu, Softplus, Tanh, Identity };

std::string to_string(Activation a);
/// "relu", "softplus", "tanh" or "identity"; throws std::invalid_argument otherwise.
Activation activation_from_string(const std::string& name);

// Elementwise, same shapes unless stated.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);
Var softplus(Var a);
Var tanh(Var a);
Var activation(Var a, Activation kind);
/// Values clipped to [lo, hi]; the gradient is zero where clipping is active.
Var clamp(Var a, double lo, double hi);

/// Sum of all elements, shape {1}.
Var sum(Var a);
Var mean(Var a);
/// Per-row sums of a [B, F] tensor, shape {B}.
Var row_sum(Var a);
/// Elementwise product with a constant mask/weight of the same size.
Var mul_const(Var a, const Tensor& w);

Var reshape(Var a, Shape shape);
/// [B, ...] -> [B, prod(...)].
Var flatten(Var a);
/// Columns [start, start+len) of a [B, F] tensor.
Var slice_cols(Var a, std::int64_t start, std::int64_t len);
/// Selected columns of a [B, F] tensor.
Var gather_cols(Var a, const std::vector<std::int64_t>& cols);

/// [B, F] -> [B * times, F]; row b * times + r copies row b.
Var repeat_rows(Var a, std::int64_t times);

/// x [B, in], W [out, in], b [out] -> x W^T + b.
Var linear(Var x, Var W, Var b);

/// Zero-padded convolution, x [B, C, H, W], w [O, C, k, k] with k odd, b [O].
/// Output spatial size is ceil(H / stride) x ceil(W / stride).
/// Throws std::invalid_argument on shape mismatch or even kernels.
Var conv2d_same(Var x, Var w, Var b, int stride = 1);

/// Running statistics updated in train mode (biased variance).
struct BatchNormBuffers {
    Tensor* running_mean = nullptr;
    Tensor* running_var = nullptr;
};

/// Per-channel normalization of x [B, C, H, W] (or [B, C]) with affine gamma, beta [C].
/// Train mode uses batch statistics and updates the buffers with
/// running = momentum * running + (1 - momentum) * batch; eval mode uses the buffers.
/// Throws std::invalid_argument in train mode when B < 2.
Var batchnorm(Var x, Var gamma, Var beta, BatchNormBuffers buffers, bool train, double momentum = 0.9,
              double eps = 1e-5);

/// P [B, N, H, W] and c [B, N] -> [B, H*W] with row b = sum_n c[b,n] P[b,n,:,:].
Var combine_channels(Var P, Var c);

}  // namespace cnnrom::nn
