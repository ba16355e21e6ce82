#include "cnnrom/nn/layers.hpp"

#include <cmath>
#include <random>

namespace cnnrom::nn {

namespace {

double kaiming_std(int fan_in, Activation next)
{
    const double gain = (next == Activation::Relu || next == Activation::Softplus) ? 2.0 : 1.0;
    return std::sqrt(gain / fan_in);
}

Tensor normal_tensor(Shape shape, double std, fields::Rng& rng)
{
    Tensor t(std::move(shape));
    std::normal_distribution<double> normal(0.0, std);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = normal(rng);
    }
    return t;
}

}  // namespace

void init_conv(ParamStore& store, const std::string& prefix, int out, int in, int k, fields::Rng& rng,
               Activation next)
{
    store.add(prefix + ".w", normal_tensor(Shape{out, in, k, k}, kaiming_std(in * k * k, next), rng));
    store.add(prefix + ".b", Tensor(Shape{out}));
}

void init_batchnorm(ParamStore& store, const std::string& prefix, int channels)
{
    store.add(prefix + ".gamma", Tensor(Shape{channels}, 1.0));
    store.add(prefix + ".beta", Tensor(Shape{channels}));
    store.add(prefix + ".running_mean", Tensor(Shape{channels}), false);
    store.add(prefix + ".running_var", Tensor(Shape{channels}, 1.0), false);
}

void init_linear(ParamStore& store, const std::string& prefix, int out, int in, fields::Rng& rng, Activation next)
{
    store.add(prefix + ".w", normal_tensor(Shape{out, in}, kaiming_std(in, next), rng));
    store.add(prefix + ".b", Tensor(Shape{out}));
}

Var conv_layer(Forward& f, const std::string& prefix, Var x, int stride)
{
    return conv2d_same(x, f.tape.param(f.store, prefix + ".w", f.track_params),
                       f.tape.param(f.store, prefix + ".b", f.track_params), stride);
}

Var batchnorm_layer(Forward& f, const std::string& prefix, Var x)
{
    BatchNormBuffers buffers{&f.store.value(prefix + ".running_mean"), &f.store.value(prefix + ".running_var")};
    return batchnorm(x, f.tape.param(f.store, prefix + ".gamma", f.track_params),
                     f.tape.param(f.store, prefix + ".beta", f.track_params), buffers, f.train);
}

Var linear_layer(Forward& f, const std::string& prefix, Var x)
{
    return linear(x, f.tape.param(f.store, prefix + ".w", f.track_params),
                  f.tape.param(f.store, prefix + ".b", f.track_params));
}

Var conv_block(Forward& f, const std::string& prefix, Var x, int stride, Activation act)
{
    return activation(batchnorm_layer(f, prefix + ".bn", conv_layer(f, prefix + ".conv", x, stride)), act);
}

}  // namespace cnnrom::nn
