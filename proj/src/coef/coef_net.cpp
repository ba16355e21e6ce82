#include "cnnrom/coef/coef_net.hpp"

#include <stdexcept>
#include <string>

namespace cnnrom::coef {

namespace {

std::string block_name(std::size_t i)
{
    return "coef.block" + std::to_string(i);
}

std::string fc_name(std::size_t i)
{
    return "coef.fc" + std::to_string(i);
}

}  // namespace

void CoefNetCfg::validate() const
{
    if (N < 1) {
        throw std::invalid_argument("CoefNetCfg: N must be >= 1");
    }
    if (kernel < 1 || kernel % 2 == 0) {
        throw std::invalid_argument("CoefNetCfg: kernel must be odd");
    }
    if (channels.size() != strides.size()) {
        throw std::invalid_argument("CoefNetCfg: one stride per conv block");
    }
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i] < 1 || strides[i] < 1) {
            throw std::invalid_argument("CoefNetCfg: channel widths and strides must be >= 1");
        }
    }
    for (const int w : fc) {
        if (w < 1) {
            throw std::invalid_argument("CoefNetCfg: FC widths must be >= 1");
        }
    }
    if (free_nx < 1 || free_ny < 1) {
        throw std::invalid_argument("CoefNetCfg: empty input resolution");
    }
}

std::pair<int, int> CoefNetCfg::feature_size() const
{
    int h = free_ny;
    int w = free_nx;
    for (const int s : strides) {
        h = (h + s - 1) / s;
        w = (w + s - 1) / s;
    }
    return {h, w};
}

void init_coef_net(nn::ParamStore& store, const CoefNetCfg& cfg, std::uint64_t seed)
{
    cfg.validate();
    fields::Rng rng = fields::make_rng(seed);
    int in = 1;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        nn::init_conv(store, block_name(i) + ".conv", cfg.channels[i], in, cfg.kernel, rng, cfg.activation);
        nn::init_batchnorm(store, block_name(i) + ".bn", cfg.channels[i]);
        in = cfg.channels[i];
    }
    const auto [h, w] = cfg.feature_size();
    int width = in * h * w;
    for (std::size_t i = 0; i < cfg.fc.size(); ++i) {
        nn::init_linear(store, fc_name(i), cfg.fc[i], width, rng, cfg.activation);
        width = cfg.fc[i];
    }
    nn::init_linear(store, "coef.out", cfg.N, width, rng, nn::Activation::Identity);
}

nn::Var coef_forward(nn::Forward& f, const CoefNetCfg& cfg, nn::Var K)
{
    const nn::Shape& s = K.shape();
    if (s.size() != 4 || s[1] != 1 || s[2] != cfg.free_ny || s[3] != cfg.free_nx) {
        throw std::invalid_argument("coef_forward: expected input [B, 1, " + std::to_string(cfg.free_ny) + ", " +
                                    std::to_string(cfg.free_nx) + "], got " + nn::shape_string(s));
    }
    nn::Var x = cfg.log_input ? nn::log(K) : K;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        x = nn::conv_block(f, block_name(i), x, cfg.strides[i], cfg.activation);
    }
    x = nn::flatten(x);
    for (std::size_t i = 0; i < cfg.fc.size(); ++i) {
        x = nn::activation(nn::linear_layer(f, fc_name(i), x), cfg.activation);
    }
    return nn::linear_layer(f, "coef.out", x);
}

}  // namespace cnnrom::coef
