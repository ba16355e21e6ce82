#include "cnnrom/fields/channels.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cnnrom/fields/rng.hpp"

namespace cnnrom::fields {

int window_count(int size, int patch, int stride)
{
    if (stride < 1) {
        throw std::invalid_argument("window_count: stride must be >= 1");
    }
    if (patch < 1 || patch > size) {
        throw std::invalid_argument("window_count: patch larger than image");
    }
    return (size - patch) / stride + 1;
}

std::vector<fem::FieldNodal> extract_patches(const fem::FieldNodal& image, const ChannelPatchCfg& cfg)
{
    const int wy = window_count(static_cast<int>(image.rows()), cfg.patch, cfg.stride);
    const int wx = window_count(static_cast<int>(image.cols()), cfg.patch, cfg.stride);
    std::vector<fem::FieldNodal> plain;
    plain.reserve(static_cast<std::size_t>(wx * wy));
    for (int j = 0; j < wy; ++j) {
        for (int i = 0; i < wx; ++i) {
            plain.emplace_back(image.block(j * cfg.stride, i * cfg.stride, cfg.patch, cfg.patch));
        }
    }
    std::vector<fem::FieldNodal> out = plain;
    if (cfg.hflip) {
        for (const auto& p : plain) {
            out.push_back(flip_horizontal(p));
        }
    }
    if (cfg.rotations) {
        for (int t = 1; t <= 3; ++t) {
            for (const auto& p : plain) {
                out.push_back(rotate90(p, t));
            }
        }
    }
    return out;
}

fem::FieldNodal synth_channel_image(int size, int n_channels, double width, std::uint64_t seed)
{
    if (size < 1 || n_channels < 0 || !(width > 0.0)) {
        throw std::invalid_argument("synth_channel_image: bad size, channel count or width");
    }
    fem::FieldNodal img = fem::FieldNodal::Ones(size, size);
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double slot = static_cast<double>(size) / std::max(n_channels, 1);
    for (int c = 0; c < n_channels; ++c) {
        // One band per horizontal slot keeps overlaps rare.
        const double center = (c + 0.3 + 0.4 * unit(rng)) * slot;
        const double amplitude = (0.1 + 0.25 * unit(rng)) * slot;
        const double wavelength = size * (0.3 + 0.7 * unit(rng));
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        for (int col = 0; col < size; ++col) {
            const double yc = center + amplitude * std::sin(2.0 * std::numbers::pi * (col + 0.5) / wavelength + phase);
            for (int row = 0; row < size; ++row) {
                if (std::abs(row + 0.5 - yc) < 0.5 * width) {
                    img(row, col) = 1000.0;
                }
            }
        }
    }
    return img;
}

fem::FieldNodal rotate90(const fem::FieldNodal& field, int times)
{
    if (field.rows() != field.cols()) {
        throw std::invalid_argument("rotate90: field must be square");
    }
    const Eigen::Index n = field.rows();
    fem::FieldNodal out = field;
    for (int t = 0; t < ((times % 4) + 4) % 4; ++t) {
        fem::FieldNodal next(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                next(i, j) = out(n - 1 - j, i);
            }
        }
        out = std::move(next);
    }
    return out;
}

fem::FieldNodal flip_horizontal(const fem::FieldNodal& field)
{
    return field.rowwise().reverse();
}

}  // namespace cnnrom::fields
