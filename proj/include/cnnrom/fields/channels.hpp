#pragma once

#include <cstdint>
#include <vector>

#include "cnnrom/fem/grid.hpp"

namespace cnnrom::fields {

struct ChannelPatchCfg {
    int patch = 64;
    int stride = 16;
    bool hflip = false;
    /// Append the three clockwise quarter turns of every window.
    bool rotations = false;
};

/// Row-major sliding windows of `image` (top-left corners stepping by stride
/// along columns, then rows). Augmented copies follow the plain windows:
/// all horizontal flips, then all quarter turns by 1, 2 and 3.
/// Throws std::invalid_argument if the patch does not fit or stride < 1.
std::vector<fem::FieldNodal> extract_patches(const fem::FieldNodal& image, const ChannelPatchCfg& cfg);

/// Number of windows along one axis of length `size`.
int window_count(int size, int patch, int stride);

/// Binary size x size image: sinuous horizontal bands of value 1000 about
/// `width` pixels thick on a background of 1.
fem::FieldNodal synth_channel_image(int size, int n_channels, double width, std::uint64_t seed);

/// Clockwise quarter turns, `times` taken mod 4 (negative allowed).
/// Throws std::invalid_argument for a non-square field.
fem::FieldNodal rotate90(const fem::FieldNodal& field, int times);

/// Mirror left to right.
fem::FieldNodal flip_horizontal(const fem::FieldNodal& field);

}  // namespace cnnrom::fields
