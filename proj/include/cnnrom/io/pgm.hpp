#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cnnrom/fem/grid.hpp"

namespace cnnrom::io {

/// Min-max normalized 8-bit pixels, first image row = largest y. A constant
/// field maps to 128. Throws std::invalid_argument on non-finite entries.
std::vector<std::uint8_t> pgm_pixels(const fem::FieldNodal& field);

/// Binary P5 greyscale image of a nodal field.
void emit_pgm(const fem::FieldNodal& field, const std::filesystem::path& path);

}  // namespace cnnrom::io
