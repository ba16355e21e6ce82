#include "cnnrom/io/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace cnnrom::io {

std::vector<std::uint8_t> pgm_pixels(const fem::FieldNodal& field)
{
    if (!field.allFinite()) {
        throw std::invalid_argument("emit_pgm: field has non-finite entries");
    }
    const Eigen::Index rows = field.rows();
    const Eigen::Index cols = field.cols();
    std::vector<std::uint8_t> px(static_cast<std::size_t>(field.size()), 128);
    if (field.size() == 0) {
        return px;
    }
    const double lo = field.minCoeff();
    const double hi = field.maxCoeff();
    if (hi > lo) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                const double t = (field(rows - 1 - r, c) - lo) / (hi - lo);
                px[static_cast<std::size_t>(r * cols + c)] = static_cast<std::uint8_t>(std::lround(255.0 * t));
            }
        }
    }
    return px;
}

void emit_pgm(const fem::FieldNodal& field, const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> px = pgm_pixels(field);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << "P5\n" << field.cols() << ' ' << field.rows() << "\n255\n";
    os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

}  // namespace cnnrom::io
