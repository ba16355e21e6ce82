#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "cnnrom/fem/grid.hpp"

namespace cnnrom::fields {

/// Two-valued conductivity with `n` disc inclusions of radius `r`.
struct BinomialProcessCfg {
    int n = 5;
    double r = 0.05;
    double kappa0 = 1.0;
    double kappa1 = 1000.0;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Field with kappa1 at nodes within distance r of any center, kappa0 elsewhere.
fem::FieldNodal binomial_field_from_centers(const BinomialProcessCfg& cfg, const fem::Grid2D& grid,
                                            std::span<const std::array<double, 2>> centers);

/// Draws cfg.n centers uniformly on the unit square from `seed` and rasterizes them.
fem::FieldNodal sample_binomial_field(const BinomialProcessCfg& cfg, const fem::Grid2D& grid, std::uint64_t seed);

}  // namespace cnnrom::fields
