#include "cnnrom/fields/binomial.hpp"

#include <random>
#include <stdexcept>
#include <vector>

#include "cnnrom/fields/rng.hpp"

namespace cnnrom::fields {

void BinomialProcessCfg::validate() const
{
    if (n < 0) {
        throw std::invalid_argument("binomial field: n must be >= 0");
    }
    if (!(r > 0.0)) {
        throw std::invalid_argument("binomial field: r must be positive");
    }
    if (!(kappa0 > 0.0) || !(kappa1 > 0.0)) {
        throw std::invalid_argument("binomial field: conductivities must be positive");
    }
}

fem::FieldNodal binomial_field_from_centers(const BinomialProcessCfg& cfg, const fem::Grid2D& grid,
                                            std::span<const std::array<double, 2>> centers)
{
    cfg.validate();
    fem::FieldNodal K = fem::FieldNodal::Constant(grid.ny(), grid.nx(), cfg.kappa0);
    // Nodes exactly at distance r count as inside despite rounding in the coordinates.
    const double r2 = cfg.r * cfg.r * (1.0 + 1e-12);
    for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
            for (const auto& c : centers) {
                const double dx = grid.x(ix) - c[0];
                const double dy = grid.y(iy) - c[1];
                if (dx * dx + dy * dy <= r2) {
                    K(iy, ix) = cfg.kappa1;
                    break;
                }
            }
        }
    }
    return K;
}

fem::FieldNodal sample_binomial_field(const BinomialProcessCfg& cfg, const fem::Grid2D& grid, std::uint64_t seed)
{
    cfg.validate();
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 2>> centers(static_cast<std::size_t>(cfg.n));
    for (auto& c : centers) {
        c[0] = unit(rng);
        c[1] = unit(rng);
    }
    return binomial_field_from_centers(cfg, grid, centers);
}

}  // namespace cnnrom::fields
