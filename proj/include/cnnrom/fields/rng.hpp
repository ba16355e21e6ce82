#pragma once

#include <cstdint>
#include <random>

namespace cnnrom::fields {

using Rng = std::mt19937_64;

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Independent stream seed for item `index` of a run seeded with `seed`.
/// Lets per-sample work be scheduled in any order without changing results.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Generator seeded through splitmix so nearby seeds give unrelated streams.
Rng make_rng(std::uint64_t seed);

}  // namespace cnnrom::fields
