#include "cnnrom/fields/rng.hpp"

#include <array>

namespace cnnrom::fields {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t state = seed;
    const std::uint64_t base = splitmix64(state);
    state = base ^ (index * 0xd1b54a32d192ed03ULL);
    return splitmix64(state);
}

Rng make_rng(std::uint64_t seed)
{
    std::uint64_t state = seed;
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        const std::uint64_t v = splitmix64(state);
        words[i] = static_cast<std::uint32_t>(v);
        words[i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace cnnrom::fields
