#include "gredp/rng.hpp"

#include <cmath>
#include <numbers>

namespace gredp {

namespace {

// SplitMix64 finalizer, used to mix (seed, stream index) into a fresh seed.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double RngState::gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngState RngState::derive(std::uint64_t stream_index) const {
    return RngState(mix64(seed_ ^ mix64(stream_index + 1)));
}

}  // namespace gredp
