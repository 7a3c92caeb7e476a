#ifndef GREDP_RNG_HPP
#define GREDP_RNG_HPP

#include <cstdint>
#include <random>

namespace gredp {

// Deterministic random stream: the state is fully described by (seed,
// position), so a stream can be replayed or resumed exactly. Gaussian
// draws use Box-Muller with a fixed two-draws-per-sample layout instead
// of std::normal_distribution, whose internal caching would make the
// position bookkeeping lie.
class RngState {
public:
    explicit RngState(std::uint64_t seed, std::uint64_t position = 0)
        : seed_(seed), position_(0), engine_(seed) {
        engine_.discard(position);
        position_ = position;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

    // Uniform on the open interval (0, 1).
    double uniform() {
        const std::uint64_t bits = next();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal draw; consumes exactly two engine words.
    double gaussian();

    // Independent stream for a (sample, trial, ...) index. Streams derived
    // from distinct indices never share engine state.
    RngState derive(std::uint64_t stream_index) const;

private:
    std::uint64_t next() {
        ++position_;
        return engine_();
    }

    std::uint64_t seed_;
    std::uint64_t position_;
    std::mt19937_64 engine_;
};

}  // namespace gredp

#endif  // GREDP_RNG_HPP
