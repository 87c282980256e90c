#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace freeprob::rng {

/// Deterministic generator family keyed by (seed, stream). Distinct streams
/// from the same seed are decorrelated by seed_seq mixing, so parallel or
/// per-trial substreams can be derived without coordination: substream ids
/// are just stream values. Identical (seed, stream) gives an identical
/// sequence on every platform we build on; the normal variates are produced
/// by an explicit Box-Muller transform rather than std::normal_distribution,
/// whose output is implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        // seed_seq consumes 32-bit values; split the 64-bit inputs so the
        // high words still influence the state
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32),
            std::uint32_t{0x9E3779B9u},
            std::uint32_t{0x7F4A7C15u},
        };
        gen_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Fresh generator for substream `id`, independent of this stream's
    /// position. Trial k of a Monte-Carlo run uses substream k.
    RngStream substream(std::uint64_t id) const { return RngStream(seed_, id); }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; generates pairs and caches the spare.
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Complex Gaussian with E|z|^2 = variance, independent real and
    /// imaginary parts.
    std::complex<double> complex_gauss(double variance = 1.0) {
        const double s = std::sqrt(variance * 0.5);
        const double re = s * gauss();
        const double im = s * gauss();
        return {re, im};
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace freeprob::rng
