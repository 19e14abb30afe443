#ifndef MCFL_RNG_HPP
#define MCFL_RNG_HPP

// Deterministic, platform-identical sampling. All distributions are built from
// mt19937_64 raw output through explicit inverse-transform / Box-Muller
// constructions, never through std:: distribution objects (their algorithms
// are implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>

namespace mcfl {

/// splitmix64 finalizer; used to derive independent per-identity seeds from a
/// master seed so that adding identities never perturbs existing streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in (0, 1), 53-bit resolution, never exactly 0.
    double uniform01() {
        const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (both values used, cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Exponential with the given rate, by inverse transform.
    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    /// Erlang(shape, rate) as a sum of shape exponentials.
    double erlang(int shape, double rate) {
        double s = 0.0;
        for (int i = 0; i < shape; ++i) s += exponential(rate);
        return s;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mcfl

#endif
