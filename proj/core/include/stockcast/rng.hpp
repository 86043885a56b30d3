#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stockcast {

/// Deterministic random source used everywhere the library needs randomness.
///
/// std::mt19937_64 has a standard-pinned output sequence, and the distribution
/// transforms below are hand-rolled, so a given seed produces the same stream
/// on every platform and standard library. Do not swap these for
/// std::uniform_real_distribution and friends: their output is
/// implementation-defined and would break golden-file tests.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the sine branch is discarded so each
    /// call consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n). Modulo bias is negligible for our n.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// Independent stream derived from this RNG's seed and a salt.
    Rng fork(std::uint64_t salt) const {
        std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (salt + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace stockcast
