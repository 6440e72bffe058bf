#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace cupid {

// Counter-based deterministic PRNG.
//
// Output word i is the splitmix64 finalizer applied to key + (i+1) * GAMMA,
// where GAMMA is the 64-bit golden-ratio constant.  The generator therefore
// has no hidden state beyond (key, counter) and the stream can be reproduced
// in any language from this description.  Sub-streams are derived by mixing a
// tag into the key (see derive()), so data generation, weight init and batch
// shuffling never share a stream.
//
// Gaussians come from Box-Muller on consecutive uniforms; the second value of
// each pair is cached, so draw order is part of the contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix64(seed)) {}

    // Independent stream keyed by (this stream's seed, tag).
    Rng derive(std::uint64_t tag) const {
        return Rng(mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
    }

    std::uint64_t next_u64() {
        counter_ += GAMMA;
        return mix64(key_ + counter_);
    }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller; one pair of uniforms yields two values.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // 1 - uniform() is in (0, 1], keeping the log finite.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double stddev) {
        return mean + stddev * gaussian();
    }

    // Uniform integer in [0, n); n must be nonzero.  Multiply-shift keeps the
    // mapping exact across platforms (bias < n / 2^64, irrelevant here).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Fisher-Yates shuffle, back to front.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ULL;
    static constexpr double PI = 3.14159265358979323846;

    // splitmix64 finalizer (Steele et al.), a bijection on 64-bit words.
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cupid
