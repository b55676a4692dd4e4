#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sica/model.hpp"

namespace sica {

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream key: two mix64 rounds over (seed, stream_id) with golden-ratio
// spacing, so distinct stream ids decorrelate even for consecutive seeds.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix64(mix64(seed) + stream_id * 0x9e3779b97f4a7c15ULL);
}

}  // namespace detail

/// Indices into LevyMeasure.marks for the jump events of one time step.
struct JumpBatch {
    std::vector<std::uint32_t> mark_indices;
    std::size_t count() const { return mark_indices.size(); }
};

/**
 * @brief Deterministic, seedable random source. One stream per simulation
 *        path; identical (seed, stream_id) replays the identical sequence.
 *
 * Engine: std::mt19937_64 seeded with a splitmix64-mixed key of
 * (seed, stream_id). The engine's output sequence is fully specified by the
 * standard, so replays are bit-exact on the same build. Samplers are
 * implemented here (not std distributions) to keep the draw sequence under
 * our control: uniforms take the top 53 bits, gaussians use Box-Muller
 * (two uniforms per draw), Poisson uses Knuth's product method below mean 10
 * and Hormann's PTRS transformed rejection at or above it.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), engine_(detail::stream_key(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe under log().
    double uniform01_open_low() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// One Normal(0, dt) draw by Box-Muller; consumes two uniforms.
    double gaussian(double dt) {
        if (!(dt > 0) || !std::isfinite(dt))
            throw std::domain_error("gaussian increment: dt must be finite and > 0");
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1) * dt) * std::cos(two_pi * u2);
    }

    /// Poisson(rate) draw. rate == 0 returns 0 without consuming draws.
    std::uint64_t poisson(double rate) {
        if (!(rate >= 0) || !std::isfinite(rate))
            throw std::domain_error("poisson count: rate must be finite and >= 0");
        if (rate == 0) return 0;
        if (rate < 10.0) return poisson_knuth(rate);
        return poisson_ptrs(rate);
    }

    /// Categorical mark index with probabilities rate_k / total_rate.
    std::uint32_t sample_mark_index(const LevyMeasure& levy) {
        if (levy.empty())
            throw std::domain_error("sample_mark_index: empty levy measure");
        const double target = uniform01() * levy.total_rate();
        double acc = 0;
        const std::size_t last = levy.marks.size() - 1;
        for (std::size_t k = 0; k < last; ++k) {
            acc += levy.marks[k].rate;
            if (target < acc) return static_cast<std::uint32_t>(k);
        }
        return static_cast<std::uint32_t>(last);
    }

    /// Human-readable generator identification for output metadata.
    static std::string describe() {
        return "mt19937_64(splitmix64(seed,stream)); uniform=top53bits; "
               "gaussian=box-muller; poisson=knuth<10|ptrs>=10";
    }

private:
    std::uint64_t poisson_knuth(double rate) {
        const double limit = std::exp(-rate);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01_open_low();
        } while (p > limit);
        return k - 1;
    }

    // Hormann (1993) PTRS transformed rejection, exact for mean >= 10.
    std::uint64_t poisson_ptrs(double rate) {
        const double slam = std::sqrt(rate);
        const double loglam = std::log(rate);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform01() - 0.5;
            const double v = uniform01_open_low();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (kf < 0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * loglam - rate - std::lgamma(kf + 1.0))
                return static_cast<std::uint64_t>(kf);
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

/// Normal(0, dt) increment of the driving Brownian motion.
inline double gaussian_increment(RngStream& rng, double dt) { return rng.gaussian(dt); }

/// Poisson(rate_dt) event count for one time step.
inline std::uint64_t poisson_count(RngStream& rng, double rate_dt) { return rng.poisson(rate_dt); }

/// Draw `count` i.i.d. categorical mark indices from the measure.
inline JumpBatch sample_marks(RngStream& rng, const LevyMeasure& levy, std::size_t count) {
    JumpBatch batch;
    if (count == 0) return batch;
    if (levy.empty())
        throw std::domain_error("sample_marks: count > 0 with empty levy measure");
    batch.mark_indices.reserve(count);
    for (std::size_t n = 0; n < count; ++n)
        batch.mark_indices.push_back(rng.sample_mark_index(levy));
    return batch;
}

}  // namespace sica
