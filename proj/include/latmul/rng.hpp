#pragma once

#include <cstdint>
#include <random>

#include "latmul/grid.hpp"

namespace latmul {

/// Deterministic random source.  Raw mt19937_64 words are mapped to doubles
/// by a fixed bit manipulation, never through std distributions, so the same
/// seed yields the same stream on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t word() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] by rejection (unbiased).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
        std::uint64_t w;
        do {
            w = eng_();
        } while (w >= limit);
        return lo + static_cast<std::int64_t>(w % span);
    }

    /// Complex with modulus in [1/2, 1) and uniform phase: generic magnitude,
    /// never degenerately small.
    cplx coefficient() {
        const double r = 0.5 + 0.5 * uniform();
        const double th = 2.0 * pi * uniform();
        return std::polar(r, th);
    }

  private:
    std::mt19937_64 eng_;
};

/// Random signal whose density spectrum fills |xi| <= band_bound and
/// vanishes elsewhere.
inline SampledSignal random_band_signal(const FrequencyLattice& lat, double band_bound, Rng& rng) {
    std::vector<cplx> coeffs(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    for (int k = lat.min_index(); k <= lat.max_index(); ++k)
        if (std::abs(lat.xi(k)) <= band_bound)
            coeffs[static_cast<std::size_t>(k + lat.samples / 2)] = rng.coefficient() / lat.length;
    return SampledSignal::from_coefficients(lat, std::move(coeffs));
}

}  // namespace latmul
