#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latmul {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Input signals exceed the representable frequency band.
struct band_overflow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operands live on different sampling grids.
struct lattice_mismatch_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform grid of N samples on the window [-L/2, L/2) together with the
/// dual frequency lattice xi_k = k/L, k = -N/2 .. N/2-1.  N must be a power
/// of two.  Spacing h = L/N in space, 1/L in frequency.
struct FrequencyLattice {
    int samples = 0;
    double length = 0.0;

    FrequencyLattice() = default;
    FrequencyLattice(int n, double window_length)
        : samples(n), length(window_length) {
        if (n < 4 || (n & (n - 1)) != 0)
            throw std::invalid_argument("FrequencyLattice: samples must be a power of two >= 4");
        if (!(window_length > 0.0) || !std::isfinite(window_length))
            throw std::invalid_argument("FrequencyLattice: length must be positive and finite");
    }

    double spacing() const { return length / samples; }
    double freq_step() const { return 1.0 / length; }
    int min_index() const { return -samples / 2; }
    int max_index() const { return samples / 2 - 1; }
    double xi(int k) const { return static_cast<double>(k) / length; }
    double x(int j) const { return -0.5 * length + static_cast<double>(j) * spacing(); }

    /// Largest per-input frequency admitted by an arity-n operator so that
    /// output frequencies stay strictly inside the representable band.
    double band_limit(int arity = 1) const {
        return 0.45 * static_cast<double>(samples) / (static_cast<double>(arity) * length);
    }

    bool operator==(const FrequencyLattice& o) const {
        return samples == o.samples && length == o.length;
    }
    bool operator!=(const FrequencyLattice& o) const { return !(*this == o); }
};

namespace detail {

/// In-place radix-2 FFT.  inverse=false computes sum_j a_j e^{-2 pi i jk/n},
/// inverse=true the conjugate kernel; neither applies a 1/n factor.
inline void fft_radix2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    // One root table at the finest level keeps every twiddle a direct polar
    // evaluation; levels index it with a stride, so no error accumulates.
    std::vector<cplx> roots(n / 2);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n / 2; ++k)
        roots[k] = std::polar(1.0, sign * 2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx w = roots[k * stride];
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

}  // namespace detail

/// Band-limited signal sampled on a FrequencyLattice.
///
/// Two spectral normalizations coexist and both are exposed:
///  - coefficient(k): Fourier-series coefficient, c_k = (1/N) sum_j f(x_j)
///    e^{-2 pi i xi_k x_j}.  The pure frequency e^{2 pi i xi_k x} has
///    coefficient exactly 1, and products of signals correspond to
///    convolutions of coefficients with no window factors.
///  - density(k) = L * c_k: the value a continuum Fourier transform takes at
///    xi_k.  Parseval holds pairing the spatial measure h with the frequency
///    measure 1/L: h sum |f|^2 = (1/L) sum |density|^2.
class SampledSignal {
  public:
    SampledSignal(FrequencyLattice lat, std::vector<cplx> samples)
        : lat_(lat), samples_(std::move(samples)) {
        if (static_cast<int>(samples_.size()) != lat_.samples)
            throw lattice_mismatch_error("SampledSignal: sample count does not match lattice");
    }

    /// Coefficients ordered by frequency index k = -N/2 .. N/2-1.
    static SampledSignal from_coefficients(FrequencyLattice lat, std::vector<cplx> coeffs) {
        if (static_cast<int>(coeffs.size()) != lat.samples)
            throw lattice_mismatch_error("from_coefficients: coefficient count does not match lattice");
        const int n = lat.samples;
        std::vector<cplx> d(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int k = i - n / 2;
            const int m = (i + n / 2) % n;  // k mod n, nonnegative
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            d[static_cast<std::size_t>(m)] = sign * coeffs[static_cast<std::size_t>(i)];
        }
        detail::fft_radix2(d, true);
        SampledSignal out(lat, std::move(d));
        out.coeffs_ = std::move(coeffs);
        return out;
    }

    const FrequencyLattice& lattice() const { return lat_; }
    const std::vector<cplx>& samples() const { return samples_; }

    /// Lazily computed, cached coefficient spectrum.
    const std::vector<cplx>& coefficients() const {
        if (!coeffs_) {
            const int n = lat_.samples;
            std::vector<cplx> d = samples_;
            detail::fft_radix2(d, false);
            std::vector<cplx> c(static_cast<std::size_t>(n));
            const double inv_n = 1.0 / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                const int k = i - n / 2;
                const int m = (i + n / 2) % n;
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                c[static_cast<std::size_t>(i)] = sign * inv_n * d[static_cast<std::size_t>(m)];
            }
            coeffs_ = std::move(c);
        }
        return *coeffs_;
    }

    cplx coefficient(int k) const {
        if (k < lat_.min_index() || k > lat_.max_index()) return {0.0, 0.0};
        return coefficients()[static_cast<std::size_t>(k + lat_.samples / 2)];
    }

    cplx density(int k) const { return lat_.length * coefficient(k); }

    std::vector<cplx> density_values() const {
        std::vector<cplx> d = coefficients();
        for (auto& v : d) v *= lat_.length;
        return d;
    }

    /// Largest |density| strictly beyond |xi| > bound.
    double band_mass_beyond(double bound) const {
        double worst = 0.0;
        for (int k = lat_.min_index(); k <= lat_.max_index(); ++k)
            if (std::abs(lat_.xi(k)) > bound)
                worst = std::max(worst, std::abs(density(k)));
        return worst;
    }

  private:
    FrequencyLattice lat_;
    std::vector<cplx> samples_;
    mutable std::optional<std::vector<cplx>> coeffs_;
};

/// Coefficient spectrum of a signal (forward transform, cached thereafter).
inline std::vector<cplx> forward_fourier(const SampledSignal& f) { return f.coefficients(); }

/// (h * sum |f(x_j)|^p)^{1/p}; p = infinity gives the max.  Quasinorms
/// 0 < p < 1 use the same formula.
inline double lp_norm(const SampledSignal& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : f.samples()) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p > 0.0))
        throw std::invalid_argument("lp_norm: p must be positive or infinity");
    const double h = f.lattice().spacing();
    double acc = 0.0;
    for (const auto& v : f.samples()) acc += std::pow(std::abs(v), p);
    return std::pow(h * acc, 1.0 / p);
}

}  // namespace latmul
