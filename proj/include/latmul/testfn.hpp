#pragma once

#include "latmul/grid.hpp"

namespace latmul {

/// Parametric family of band-limited probe signals.  Frequency-side kinds
/// fill the density spectrum directly (exact lattice restriction); the chirp
/// is sampled in space and checked against the band bound afterwards.
struct TestFunctionSpec {
    enum class Kind {
        indicator_ft,          // density 1 on lattice points of [a, b]
        smooth_bump_ft,        // density amplitude * bump((xi - center)/width)
        modulated_bump,        // same profile, intended with center != 0
        delta_frequency,       // single coefficient 1 at xi = frequency
        gaussian_chirp,        // exp(-pi (x/width)^2) * exp(i pi rate x^2)
        dilated_indicator_ft,  // density 1 on lattice points of [a/s, b/s]
    };

    Kind kind = Kind::indicator_ft;
    double a = -1.0;          // indicator endpoints
    double b = 1.0;
    double center = 0.0;      // bump center / chirp modulation frequency
    double width = 1.0;       // bump width / chirp envelope width
    double amplitude = 1.0;
    double frequency = 0.0;   // delta_frequency location (a lattice point)
    double dilation = 1.0;    // dilated_indicator_ft scale s
    double chirp_rate = 0.0;  // quadratic phase rate

    static TestFunctionSpec indicator(double a, double b, double amplitude = 1.0) {
        TestFunctionSpec s;
        s.kind = Kind::indicator_ft;
        s.a = a;
        s.b = b;
        s.amplitude = amplitude;
        return s;
    }
    static TestFunctionSpec bump(double center, double width, double amplitude = 1.0) {
        TestFunctionSpec s;
        s.kind = Kind::smooth_bump_ft;
        s.center = center;
        s.width = width;
        s.amplitude = amplitude;
        return s;
    }
    static TestFunctionSpec modulated(double center, double width, double amplitude = 1.0) {
        TestFunctionSpec s = bump(center, width, amplitude);
        s.kind = Kind::modulated_bump;
        return s;
    }
    static TestFunctionSpec delta(double frequency, double amplitude = 1.0) {
        TestFunctionSpec s;
        s.kind = Kind::delta_frequency;
        s.frequency = frequency;
        s.amplitude = amplitude;
        return s;
    }
    static TestFunctionSpec chirp(double width, double rate, double center = 0.0,
                                  double amplitude = 1.0) {
        TestFunctionSpec s;
        s.kind = Kind::gaussian_chirp;
        s.width = width;
        s.chirp_rate = rate;
        s.center = center;
        s.amplitude = amplitude;
        return s;
    }
    static TestFunctionSpec dilated_indicator(double scale, double a = -1.0, double b = 1.0,
                                              double amplitude = 1.0) {
        TestFunctionSpec s;
        s.kind = Kind::dilated_indicator_ft;
        s.dilation = scale;
        s.a = a;
        s.b = b;
        s.amplitude = amplitude;
        return s;
    }
};

namespace detail {

/// Smooth bump on (-1, 1), value 1 at the origin, identically 0 outside.
inline double unit_bump(double t) {
    const double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

}  // namespace detail

inline SampledSignal make_test_function(const FrequencyLattice& lat, const TestFunctionSpec& spec) {
    using Kind = TestFunctionSpec::Kind;
    const int n = lat.samples;
    const double band = lat.band_limit(1);

    auto from_density = [&](auto&& density_at) {
        std::vector<cplx> coeffs(static_cast<std::size_t>(n), cplx{0.0, 0.0});
        for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
            const cplx d = density_at(lat.xi(k));
            if (std::abs(d) > 1e-10 && std::abs(lat.xi(k)) > band)
                throw band_overflow_error("make_test_function: spectrum exceeds 0.45 N/L band");
            coeffs[static_cast<std::size_t>(k + n / 2)] = d / lat.length;
        }
        return SampledSignal::from_coefficients(lat, std::move(coeffs));
    };

    switch (spec.kind) {
        case Kind::indicator_ft:
            if (!(spec.a <= spec.b))
                throw std::invalid_argument("indicator_ft: requires a <= b");
            return from_density([&](double xi) -> cplx {
                return (xi >= spec.a && xi <= spec.b) ? cplx{spec.amplitude, 0.0} : cplx{0.0, 0.0};
            });
        case Kind::smooth_bump_ft:
        case Kind::modulated_bump:
            if (!(spec.width > 0.0))
                throw std::invalid_argument("bump: requires positive width");
            return from_density([&](double xi) -> cplx {
                return cplx{spec.amplitude * detail::unit_bump((xi - spec.center) / spec.width), 0.0};
            });
        case Kind::delta_frequency: {
            const double kd = spec.frequency * lat.length;
            const int k = static_cast<int>(std::lround(kd));
            if (std::abs(kd - k) > 1e-9)
                throw std::invalid_argument("delta_frequency: frequency must lie on the lattice");
            if (k < lat.min_index() || k > lat.max_index() || std::abs(spec.frequency) > band)
                throw band_overflow_error("delta_frequency: frequency outside the band");
            std::vector<cplx> coeffs(static_cast<std::size_t>(n), cplx{0.0, 0.0});
            coeffs[static_cast<std::size_t>(k + n / 2)] = cplx{spec.amplitude, 0.0};
            return SampledSignal::from_coefficients(lat, std::move(coeffs));
        }
        case Kind::gaussian_chirp: {
            if (!(spec.width > 0.0))
                throw std::invalid_argument("gaussian_chirp: requires positive width");
            std::vector<cplx> samples(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) {
                const double x = lat.x(j);
                const double envelope = spec.amplitude * std::exp(-pi * (x / spec.width) * (x / spec.width));
                const double phase = pi * spec.chirp_rate * x * x + 2.0 * pi * spec.center * x;
                samples[static_cast<std::size_t>(j)] = envelope * std::polar(1.0, phase);
            }
            SampledSignal out(lat, std::move(samples));
            if (out.band_mass_beyond(band) > 1e-10)
                throw band_overflow_error("gaussian_chirp: parameters exceed 0.45 N/L band");
            return out;
        }
        case Kind::dilated_indicator_ft: {
            if (!(spec.dilation > 0.0))
                throw std::invalid_argument("dilated_indicator_ft: requires positive scale");
            const double lo = spec.a / spec.dilation;
            const double hi = spec.b / spec.dilation;
            return from_density([&](double xi) -> cplx {
                return (xi >= lo && xi <= hi) ? cplx{spec.amplitude, 0.0} : cplx{0.0, 0.0};
            });
        }
    }
    throw std::invalid_argument("make_test_function: unknown kind");
}

}  // namespace latmul
