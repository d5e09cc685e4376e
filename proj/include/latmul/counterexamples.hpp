#pragma once

#include <array>

#include "latmul/multiplier.hpp"
#include "latmul/testfn.hpp"

namespace latmul {

/// Closed forms and scaling experiments that exhibit the sharpness of the
/// chain operators: the slow quadratic tail of the plain-kernel trilinear
/// chain on indicator data, the two quadlinear blowup configurations, and
/// ratio ladders probing operator-norm growth along input families.

/// Exact value of the plain-kernel chain with slopes (1, 1, -2) applied to
/// three copies of the inverse transform of 1_{[-1,1]}:
///   z^2 - z^3 (3/4 - e^{-4 pi i x} + e^{-8 pi i x} / 4),  z = 1/(2 pi i x).
/// At integer x the bracket vanishes and the value is -1/(2 pi x)^2 exactly.
inline cplx closed_form_trilinear(double x) {
    if (x == 0.0) throw std::invalid_argument("closed_form_trilinear: undefined at x = 0");
    const cplx z = cplx{0.0, -1.0} / (2.0 * pi * x);
    const cplx bracket = 0.75 - std::polar(1.0, -4.0 * pi * x) +
                         0.25 * std::polar(1.0, -8.0 * pi * x);
    return z * z - z * z * z * bracket;
}

/// Power-law fit of |f| over a spatial window bounded away from the origin.
struct DecayFit {
    double exponent = 0.0;   // p in |f(x)| ~ C x^{-p}
    double amplitude = 0.0;  // C
    double x_min = 0.0;
    double x_max = 0.0;
    double residual = 0.0;   // root mean square log-log fit residual
    int points = 0;
};

inline DecayFit decay_fit(const SampledSignal& f, double x_min, double x_max) {
    if (!(x_min > 0.0) || !(x_max > x_min))
        throw std::invalid_argument("decay_fit: window must satisfy 0 < x_min < x_max");
    const auto& lat = f.lattice();
    std::vector<double> lx, ly;
    for (int j = 0; j < lat.samples; ++j) {
        const double x = lat.x(j);
        if (x < x_min || x > x_max) continue;
        const double mag = std::abs(f.samples()[static_cast<std::size_t>(j)]);
        if (mag <= 0.0) continue;
        lx.push_back(std::log(x));
        ly.push_back(std::log(mag));
    }
    if (lx.size() < 10)
        throw std::invalid_argument("decay_fit: window holds fewer than 10 usable points");

    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        ss += r * r;
    }
    DecayFit fit;
    fit.exponent = -slope;
    fit.amplitude = std::exp(intercept);
    fit.x_min = x_min;
    fit.x_max = x_max;
    fit.residual = std::sqrt(ss / n);
    fit.points = static_cast<int>(lx.size());
    return fit;
}

/// Blowup experiment, separated-support configuration: the first input is a
/// narrow bump at -2 of spectral half-width 1/n_param and height n_param, the
/// others a fixed smooth bump on [-1, 1].  The quadlinear chain then
/// factorizes as f1 times the trilinear chain of the rest, and the output
/// norm outruns the input norm product by n_param^{sum_{j>=2} 1/p_j - 2}.
struct QuadlinearCase1Result {
    double lhs_norm = 0.0;              // chain output in L^{1/sum 1/p_j}
    double rhs_norm = 0.0;              // product of input norms
    double localization_residual = 0.0; // sup |chain - f1 * trilinear chain|
};

inline QuadlinearCase1Result quadlinear_blowup_case1(const FrequencyLattice& lat, int n_param,
                                                     const std::array<double, 4>& p) {
    if (n_param < 2) throw std::invalid_argument("case1: n_param must be at least 2");
    for (double pj : p)
        if (!(pj > 0.0)) throw std::invalid_argument("case1: exponents must be positive");
    const double tail = 1.0 / p[1] + 1.0 / p[2] + 1.0 / p[3];
    if (!(tail > 2.0))
        throw std::invalid_argument(
            "case1: requires 1/p2 + 1/p3 + 1/p4 > 2; the equality configuration is "
            "quadlinear_blowup_case2");

    const double np = static_cast<double>(n_param);
    auto f1 = make_test_function(lat, TestFunctionSpec::modulated(-2.0, 1.0 / np, np));
    auto g = make_test_function(lat, TestFunctionSpec::bump(0.0, 1.0));

    auto chain = apply_simplex_dp(SlopeVector{1.0, 1.0, 1.0, -2.0}, {f1, g, g, g});
    auto tri = apply_simplex_dp(SlopeVector{1.0, 1.0, -2.0}, {g, g, g});

    QuadlinearCase1Result result;
    for (int j = 0; j < lat.samples; ++j) {
        const cplx gap = chain.samples()[static_cast<std::size_t>(j)] -
                         f1.samples()[static_cast<std::size_t>(j)] *
                             tri.samples()[static_cast<std::size_t>(j)];
        result.localization_residual = std::max(result.localization_residual, std::abs(gap));
    }
    const double s = 1.0 / (1.0 / p[0] + tail);
    result.lhs_norm = lp_norm(chain, s);
    result.rhs_norm = lp_norm(f1, p[0]) * lp_norm(g, p[1]) * lp_norm(g, p[2]) * lp_norm(g, p[3]);
    return result;
}

/// Blowup experiment, logarithmic configuration: exponent vector fixed at
/// (1, 3/2, 3/2, 3/2), first input the narrow bump at -2 multiplied in space
/// by the inverse transform of 1_{[-1,1]}.  Output and input norms both grow
/// logarithmically in n_param, the output with the cube of the rate.
struct QuadlinearCase2Result {
    double lhs_norm = 0.0;  // chain output in L^{1/3}
    double rhs_norm = 0.0;  // product of input norms
};

inline QuadlinearCase2Result quadlinear_blowup_case2(const FrequencyLattice& lat, int n_param) {
    if (n_param < 2) throw std::invalid_argument("case2: n_param must be at least 2");
    const double np = static_cast<double>(n_param);

    auto bump1 = make_test_function(lat, TestFunctionSpec::modulated(-2.0, 1.0 / np, np));
    auto ind = make_test_function(lat, TestFunctionSpec::indicator(-1.0, 1.0));
    std::vector<cplx> prod(static_cast<std::size_t>(lat.samples));
    for (int j = 0; j < lat.samples; ++j)
        prod[static_cast<std::size_t>(j)] = bump1.samples()[static_cast<std::size_t>(j)] *
                                            ind.samples()[static_cast<std::size_t>(j)];
    SampledSignal f1(lat, std::move(prod));
    auto g = make_test_function(lat, TestFunctionSpec::bump(0.0, 1.0));

    auto chain = apply_simplex_dp(SlopeVector{1.0, 1.0, 1.0, -2.0}, {f1, g, g, g});

    QuadlinearCase2Result result;
    result.lhs_norm = lp_norm(chain, 1.0 / 3.0);
    result.rhs_norm = lp_norm(f1, 1.0) * std::pow(lp_norm(g, 1.5), 3.0);
    return result;
}

/// One rung of an operator-norm ratio ladder.
struct ProbeRow {
    double parameter = 0.0;           // the ladder's own label (scale, rate, ...)
    double output_norm = 0.0;         // ||chain(f, ..., f)||_r
    double input_norm_product = 0.0;  // prod_j ||f||_{p_j}
    double ratio = 0.0;
};

/// Applies the chain with the given slopes to one copy of each family member
/// per slot and tabulates the output-to-input norm ratios.  Each copy is
/// oriented to its slot: a slot with negative slope compares the mirrored
/// frequency axis, so it receives the complex conjugate of the member (same
/// spectrum reflected through the origin).  Conjugation preserves every L^p
/// norm and leaves real-valued members unchanged.  Growth along the ladder is
/// evidence against a uniform bound at these exponents; flatness is evidence
/// for one.  Deterministic: no randomness enters.
inline std::vector<ProbeRow> opnorm_probe(const FrequencyLattice& lat, const SlopeVector& alpha,
                                          std::span<const double> p, double r,
                                          const std::vector<std::pair<double, TestFunctionSpec>>& ladder) {
    const std::size_t n = alpha.entries.size();
    if (p.size() != n)
        throw std::invalid_argument("opnorm_probe: one exponent per operator slot required");
    if (!(r > 0.0)) throw std::invalid_argument("opnorm_probe: output exponent must be positive");

    std::vector<ProbeRow> rows;
    rows.reserve(ladder.size());
    for (const auto& [parameter, spec] : ladder) {
        auto f = make_test_function(lat, spec);
        std::vector<cplx> mirrored = f.samples();
        for (auto& v : mirrored) v = std::conj(v);
        SampledSignal fbar(lat, std::move(mirrored));
        std::vector<SampledSignal> inputs;
        inputs.reserve(n);
        for (std::size_t j = 0; j < n; ++j) inputs.push_back(alpha.entries[j] < 0.0 ? fbar : f);
        auto out = apply_simplex_dp(alpha, inputs);
        ProbeRow row;
        row.parameter = parameter;
        row.output_norm = lp_norm(out, r);
        row.input_norm_product = 1.0;
        for (std::size_t j = 0; j < n; ++j) row.input_norm_product *= lp_norm(f, p[j]);
        row.ratio = row.output_norm / row.input_norm_product;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace latmul
