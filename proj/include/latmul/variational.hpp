#pragma once

#include <iostream>
#include <limits>

#include "latmul/multiplier.hpp"

namespace latmul {

/// Variation-norm evaluators at a fixed spatial point.  All of them maximize
/// over increasing chains of frequency cut points; cuts live in the gaps
/// between lattice points, so a chain of k cuts selects k-1 disjoint windows
/// of consecutive lattice frequencies.
///
/// Spectral values enter through their modulated form s[q] e^{2 pi i x xi_q},
/// so the full prefix equals the sample value f(x) and the window sums are
/// the partial inverse transforms over that window.
namespace detail {

struct SupportWindow {
    int lo = 0;    // first lattice index kept
    int count = 0; // number of consecutive points
};

/// Smallest index window containing every coefficient above rounding level
/// of any of the inputs.  Cuts outside this window never change a window
/// sum, so the chain search may be restricted to it.
inline SupportWindow common_support_window(const std::vector<const SampledSignal*>& fs) {
    const auto& lat = fs[0]->lattice();
    double peak = 0.0;
    for (const auto* f : fs)
        for (const auto& c : f->coefficients()) peak = std::max(peak, std::abs(c));
    const double floor = 1e-14 * peak;
    int lo = lat.max_index() + 1;
    int hi = lat.min_index() - 1;
    for (const auto* f : fs) {
        if (f->lattice() != lat) throw lattice_mismatch_error("support window: lattice mismatch");
        for (int k = lat.min_index(); k <= lat.max_index(); ++k)
            if (std::abs(f->coefficient(k)) > floor) {
                lo = std::min(lo, k);
                hi = std::max(hi, k);
            }
    }
    if (lo > hi) return {0, 0};
    return {lo, hi - lo + 1};
}

inline void require_positive_rho(double rho, const char* who) {
    if (std::isnan(rho) || rho <= 0.0)
        throw std::invalid_argument(std::string(who) + ": rho must be positive or infinite");
}

/// Chain DP shared by the linear and bilinear variation evaluators: maximize
/// the sum of weight(g, h) over increasing chains of gaps 0..gaps-1, then
/// take the 1/rho root.  Exact for every rho > 0 because chains are
/// enumerated implicitly, with no convexity assumption on the weight.
template <typename Weight>
double chain_variation(int gaps, double rho, Weight&& weight) {
    if (gaps < 2) return 0.0;
    if (std::isinf(rho)) {
        double best = 0.0;
        for (int h = 1; h < gaps; ++h)
            for (int g = 0; g < h; ++g) best = std::max(best, weight(g, h));
        return best;
    }
    std::vector<double> v(static_cast<std::size_t>(gaps), 0.0);
    double best = 0.0;
    for (int h = 1; h < gaps; ++h) {
        for (int g = 0; g < h; ++g) {
            const double cand = v[static_cast<std::size_t>(g)] + std::pow(weight(g, h), rho);
            if (cand > v[static_cast<std::size_t>(h)]) v[static_cast<std::size_t>(h)] = cand;
        }
        best = std::max(best, v[static_cast<std::size_t>(h)]);
    }
    return std::pow(best, 1.0 / rho);
}

}  // namespace detail

/// Cumulative partial inverse transform of one spectrum at a fixed point.
/// prefix(g) sums the first g modulated values; window_sum(g, h) is the
/// inverse transform restricted to the lattice points between gaps g and h.
class PartialSumTable {
  public:
    PartialSumTable(std::span<const cplx> spectrum, std::span<const double> freqs, double x) {
        if (spectrum.size() != freqs.size())
            throw std::invalid_argument("partial sums: spectrum/frequency size mismatch");
        for (std::size_t q = 1; q < freqs.size(); ++q)
            if (!(freqs[q] > freqs[q - 1]))
                throw std::invalid_argument("partial sums: frequencies must increase strictly");
        prefix_.resize(spectrum.size() + 1, cplx{0.0, 0.0});
        for (std::size_t q = 0; q < spectrum.size(); ++q)
            prefix_[q + 1] = prefix_[q] + spectrum[q] * std::polar(1.0, 2.0 * pi * x * freqs[q]);
    }

    static PartialSumTable from_signal(const SampledSignal& f, int sample_index) {
        const auto& lat = f.lattice();
        const double x = lat.x(sample_index);
        const auto win = detail::common_support_window({&f});
        std::vector<cplx> spec(static_cast<std::size_t>(win.count));
        std::vector<double> freqs(static_cast<std::size_t>(win.count));
        for (int q = 0; q < win.count; ++q) {
            spec[static_cast<std::size_t>(q)] = f.coefficient(win.lo + q);
            freqs[static_cast<std::size_t>(q)] = lat.xi(win.lo + q);
        }
        return PartialSumTable(spec, freqs, x);
    }

    int points() const { return static_cast<int>(prefix_.size()) - 1; }
    int gaps() const { return static_cast<int>(prefix_.size()); }
    cplx prefix(int gap) const { return prefix_[static_cast<std::size_t>(gap)]; }
    cplx window_sum(int g, int h) const {
        return prefix_[static_cast<std::size_t>(h)] - prefix_[static_cast<std::size_t>(g)];
    }

  private:
    std::vector<cplx> prefix_;
};

/// Triangular table of ordered double sums between cut gaps:
///   window_sum(g, h) = sum over g <= p1 < p2 < h of m1[p1] m2[p2]
/// with m the modulated spectra.  Built column by column from the recurrence
/// that admits one new top point and closes it against the first factor's
/// prefix over the remaining window.
class BilinearSumTable {
  public:
    BilinearSumTable(std::span<const cplx> spectrum1, std::span<const cplx> spectrum2,
                     std::span<const double> freqs, double x)
        : first_(spectrum1, freqs, x), second_(spectrum2, freqs, x) {
        const int n = first_.points();
        const int gaps = n + 1;
        table_.assign(static_cast<std::size_t>(gaps) * static_cast<std::size_t>(gaps),
                      cplx{0.0, 0.0});
        for (int g = 0; g < gaps; ++g)
            for (int h = g + 1; h < gaps; ++h) {
                const cplx top = second_.window_sum(h - 1, h);
                at(g, h) = at(g, h - 1) + top * first_.window_sum(g, h - 1);
            }
    }

    static BilinearSumTable from_signals(const SampledSignal& f1, const SampledSignal& f2,
                                         int sample_index) {
        const auto& lat = f1.lattice();
        if (f2.lattice() != lat) throw lattice_mismatch_error("bilinear table: lattice mismatch");
        const double x = lat.x(sample_index);
        const auto win = detail::common_support_window({&f1, &f2});
        std::vector<cplx> s1(static_cast<std::size_t>(win.count));
        std::vector<cplx> s2(static_cast<std::size_t>(win.count));
        std::vector<double> freqs(static_cast<std::size_t>(win.count));
        for (int q = 0; q < win.count; ++q) {
            s1[static_cast<std::size_t>(q)] = f1.coefficient(win.lo + q);
            s2[static_cast<std::size_t>(q)] = f2.coefficient(win.lo + q);
            freqs[static_cast<std::size_t>(q)] = lat.xi(win.lo + q);
        }
        return BilinearSumTable(s1, s2, freqs, x);
    }

    int points() const { return first_.points(); }
    int gaps() const { return first_.gaps(); }
    cplx window_sum(int g, int h) const { return table_[index(g, h)]; }
    const PartialSumTable& first() const { return first_; }
    const PartialSumTable& second() const { return second_; }

  private:
    std::size_t index(int g, int h) const {
        return static_cast<std::size_t>(g) * static_cast<std::size_t>(gaps()) +
               static_cast<std::size_t>(h);
    }
    cplx& at(int g, int h) { return table_[index(g, h)]; }

    PartialSumTable first_;
    PartialSumTable second_;
    std::vector<cplx> table_;
};

/// Largest magnitude among all cumulative partial sums.
inline double carleson_sup(const PartialSumTable& table) {
    double best = 0.0;
    for (int g = 1; g < table.gaps(); ++g) best = std::max(best, std::abs(table.prefix(g)));
    return best;
}

inline double carleson_sup(const SampledSignal& f, int sample_index) {
    return carleson_sup(PartialSumTable::from_signal(f, sample_index));
}

/// rho-variation of the cumulative sums over increasing cut chains.
/// Pass rho = infinity for the largest single window magnitude.
inline double variational_carleson(const PartialSumTable& table, double rho) {
    detail::require_positive_rho(rho, "variational_carleson");
    return detail::chain_variation(table.gaps(), rho, [&](int g, int h) {
        return std::abs(table.window_sum(g, h));
    });
}

inline double variational_carleson(const SampledSignal& f, double rho, int sample_index) {
    return variational_carleson(PartialSumTable::from_signal(f, sample_index), rho);
}

/// rho-variation with ordered bilinear window weights.
inline double variational_bicarleson(const BilinearSumTable& table, double rho) {
    detail::require_positive_rho(rho, "variational_bicarleson");
    return detail::chain_variation(table.gaps(), rho, [&](int g, int h) {
        return std::abs(table.window_sum(g, h));
    });
}

inline double variational_bicarleson(const SampledSignal& f1, const SampledSignal& f2, double rho,
                                     int sample_index) {
    return variational_bicarleson(BilinearSumTable::from_signals(f1, f2, sample_index), rho);
}

/// Six-term pointwise majorant: the r-variations of the three inputs plus
/// the square roots of the r/2 bilinear variations of the ordered pairs.
/// Meaningful for 2 < r < 3; other values are computed but warned about.
inline double var_r_composite(const SampledSignal& f1, const SampledSignal& f2,
                              const SampledSignal& f3, double r, int sample_index) {
    detail::require_positive_rho(r, "var_r_composite");
    if (!(r > 2.0 && r < 3.0))
        std::cerr << "var_r_composite: r = " << r << " outside (2, 3), result may not dominate\n";
    double value = variational_carleson(f1, r, sample_index) +
                   variational_carleson(f2, r, sample_index) +
                   variational_carleson(f3, r, sample_index);
    value += std::sqrt(variational_bicarleson(f1, f2, r / 2.0, sample_index));
    value += std::sqrt(variational_bicarleson(f2, f3, r / 2.0, sample_index));
    value += std::sqrt(variational_bicarleson(f1, f3, r / 2.0, sample_index));
    return value;
}

struct DominationReport {
    double worst_ratio = 0.0;
    int worst_sample = -1;
    bool above_soft_bound = false;  // worst ratio exceeded 0.999
};

/// Worst sampled ratio |trilinear chain(x)| / composite(x)^3.  A zero
/// numerator with zero denominator counts as ratio zero; a nonzero numerator
/// against a zero denominator is reported as infinity.
inline DominationReport domination_check(const SampledSignal& f1, const SampledSignal& f2,
                                         const SampledSignal& f3, double r,
                                         const std::vector<int>& sample_indices) {
    auto chain = apply_simplex_dp(SlopeVector{1.0, 1.0, 1.0}, {f1, f2, f3});
    DominationReport rep;
    for (int j : sample_indices) {
        const double num = std::abs(chain.samples()[static_cast<std::size_t>(j)]);
        const double den = var_r_composite(f1, f2, f3, r, j);
        double ratio;
        if (den > 0.0)
            ratio = num / (den * den * den);
        else
            ratio = (num > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_sample = j;
        }
    }
    rep.above_soft_bound = rep.worst_ratio > 0.999;
    return rep;
}

}  // namespace latmul
