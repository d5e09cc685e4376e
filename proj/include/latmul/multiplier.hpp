#pragma once

#include <compare>
#include <functional>
#include <numeric>
#include <span>

#include "latmul/grid.hpp"

namespace latmul {

/// Weight given to frequency tuples lying on a region boundary (equal order
/// parameters).  strict drops them; half counts each boundary equality with
/// factor 1/2, the symmetric principal-value convention.
enum class TieRule { strict, half };

/// Nonzero slope tuple (alpha_1, ..., alpha_n), 2 <= n <= 4.
struct SlopeVector {
    std::vector<double> entries;

    explicit SlopeVector(std::vector<double> e) : entries(std::move(e)) {
        if (entries.size() < 2 || entries.size() > 4)
            throw std::invalid_argument("SlopeVector: arity must be 2, 3, or 4");
        for (double a : entries)
            if (a == 0.0 || !std::isfinite(a))
                throw std::invalid_argument("SlopeVector: entries must be nonzero and finite");
    }
    SlopeVector(std::initializer_list<double> e) : SlopeVector(std::vector<double>(e)) {}

    int arity() const { return static_cast<int>(entries.size()); }
};

enum class SlopeClass { non_degenerate, semi_degenerate, degenerate };

/// Classification plus a zero-sum witness window [window_begin, window_end]
/// (inclusive entry indices; -1/-1 when none exists).
struct SlopeClassification {
    SlopeClass kind = SlopeClass::non_degenerate;
    int window_begin = -1;
    int window_end = -1;
};

/// degenerate: some window of <= 2 consecutive entries sums to zero
/// (single entries cannot, being nonzero).  semi_degenerate: a longer
/// window sums to zero but no short one does.  non_degenerate: no window
/// of any length sums to zero.
inline SlopeClassification classify_slopes(const SlopeVector& alpha) {
    const int n = alpha.arity();
    double scale = 0.0;
    for (double a : alpha.entries) scale = std::max(scale, std::abs(a));
    const double tol = 1e-12 * scale;
    auto window_sum = [&](int i, int j) {
        double s = 0.0;
        for (int k = i; k <= j; ++k) s += alpha.entries[static_cast<std::size_t>(k)];
        return s;
    };
    for (int i = 0; i + 1 < n; ++i)
        if (std::abs(window_sum(i, i + 1)) <= tol)
            return {SlopeClass::degenerate, i, i + 1};
    for (int len = 3; len <= n; ++len)
        for (int i = 0; i + len - 1 < n; ++i)
            if (std::abs(window_sum(i, i + len - 1)) <= tol)
                return {SlopeClass::semi_degenerate, i, i + len - 1};
    return {};
}

/// Bounded multiplier m(xi_1, ..., xi_n) given by an arbitrary evaluator.
class GeneralSymbol {
  public:
    GeneralSymbol(int arity, std::function<cplx(std::span<const double>)> eval,
                  double bound = std::numeric_limits<double>::infinity())
        : arity_(arity), bound_(bound), eval_(std::move(eval)) {
        if (arity_ < 2 || arity_ > 4)
            throw std::invalid_argument("GeneralSymbol: arity must be 2, 3, or 4");
        if (!eval_) throw std::invalid_argument("GeneralSymbol: evaluator required");
    }

    int arity() const { return arity_; }

    cplx operator()(std::span<const double> xi) const {
        const cplx v = eval_(xi);
        if (std::abs(v) > bound_ * (1.0 + 1e-12))
            throw std::logic_error("GeneralSymbol: evaluation exceeded the declared bound");
        return v;
    }

  private:
    int arity_;
    double bound_;
    std::function<cplx(std::span<const double>)> eval_;
};

namespace detail {

/// Exact comparison of k1/a1 and k2/a2 (a1, a2 nonzero) by cross
/// multiplication.  Both products are exact doubles whenever the slopes are
/// dyadic rationals of modest size, which makes boundary ties exact rather
/// than rounding-dependent.
inline std::strong_ordering slope_compare(int k1, double a1, int k2, double a2) {
    const double lhs = static_cast<double>(k1) * a2;
    const double rhs = static_cast<double>(k2) * a1;
    if (lhs == rhs) return std::strong_ordering::equal;
    const bool flip = (a1 < 0.0) != (a2 < 0.0);
    const bool less = flip ? (lhs > rhs) : (lhs < rhs);
    return less ? std::strong_ordering::less : std::strong_ordering::greater;
}

struct SupportEntry {
    int k;
    cplx c;
};

/// Nonzero coefficients of one input, sorted so that k/alpha increases.
/// Entries below 1e-14 of the peak are rounding residue of transformed
/// signals, not content, and are pruned.
inline std::vector<SupportEntry> sorted_support(const SampledSignal& f, double alpha) {
    std::vector<SupportEntry> sup;
    const auto& lat = f.lattice();
    double peak = 0.0;
    for (const auto& c : f.coefficients()) peak = std::max(peak, std::abs(c));
    const double floor = 1e-14 * peak;
    for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
        const cplx c = f.coefficient(k);
        if (std::abs(c) > floor) sup.push_back({k, c});
    }
    if (alpha < 0.0) std::reverse(sup.begin(), sup.end());
    return sup;
}

inline void check_common_lattice(const std::vector<SampledSignal>& inputs) {
    for (std::size_t j = 1; j < inputs.size(); ++j)
        if (inputs[j].lattice() != inputs[0].lattice())
            throw lattice_mismatch_error("inputs live on different lattices");
}

inline void check_band(const std::vector<SampledSignal>& inputs, double per_input_bound) {
    for (const auto& f : inputs)
        if (f.band_mass_beyond(per_input_bound) > 1e-10)
            throw band_overflow_error("input spectrum exceeds the operator band guard");
}

/// Shared chain-sum engine.
///
/// Computes out[tau] = sum over (k_1, ..., k_n) of w(k) * prod_j c_j[k_j]
/// where tau = sum_j weight_j * k_j and w enforces the chain
/// k_1/ord_1 <= k_2/ord_2 <= ... with strict/half tie handling.  States are
/// (partial tau, last coordinate's support position); each coordinate step
/// uses per-tau prefix sums over the previous support, so the cost is
/// O(n * tau_range * support) instead of the product of supports.
inline std::vector<cplx> chain_dp(const std::vector<std::vector<SupportEntry>>& sup,
                                  const std::vector<double>& ord,
                                  const std::vector<int>& weight, TieRule tie,
                                  int out_half_span) {
    const int n = static_cast<int>(sup.size());
    const int out_size = 2 * out_half_span;
    std::vector<cplx> out(static_cast<std::size_t>(out_size), cplx{0.0, 0.0});
    for (const auto& s : sup)
        if (s.empty()) return out;

    // Cumulative range of partial tau after each coordinate.
    std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    long lo_acc = 0, hi_acc = 0;
    for (int j = 0; j < n; ++j) {
        long mn = std::numeric_limits<long>::max(), mx = std::numeric_limits<long>::min();
        for (const auto& e : sup[static_cast<std::size_t>(j)]) {
            const long v = static_cast<long>(weight[static_cast<std::size_t>(j)]) * e.k;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        lo_acc += mn;
        hi_acc += mx;
        lo[static_cast<std::size_t>(j)] = lo_acc;
        hi[static_cast<std::size_t>(j)] = hi_acc;
    }

    auto matrix = [](long taus, std::size_t cols) {
        return std::vector<cplx>(static_cast<std::size_t>(taus) * cols, cplx{0.0, 0.0});
    };

    std::size_t cols = sup[0].size();
    long tau_lo = lo[0], tau_count = hi[0] - lo[0] + 1;
    std::vector<cplx> state = matrix(tau_count, cols);
    for (std::size_t q = 0; q < cols; ++q) {
        const auto& e = sup[0][q];
        const long tau = static_cast<long>(weight[0]) * e.k;
        state[static_cast<std::size_t>(tau - tau_lo) * cols + q] += e.c;
    }

    for (int j = 1; j < n; ++j) {
        const auto& prev = sup[static_cast<std::size_t>(j - 1)];
        const auto& cur = sup[static_cast<std::size_t>(j)];
        const double ord_prev = ord[static_cast<std::size_t>(j - 1)];
        const double ord_cur = ord[static_cast<std::size_t>(j)];

        // For each entry of the current support: number of previous-support
        // entries strictly below it in chain order, and whether the next one
        // ties exactly.
        const std::size_t ncur = cur.size();
        std::vector<std::size_t> below(ncur);
        std::vector<bool> tied(ncur, false);
        for (std::size_t q = 0; q < ncur; ++q) {
            const int kc = cur[q].k;
            std::size_t b = static_cast<std::size_t>(
                std::partition_point(prev.begin(), prev.end(),
                                     [&](const SupportEntry& e) {
                                         return slope_compare(e.k, ord_prev, kc, ord_cur) ==
                                                std::strong_ordering::less;
                                     }) -
                prev.begin());
            below[q] = b;
            if (b < prev.size() &&
                slope_compare(prev[b].k, ord_prev, kc, ord_cur) == std::strong_ordering::equal)
                tied[q] = true;
        }

        // The final coordinate needs no successor, so its contributions go
        // straight into the output array instead of another state matrix.
        const bool last = (j == n - 1);
        const long next_lo = lo[static_cast<std::size_t>(j)];
        const long next_count = hi[static_cast<std::size_t>(j)] - next_lo + 1;
        std::vector<cplx> next = last ? std::vector<cplx>{} : matrix(next_count, ncur);
        std::vector<cplx> prefix(prev.size() + 1);

        const long prev_lo = tau_lo, prev_count = tau_count;
        for (long t = 0; t < prev_count; ++t) {
            const cplx* row = &state[static_cast<std::size_t>(t) * cols];
            prefix[0] = {0.0, 0.0};
            for (std::size_t q = 0; q < prev.size(); ++q) prefix[q + 1] = prefix[q] + row[q];
            if (prefix[prev.size()] == cplx{0.0, 0.0}) {
                bool all_zero = true;
                for (std::size_t q = 0; q < prev.size() && all_zero; ++q)
                    if (row[q] != cplx{0.0, 0.0}) all_zero = false;
                if (all_zero) continue;
            }
            const long tau_prev = prev_lo + t;
            for (std::size_t q = 0; q < ncur; ++q) {
                cplx mass = prefix[below[q]];
                if (tie == TieRule::half && tied[q]) mass += 0.5 * row[below[q]];
                if (mass == cplx{0.0, 0.0}) continue;
                const long tau = tau_prev + static_cast<long>(weight[static_cast<std::size_t>(j)]) * cur[q].k;
                if (last) {
                    // Out-of-band sums are guard-tolerance residue; dropped.
                    if (tau >= -out_half_span && tau < out_half_span)
                        out[static_cast<std::size_t>(tau + out_half_span)] += cur[q].c * mass;
                } else {
                    next[static_cast<std::size_t>(tau - next_lo) * ncur + q] += cur[q].c * mass;
                }
            }
        }
        if (last) return out;
        state = std::move(next);
        cols = ncur;
        tau_lo = next_lo;
        tau_count = next_count;
    }

    // Frequencies outside the representable band carry only guard-tolerance
    // residue (the band check admitted the inputs) and are dropped.
    for (long t = 0; t < tau_count; ++t) {
        const long tau = tau_lo + t;
        if (tau < -out_half_span || tau >= out_half_span) continue;
        cplx acc{0.0, 0.0};
        for (std::size_t q = 0; q < cols; ++q) acc += state[static_cast<std::size_t>(t) * cols + q];
        out[static_cast<std::size_t>(tau + out_half_span)] += acc;
    }
    return out;
}

}  // namespace detail

/// Region weight of one frequency tuple under the chain
/// k_1/ord_1 <= ... <= k_n/ord_n: 1 strictly inside, 0 outside, and on
/// boundary ties 0 (strict) or a factor 1/2 per tied comparison (half).
/// This is the defining formula the fast paths must reproduce.
inline double chain_weight(std::span<const int> k, std::span<const double> ord, TieRule tie) {
    double w = 1.0;
    for (std::size_t j = 0; j + 1 < k.size(); ++j) {
        const auto c = detail::slope_compare(k[j], ord[j], k[j + 1], ord[j + 1]);
        if (c == std::strong_ordering::greater) return 0.0;
        if (c == std::strong_ordering::equal) {
            if (tie == TieRule::strict) return 0.0;
            w *= 0.5;
        }
    }
    return w;
}

/// T_m(f_1, ..., f_n)(x) = sum over frequency tuples of
/// m(xi_1, ..., xi_n) * prod_j c_j[k_j] * e^{2 pi i x (xi_1 + ... + xi_n)},
/// evaluated by direct summation over the coefficient supports.
inline SampledSignal apply_general_symbol(const GeneralSymbol& m,
                                          const std::vector<SampledSignal>& inputs) {
    const int n = static_cast<int>(inputs.size());
    if (n != m.arity()) throw std::invalid_argument("apply_general_symbol: arity mismatch");
    detail::check_common_lattice(inputs);
    const auto& lat = inputs[0].lattice();
    detail::check_band(inputs, lat.band_limit(n));

    std::vector<std::vector<detail::SupportEntry>> sup;
    sup.reserve(static_cast<std::size_t>(n));
    for (const auto& f : inputs) sup.push_back(detail::sorted_support(f, 1.0));

    std::vector<cplx> out(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    const int half = lat.samples / 2;
    double xi[4];
    // Out-of-band sums are guard-tolerance residue and are dropped.
    auto emit = [&](long tau, cplx v) {
        if (tau < -half || tau >= half) return;
        out[static_cast<std::size_t>(tau + half)] += v;
    };

    // Arity-specialized nested loops; the innermost body evaluates the
    // symbol once per tuple.
    if (n == 2) {
        for (const auto& e1 : sup[0])
            for (const auto& e2 : sup[1]) {
                xi[0] = lat.xi(e1.k);
                xi[1] = lat.xi(e2.k);
                const cplx mv = m(std::span<const double>(xi, 2));
                if (mv != cplx{0.0, 0.0}) emit(e1.k + e2.k, mv * e1.c * e2.c);
            }
    } else if (n == 3) {
        for (const auto& e1 : sup[0])
            for (const auto& e2 : sup[1]) {
                const cplx c12 = e1.c * e2.c;
                for (const auto& e3 : sup[2]) {
                    xi[0] = lat.xi(e1.k);
                    xi[1] = lat.xi(e2.k);
                    xi[2] = lat.xi(e3.k);
                    const cplx mv = m(std::span<const double>(xi, 3));
                    if (mv != cplx{0.0, 0.0})
                        emit(static_cast<long>(e1.k) + e2.k + e3.k, mv * c12 * e3.c);
                }
            }
    } else {
        for (const auto& e1 : sup[0])
            for (const auto& e2 : sup[1]) {
                const cplx c12 = e1.c * e2.c;
                for (const auto& e3 : sup[2]) {
                    const cplx c123 = c12 * e3.c;
                    for (const auto& e4 : sup[3]) {
                        xi[0] = lat.xi(e1.k);
                        xi[1] = lat.xi(e2.k);
                        xi[2] = lat.xi(e3.k);
                        xi[3] = lat.xi(e4.k);
                        const cplx mv = m(std::span<const double>(xi, 4));
                        if (mv != cplx{0.0, 0.0})
                            emit(static_cast<long>(e1.k) + e2.k + e3.k + e4.k, mv * c123 * e4.c);
                    }
                }
            }
    }
    return SampledSignal::from_coefficients(lat, std::move(out));
}

/// Simplex multiplier over the region xi_1/alpha_1 < ... < xi_n/alpha_n with
/// kernel e^{2 pi i x (xi_1 + ... + xi_n)}, computed by the chain dynamic
/// program.  Output lives on the input lattice.
inline SampledSignal apply_simplex_dp(const SlopeVector& alpha,
                                      const std::vector<SampledSignal>& inputs,
                                      TieRule tie = TieRule::strict) {
    const int n = alpha.arity();
    if (static_cast<int>(inputs.size()) != n)
        throw std::invalid_argument("apply_simplex_dp: arity mismatch");
    detail::check_common_lattice(inputs);
    const auto& lat = inputs[0].lattice();
    detail::check_band(inputs, lat.band_limit(n));

    std::vector<std::vector<detail::SupportEntry>> sup;
    std::vector<int> weight(static_cast<std::size_t>(n), 1);
    for (int j = 0; j < n; ++j)
        sup.push_back(detail::sorted_support(inputs[static_cast<std::size_t>(j)],
                                             alpha.entries[static_cast<std::size_t>(j)]));
    auto out = detail::chain_dp(sup, alpha.entries, weight, tie, lat.samples / 2);
    return SampledSignal::from_coefficients(lat, std::move(out));
}

/// Variant with the plain chain xi_1 < ... < xi_n and slope-weighted kernel
/// e^{2 pi i x (alpha_1 xi_1 + ... + alpha_n xi_n)}.  Slopes must be rational
/// with small denominator; the output lives on the refined lattice
/// (2 * D * N, D * L) where D is the least common denominator, so that
/// every output frequency sum is exactly representable.
inline SampledSignal apply_c_tilde(const SlopeVector& alpha,
                                   const std::vector<SampledSignal>& inputs,
                                   TieRule tie = TieRule::strict) {
    const int n = alpha.arity();
    if (static_cast<int>(inputs.size()) != n)
        throw std::invalid_argument("apply_c_tilde: arity mismatch");
    detail::check_common_lattice(inputs);
    const auto& lat = inputs[0].lattice();

    // Rationalize each slope with denominator <= 64.
    long denom = 1;
    std::vector<std::pair<long, long>> frac(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double a = alpha.entries[static_cast<std::size_t>(j)];
        bool found = false;
        for (long q = 1; q <= 64 && !found; ++q) {
            const double scaled = a * static_cast<double>(q);
            const long p = std::lround(scaled);
            if (p != 0 && std::abs(scaled - static_cast<double>(p)) < 1e-9) {
                frac[static_cast<std::size_t>(j)] = {p, q};
                denom = std::lcm(denom, q);
                found = true;
            }
        }
        if (!found)
            throw std::invalid_argument("apply_c_tilde: slopes must be rational with denominator <= 64");
    }

    double abs_sum = 0.0;
    for (double a : alpha.entries) abs_sum += std::abs(a);
    detail::check_band(inputs, 0.45 * lat.samples / (abs_sum * lat.length));

    int out_samples = 1;
    while (out_samples < 2 * static_cast<int>(denom) * lat.samples) out_samples *= 2;
    FrequencyLattice out_lat(out_samples, static_cast<double>(denom) * lat.length);

    std::vector<std::vector<detail::SupportEntry>> sup;
    std::vector<double> ord(static_cast<std::size_t>(n), 1.0);
    std::vector<int> weight(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        sup.push_back(detail::sorted_support(inputs[static_cast<std::size_t>(j)], 1.0));
        const auto [p, q] = frac[static_cast<std::size_t>(j)];
        weight[static_cast<std::size_t>(j)] = static_cast<int>(p * (denom / q));
    }
    auto out = detail::chain_dp(sup, ord, weight, tie, out_samples / 2);
    return SampledSignal::from_coefficients(out_lat, std::move(out));
}

enum class HalfLine { positive, negative };

/// Frequency cutoff: positive keeps xi > 0, negative keeps xi <= 0 (the zero
/// frequency belongs to the negative half).  The two parts sum back to the
/// input exactly.
inline SampledSignal half_line_projection(const SampledSignal& f, HalfLine side) {
    const auto& lat = f.lattice();
    std::vector<cplx> coeffs(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
        const bool keep = (side == HalfLine::positive) ? (k > 0) : (k <= 0);
        if (keep) coeffs[static_cast<std::size_t>(k + lat.samples / 2)] = f.coefficient(k);
    }
    return SampledSignal::from_coefficients(lat, std::move(coeffs));
}

/// Pointwise product via coefficient convolution.  No arity band guard of
/// its own (factors may already occupy combined bands); it only requires the
/// result band to stay representable.
inline SampledSignal pointwise_product(const SampledSignal& f, const SampledSignal& g) {
    if (f.lattice() != g.lattice())
        throw lattice_mismatch_error("pointwise_product: operands on different lattices");
    const auto& lat = f.lattice();
    const int half = lat.samples / 2;
    std::vector<cplx> out(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    const auto fs = detail::sorted_support(f, 1.0);
    const auto gs = detail::sorted_support(g, 1.0);
    for (const auto& a : fs)
        for (const auto& b : gs) {
            const long tau = static_cast<long>(a.k) + b.k;
            if (tau < -half || tau >= half)
                throw band_overflow_error("pointwise_product: result band not representable");
            out[static_cast<std::size_t>(tau + half)] += a.c * b.c;
        }
    return SampledSignal::from_coefficients(lat, std::move(out));
}

}  // namespace latmul
