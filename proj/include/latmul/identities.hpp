#pragma once

#include "latmul/multiplier.hpp"

namespace latmul {

/// Algebraic decompositions of simplex multipliers into products, shorter
/// chains, and half-line cutoffs.  Everything here is compared spectrum-side
/// (coefficient arrays), and every inequality is pinned so the identities
/// hold exactly on the lattice, boundary tuples included:
///
///   reference trilinear region   k1 < k2  and  2 k2 + k3 <= 0
///   reference quadlinear region  k1 < k2 < k3  and  2 k3 + k4 <= 0
///   short chains                 strict throughout
///   positive half-line           k > 0 (zero frequency is negative)
///
/// The closed final comparison is forced: with it, both the trilinear
/// decomposition and the third-slot adjoint duality below are exact; with a
/// strict final comparison each acquires a boundary defect.
namespace detail {

/// Direct multilinear region sum over integer frequency indices.  No arity
/// band guard (identity terms legitimately occupy combined bands); output
/// beyond the representable band is guard-level residue and is dropped.
template <typename Weight>
std::vector<cplx> indexed_sum(const std::vector<const SampledSignal*>& inputs, Weight&& weight) {
    const auto& lat = inputs[0]->lattice();
    const int n = static_cast<int>(inputs.size());
    const int half = lat.samples / 2;
    std::vector<cplx> out(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    std::vector<std::vector<SupportEntry>> sup;
    sup.reserve(static_cast<std::size_t>(n));
    for (const auto* f : inputs) {
        if (f->lattice() != lat) throw lattice_mismatch_error("indexed_sum: lattice mismatch");
        sup.push_back(sorted_support(*f, 1.0));
    }
    std::vector<int> k(static_cast<std::size_t>(n));
    auto rec = [&](auto&& self, int j, cplx prod, long tau) -> void {
        if (j == n) {
            const double w = weight(std::span<const int>(k.data(), k.size()));
            if (w != 0.0 && tau >= -half && tau < half)
                out[static_cast<std::size_t>(tau + half)] += w * prod;
            return;
        }
        for (const auto& e : sup[static_cast<std::size_t>(j)]) {
            k[static_cast<std::size_t>(j)] = e.k;
            self(self, j + 1, prod * e.c, tau + e.k);
        }
    };
    rec(rec, 0, cplx{1.0, 0.0}, 0);
    return out;
}

inline double sup_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace detail

/// Real pairing integral f g dx on the lattice (no conjugation), computed
/// spectrum-side: L * sum_tau c_f[tau] c_g[-tau].
inline cplx lattice_pairing(const SampledSignal& f, const SampledSignal& g) {
    if (f.lattice() != g.lattice()) throw lattice_mismatch_error("pairing: lattice mismatch");
    const auto& lat = f.lattice();
    cplx acc{0.0, 0.0};
    for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
        const int neg = -k;
        if (neg < lat.min_index() || neg > lat.max_index()) continue;
        acc += f.coefficient(k) * g.coefficient(neg);
    }
    return lat.length * acc;
}

/// Reference trilinear chain with the pinned closed final comparison.
inline SampledSignal trilinear_chain_reference(const SampledSignal& f1, const SampledSignal& f2,
                                               const SampledSignal& f3) {
    detail::check_common_lattice({f1, f2, f3});
    detail::check_band({f1, f2, f3}, f1.lattice().band_limit(3));
    auto out = detail::indexed_sum({&f1, &f2, &f3}, [](std::span<const int> k) {
        return (k[0] < k[1] && 2 * k[1] + k[2] <= 0) ? 1.0 : 0.0;
    });
    return SampledSignal::from_coefficients(f1.lattice(), std::move(out));
}

/// Sup-norm coefficient residual of the three-term trilinear decomposition
///
///   T(f1, f2, f3) = P - H+(P) - H-(f1 * S(f3, f2)),   P = C(f1, f2) * f3
///
/// with C the strict increasing bilinear chain and S the strict chain for
/// slopes (-2, 1).  Exact on the lattice under the pinned conventions.
inline double residual_trilinear_identity(const SampledSignal& f1, const SampledSignal& f2,
                                          const SampledSignal& f3) {
    auto lhs = trilinear_chain_reference(f1, f2, f3);

    auto c12 = apply_simplex_dp(SlopeVector{1.0, 1.0}, {f1, f2});
    auto p = pointwise_product(c12, f3);
    auto term2 = half_line_projection(p, HalfLine::positive);
    auto inner = apply_simplex_dp(SlopeVector{-2.0, 1.0}, {f3, f2});
    auto term3 = half_line_projection(pointwise_product(f1, inner), HalfLine::negative);

    const auto& lat = f1.lattice();
    std::vector<cplx> rhs(static_cast<std::size_t>(lat.samples));
    for (int i = 0; i < lat.samples; ++i)
        rhs[static_cast<std::size_t>(i)] = p.coefficients()[static_cast<std::size_t>(i)] -
                                           term2.coefficients()[static_cast<std::size_t>(i)] -
                                           term3.coefficients()[static_cast<std::size_t>(i)];
    return detail::sup_abs_diff(lhs.coefficients(), rhs);
}

/// Exhaustive check of the index-set identity behind the trilinear
/// decomposition over the cube [-B, B]^3.
struct FrequencySetReport {
    long total = 0;
    long boundary = 0;                // tuples with some pinned tie active
    long violations_off_boundary = 0;
    long violations_on_boundary = 0;
};

inline FrequencySetReport frequency_set_identity_check(int B) {
    FrequencySetReport rep;
    for (int k1 = -B; k1 <= B; ++k1)
        for (int k2 = -B; k2 <= B; ++k2)
            for (int k3 = -B; k3 <= B; ++k3) {
                ++rep.total;
                const int sum = k1 + k2 + k3;
                const int lhs = (k1 < k2 && 2 * k2 + k3 <= 0) ? 1 : 0;
                const int t1 = (k1 < k2) ? 1 : 0;
                const int t2 = (k1 < k2 && sum > 0) ? 1 : 0;
                const int t3 = (sum <= 0 && -k3 < 2 * k2) ? 1 : 0;
                const bool boundary = (k1 == k2) || (2 * k2 + k3 == 0) || (sum == 0);
                if (boundary) ++rep.boundary;
                if (lhs != t1 - t2 - t3) {
                    if (boundary)
                        ++rep.violations_on_boundary;
                    else
                        ++rep.violations_off_boundary;
                }
            }
    return rep;
}

/// Sup-norm coefficient residual of the four-term quadlinear decomposition
///
///   T(f1, f2, f3, f4) = C(f1, f2, f3) * f4
///                     - T_{k1<k2<k3, k2+k3+k4>0}(f1, f2, f3, f4)
///                     - U(f1, f2, S(f4, f3))
///
/// where C is the strict trilinear chain, S the strict (-2, 1) chain, and U
/// the trilinear chain whose final comparison k2 <= -eta is closed.
inline double residual_quadlinear_identity(const SampledSignal& f1, const SampledSignal& f2,
                                           const SampledSignal& f3, const SampledSignal& f4) {
    detail::check_common_lattice({f1, f2, f3, f4});
    const auto& lat = f1.lattice();
    detail::check_band({f1, f2, f3, f4}, lat.band_limit(4));

    auto lhs = detail::indexed_sum({&f1, &f2, &f3, &f4}, [](std::span<const int> k) {
        return (k[0] < k[1] && k[1] < k[2] && 2 * k[2] + k[3] <= 0) ? 1.0 : 0.0;
    });

    auto c123 = apply_simplex_dp(SlopeVector{1.0, 1.0, 1.0}, {f1, f2, f3});
    auto term1 = pointwise_product(c123, f4);
    auto term2 = detail::indexed_sum({&f1, &f2, &f3, &f4}, [](std::span<const int> k) {
        return (k[0] < k[1] && k[1] < k[2] && k[1] + k[2] + k[3] > 0) ? 1.0 : 0.0;
    });
    auto inner = apply_simplex_dp(SlopeVector{-2.0, 1.0}, {f4, f3});
    auto term3 = detail::indexed_sum({&f1, &f2, &inner}, [](std::span<const int> k) {
        return (k[0] < k[1] && k[1] + k[2] <= 0) ? 1.0 : 0.0;
    });

    std::vector<cplx> rhs(static_cast<std::size_t>(lat.samples));
    for (int i = 0; i < lat.samples; ++i)
        rhs[static_cast<std::size_t>(i)] = term1.coefficients()[static_cast<std::size_t>(i)] -
                                           term2[static_cast<std::size_t>(i)] -
                                           term3[static_cast<std::size_t>(i)];
    return detail::sup_abs_diff(lhs, rhs);
}

struct AdjointResult {
    SampledSignal adjoint;
    double duality_residual = 0.0;
};

/// Third-slot adjoint of the reference trilinear chain:
///
///   T*(f1, f2, f3) = C(f1, f2) * f3 - C(f1, f2) * H-(f3) - C(f1 * H+(f3), f2)
///
/// satisfying the pairing identity
///   integral T(f1, f2, f4) f3 = integral T*(f1, f2, f3) f4
/// exactly on the lattice.  The residual is evaluated against the supplied
/// f4 with the real (non-conjugate) pairing.
inline AdjointResult adjoint_c3(const SampledSignal& f1, const SampledSignal& f2,
                                const SampledSignal& f3, const SampledSignal& f4) {
    detail::check_common_lattice({f1, f2, f3, f4});
    const auto& lat = f1.lattice();
    detail::check_band({f1, f2, f3, f4}, lat.band_limit(3));

    auto c12 = apply_simplex_dp(SlopeVector{1.0, 1.0}, {f1, f2});
    auto term1 = pointwise_product(c12, f3);
    auto term2 = pointwise_product(c12, half_line_projection(f3, HalfLine::negative));
    auto g = pointwise_product(f1, half_line_projection(f3, HalfLine::positive));
    auto term3_c = detail::indexed_sum({&g, &f2}, [](std::span<const int> k) {
        return (k[0] < k[1]) ? 1.0 : 0.0;
    });

    std::vector<cplx> adj(static_cast<std::size_t>(lat.samples));
    for (int i = 0; i < lat.samples; ++i)
        adj[static_cast<std::size_t>(i)] = term1.coefficients()[static_cast<std::size_t>(i)] -
                                           term2.coefficients()[static_cast<std::size_t>(i)] -
                                           term3_c[static_cast<std::size_t>(i)];
    AdjointResult result{SampledSignal::from_coefficients(lat, std::move(adj)), 0.0};

    auto direct = trilinear_chain_reference(f1, f2, f4);
    const cplx lhs = lattice_pairing(direct, f3);
    const cplx rhs = lattice_pairing(result.adjoint, f4);
    result.duality_residual = std::abs(lhs - rhs);
    return result;
}

/// On the zero-sum frequency set the (-2, 1) chain pairs with the strict
/// increasing chain after cycling the third function to the front:
///   integral S(f, g) h = integral C(h, g) f.
/// Returns the absolute difference of the two lattice pairings.
inline double duality_flip_check(const SampledSignal& f, const SampledSignal& g,
                                 const SampledSignal& h) {
    detail::check_common_lattice({f, g, h});
    detail::check_band({f, g, h}, f.lattice().band_limit(3));
    auto s = apply_simplex_dp(SlopeVector{-2.0, 1.0}, {f, g});
    auto c = apply_simplex_dp(SlopeVector{1.0, 1.0}, {h, g});
    return std::abs(lattice_pairing(s, h) - lattice_pairing(c, f));
}

}  // namespace latmul
