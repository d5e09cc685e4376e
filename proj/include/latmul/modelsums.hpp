#pragma once
// Finite model sums over multi-tile collections.  A bilinear tile operator
// built from wave packets feeds three nested multilinear forms; tree sizes,
// energies, and a greedy tree-selection split a collection into layers with
// controlled size.  Everything here is a finite, exactly-specified sum, so
// each operation has a direct summation oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "latmul/grid.hpp"
#include "latmul/rational.hpp"
#include "latmul/tiles.hpp"
#include "latmul/wavepackets.hpp"

namespace latmul {

// ---------------------------------------------------------------------------
// Containment predicates on frequency intervals.

/// Constants steering the "much smaller and well inside" relation: the inner
/// interval must be at most 1/length_ratio as long as the outer one and must
/// sit inside the interior-contracted outer interval.
struct ContainmentConstants {
    Rational length_ratio = Rational(8);
    Rational interior = Rational(9, 10);
};

inline bool well_inside(const RInterval& inner, const RInterval& outer,
                        const ContainmentConstants& cc = {}) {
    return inner.length() * cc.length_ratio <= outer.length() &&
           outer.dilate(cc.interior).contains(inner);
}

/// Lengths within a factor of length_ratio of each other (exclusive at the
/// ends, so the relation is the complement of the two one-sided length gaps).
inline bool length_comparable(const RInterval& a, const RInterval& b,
                              const ContainmentConstants& cc = {}) {
    return a.length() * cc.length_ratio > b.length() &&
           b.length() * cc.length_ratio > a.length();
}

// ---------------------------------------------------------------------------
// The degenerate lines each collection clusters around.

inline LineSpec lambda1_line() { return LineSpec{{1, 2, -3}}; }
inline LineSpec lambda2_line() { return LineSpec{{1, -1, 0}}; }
inline LineSpec lambda3_line() { return LineSpec{{0, 1, -1}}; }
inline LineSpec bht_line() { return LineSpec{{1, -2, -1}}; }

struct AdaptedCheck {
    bool ok = true;
    std::size_t offender = 0;
    Rational ratio{0};
};

/// Whitney fit of a collection to a line: every frequency cube must sit at a
/// distance between lo and hi times its side length.  Reports the first
/// offender with its actual ratio.
inline AdaptedCheck check_adapted(const std::vector<TriTile>& tiles, const LineSpec& line,
                                  const Rational& lo = Rational(1),
                                  const Rational& hi = Rational(4)) {
    AdaptedCheck result;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i].arity() != 3)
            throw std::invalid_argument("check_adapted: collections must have arity 3");
        const Rational side = tiles[i].component(0).interval.length();
        const Rational dist = line_distance(line, tiles[i].frequency_cube());
        const Rational ratio = dist / side;
        if (ratio < lo || ratio > hi) {
            result.ok = false;
            result.offender = i;
            result.ratio = ratio;
            return result;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Configuration shared by the multilinear forms.

/// Tile collections plus the knobs that pin down every sum exactly: the
/// translation-average node count, the containment constants, the relaxed
/// tile-order dilation, the Whitney band for collection validation, and the
/// mother profile for all packets.
struct ModelConfig {
    std::vector<TriTile> p_tiles;
    std::vector<TriTile> q_tiles;
    std::vector<TriTile> r_tiles;
    int alpha_nodes = 8;
    ContainmentConstants containment;
    Rational order_dilation = Rational(8);
    Rational adapted_lo = Rational(1);
    Rational adapted_hi = Rational(4);
    MotherBump mother;
};

namespace detail {

inline void require_adapted(const std::vector<TriTile>& tiles, const LineSpec& line,
                            const Rational& lo, const Rational& hi, const char* what) {
    const AdaptedCheck check = check_adapted(tiles, line, lo, hi);
    if (!check.ok)
        throw std::invalid_argument(std::string(what) + ": tile " +
                                    std::to_string(check.offender) +
                                    " is off the Whitney band, ratio " + check.ratio.str());
}

inline void require_rank1(const std::vector<TriTile>& tiles, const Rational& dilation,
                          const char* what) {
    Rank1Options opts;
    opts.order_dilation = dilation;
    opts.scale_gap = dilation;
    const Rank1Check check = check_rank1(tiles, opts);
    if (!check.ok)
        throw std::invalid_argument(std::string(what) + ": collection is not rank-1");
}

/// Deterministic reduction-tree sum: adjacent pairs are combined until one
/// value remains.  For a fixed term order the result is reproducible to the
/// bit; reassociation under permutations stays within a few ulps per level.
inline cplx pairwise_sum(std::vector<cplx> terms) {
    if (terms.empty()) return cplx{0.0, 0.0};
    while (terms.size() > 1) {
        std::vector<cplx> next;
        next.reserve((terms.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < terms.size(); i += 2) next.push_back(terms[i] + terms[i + 1]);
        if (terms.size() % 2 == 1) next.push_back(terms.back());
        terms = std::move(next);
    }
    return terms.front();
}

/// Midpoint nodes for the translation average over [0,1].
inline std::vector<double> average_nodes(int count) {
    if (count < 1) throw std::invalid_argument("average_nodes: need at least one node");
    std::vector<double> nodes(static_cast<std::size_t>(count));
    for (int m = 0; m < count; ++m)
        nodes[static_cast<std::size_t>(m)] = (static_cast<double>(m) + 0.5) / count;
    return nodes;
}

inline long long floor_ratio(const Rational& r) {
    long long q = r.num() / r.den();
    if (r.num() % r.den() != 0 && r.num() < 0) --q;
    return q;
}

inline long long ceil_ratio(const Rational& r) {
    long long q = r.num() / r.den();
    if (r.num() % r.den() != 0 && r.num() > 0) ++q;
    return q;
}

}  // namespace detail

inline void validate_bht_collection(const ModelConfig& config) {
    detail::require_rank1(config.q_tiles, config.order_dilation, "validate_bht_collection");
    detail::require_adapted(config.q_tiles, bht_line(), config.adapted_lo, config.adapted_hi,
                            "validate_bht_collection");
}

inline void validate_lambda1(const ModelConfig& config) {
    validate_bht_collection(config);
    detail::require_adapted(config.p_tiles, lambda1_line(), config.adapted_lo, config.adapted_hi,
                            "validate_lambda1");
}

inline void validate_lambda2(const ModelConfig& config) {
    validate_bht_collection(config);
    detail::require_adapted(config.p_tiles, lambda2_line(), config.adapted_lo, config.adapted_hi,
                            "validate_lambda2");
}

/// The auxiliary collection of the five-function form carries generalized
/// frequency components tied together by reflection: the second component is
/// the mirror of the first and the third is centered at the origin.
inline void validate_lambda3(const ModelConfig& config) {
    validate_bht_collection(config);
    detail::require_adapted(config.p_tiles, lambda3_line(), config.adapted_lo, config.adapted_hi,
                            "validate_lambda3");
    for (std::size_t i = 0; i < config.r_tiles.size(); ++i) {
        const TriTile& r = config.r_tiles[i];
        if (r.arity() != 3)
            throw std::invalid_argument("validate_lambda3: reflection tiles must have arity 3");
        if (!(r.component(1).interval == r.component(0).interval.negate()))
            throw std::invalid_argument("validate_lambda3: second component must mirror the first");
        if (!(r.component(2).interval.center() == Rational(0)))
            throw std::invalid_argument("validate_lambda3: third component must be origin-centered");
    }
}

/// The first component's interval translated right by its own length; the
/// membership window that couples the outer and auxiliary collections.
inline RInterval translated_window(const TriTile& r) {
    const RInterval& w = r.component(0).interval;
    return RInterval{w.lo + w.length(), w.hi + w.length()};
}

// ---------------------------------------------------------------------------
// The bilinear tile operator.

/// Sum over tiles whose third frequency component sits well inside cap of
/// |I|^{-1/2} <f1, packet_1> <f2, packet_2> packet_3, all three packets
/// translated by alpha.  Variants 3, 4, 5 mark the slots.
inline SampledSignal bht_model(const RInterval& cap, double alpha,
                               const std::vector<TriTile>& q_tiles, const SampledSignal& f1,
                               const SampledSignal& f2, const MotherBump& mother = {},
                               const ContainmentConstants& cc = {}) {
    if (!(f1.lattice() == f2.lattice()))
        throw lattice_mismatch_error("bht_model: operands on different lattices");
    const FrequencyLattice lat = f1.lattice();
    std::vector<cplx> acc(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
    for (const TriTile& q : q_tiles) {
        if (q.arity() != 3) throw std::invalid_argument("bht_model: tiles must have arity 3");
        if (!well_inside(q.component(2).interval, cap, cc)) continue;
        const double len = q.time_interval().length().to_double();
        const cplx c1 = packet_coeff(f1, slot_packet(lat, q, 0, mother, {3, PacketKind::standard, alpha}));
        const cplx c2 = packet_coeff(f2, slot_packet(lat, q, 1, mother, {4, PacketKind::standard, alpha}));
        const WavePacket out = slot_packet(lat, q, 2, mother, {5, PacketKind::standard, alpha});
        const cplx w = c1 * c2 / std::sqrt(len);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += w * out.signal.samples()[j];
    }
    return SampledSignal(lat, std::move(acc));
}

namespace detail {

/// Translation-averaged pairing <avg_alpha bht_model(...), probe>.
inline cplx averaged_bht_pairing(const RInterval& cap, const std::vector<TriTile>& q_tiles,
                                 const SampledSignal& f1, const SampledSignal& f2,
                                 const WavePacket& probe, int nodes, const MotherBump& mother,
                                 const ContainmentConstants& cc) {
    const std::vector<double> alphas = average_nodes(nodes);
    cplx acc{0.0, 0.0};
    for (const double a : alphas)
        acc += grid_inner(bht_model(cap, a, q_tiles, f1, f2, mother, cc), probe.signal);
    return acc / static_cast<double>(alphas.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The multilinear forms.

/// Four-function form: each outer tile couples f1 and f4 through its first
/// and third slots while the middle slot tests the bilinear operator capped
/// at the middle frequency component, with the inner translation frozen at 0.
inline cplx lambda1_form(const ModelConfig& config, const SampledSignal& f1,
                         const SampledSignal& f2, const SampledSignal& f3,
                         const SampledSignal& f4) {
    validate_lambda1(config);
    const FrequencyLattice lat = f1.lattice();
    std::vector<cplx> terms;
    terms.reserve(config.p_tiles.size());
    for (const TriTile& p : config.p_tiles) {
        const double len = p.time_interval().length().to_double();
        const cplx a1 = packet_coeff(f1, slot_packet(lat, p, 0, config.mother, {1}));
        const cplx a4 = packet_coeff(f4, slot_packet(lat, p, 2, config.mother, {4}));
        const WavePacket probe = slot_packet(lat, p, 1, config.mother, {0});
        const cplx mid = grid_inner(
            bht_model(p.component(1).interval, 0.0, config.q_tiles, f2, f3, config.mother,
                      config.containment),
            probe.signal);
        terms.push_back(a1 * a4 * mid / std::sqrt(len));
    }
    return detail::pairwise_sum(std::move(terms));
}

/// Same shape with the inner operator averaged over the translation knob.
inline cplx lambda2_form(const ModelConfig& config, const SampledSignal& f1,
                         const SampledSignal& f2, const SampledSignal& f3,
                         const SampledSignal& f4) {
    validate_lambda2(config);
    const FrequencyLattice lat = f1.lattice();
    std::vector<cplx> terms;
    terms.reserve(config.p_tiles.size());
    for (const TriTile& p : config.p_tiles) {
        const double len = p.time_interval().length().to_double();
        const cplx a1 = packet_coeff(f1, slot_packet(lat, p, 0, config.mother, {1}));
        const cplx a4 = packet_coeff(f4, slot_packet(lat, p, 2, config.mother, {4}));
        const WavePacket probe = slot_packet(lat, p, 1, config.mother, {0});
        const cplx mid = detail::averaged_bht_pairing(p.component(1).interval, config.q_tiles, f2,
                                                      f3, probe, config.alpha_nodes, config.mother,
                                                      config.containment);
        terms.push_back(a1 * a4 * mid / std::sqrt(len));
    }
    return detail::pairwise_sum(std::move(terms));
}

/// Five-function form: the first slot is tested with a gapped packet against
/// a superposition assembled from the reflection collection, gated by an
/// exact rational membership test; the third slot tests the averaged
/// bilinear operator.
inline cplx lambda3_form(const ModelConfig& config, const SampledSignal& f1,
                         const SampledSignal& f2, const SampledSignal& f3,
                         const SampledSignal& f4, const SampledSignal& f5) {
    validate_lambda3(config);
    const FrequencyLattice lat = f1.lattice();
    std::vector<cplx> terms;
    terms.reserve(config.p_tiles.size());
    for (const TriTile& p : config.p_tiles) {
        const double len = p.time_interval().length().to_double();
        const Rational gate =
            (p.component(1).interval.center() - p.component(2).interval.center()) / 2;

        std::vector<cplx> inner(static_cast<std::size_t>(lat.samples), cplx{0.0, 0.0});
        for (const TriTile& r : config.r_tiles) {
            if (!translated_window(r).contains_point(gate)) continue;
            const double rlen = r.time_interval().length().to_double();
            const cplx c1 = packet_coeff(f1, slot_packet(lat, r, 0, config.mother, {1}));
            const cplx c5 = packet_coeff(f5, slot_packet(lat, r, 1, config.mother, {5}));
            const WavePacket out = slot_packet(lat, r, 2, config.mother, {0});
            const cplx w = c1 * c5 / std::sqrt(rlen);
            for (std::size_t j = 0; j < inner.size(); ++j)
                inner[j] += w * out.signal.samples()[j];
        }
        const WavePacket gap = slot_packet(lat, p, 0, config.mother, {6, PacketKind::gapped});
        const cplx t1 = grid_inner(SampledSignal(lat, std::move(inner)), gap.signal);
        const cplx t2 = packet_coeff(f2, slot_packet(lat, p, 1, config.mother, {2}));
        const WavePacket probe = slot_packet(lat, p, 2, config.mother, {7});
        const cplx t3 = detail::averaged_bht_pairing(p.component(2).interval, config.q_tiles, f3,
                                                     f4, probe, config.alpha_nodes, config.mother,
                                                     config.containment);
        terms.push_back(t1 * t2 * t3 / std::sqrt(len));
    }
    return detail::pairwise_sum(std::move(terms));
}

// ---------------------------------------------------------------------------
// Tree sizes: sup over trees of the normalized coefficient mass.

namespace detail {

/// Exact sup over unit-area top tiles s of sqrt(sum of masses of tiles whose
/// chosen slot sits at or below s, divided by |I_s|).  Candidate tops are the
/// members' own slot tiles plus, at every coarser time scale, the frequency
/// cells at membership-pattern breakpoints; the pattern between breakpoints
/// is constant, so the enumeration loses nothing.
inline double size_sup(const std::vector<TriTile>& tiles, const std::vector<double>& masses,
                       std::size_t slot) {
    if (tiles.size() != masses.size())
        throw std::invalid_argument("size_sup: one mass per tile required");
    double total = 0.0;
    double best = 0.0;
    int js_min = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (!tiles[i].component(slot).on_mesh)
            throw std::invalid_argument("size_sup: slot must lie on the mesh");
        total += masses[i];
        const int js = tiles[i].time_cell().j;
        js_min = std::min(js_min, js);
        if (masses[i] <= 0.0) continue;
        // Top equal to the tile's own slot: the tree of everything at or
        // below that exact tile.
        const Tile own{tiles[i].time_cell(), tiles[i].component(slot).mesh};
        double mass = 0.0;
        for (std::size_t k = 0; k < tiles.size(); ++k)
            if (tile_le(tiles[k].slot(slot), rect_of(own))) mass += masses[k];
        best = std::max(best, std::sqrt(mass / std::ldexp(1.0, js)));
    }
    if (total <= 0.0) return 0.0;

    for (int js = js_min + 1;; ++js) {
        // A coarser top cannot beat the current best once even the full mass
        // is too dilute at that scale.
        if (best > 0.0 && std::ldexp(best * best, js) > total) break;
        if (js > js_min + 128) break;
        const Rational half_span = Rational(3) * Rational::pow2(-js) / 2;
        // Time cells: ancestors of each member's time cell at scale js.
        std::vector<long long> time_ks;
        for (const TriTile& t : tiles) {
            if (t.time_cell().j >= js) continue;
            const int up = js - t.time_cell().j;
            long long k = t.time_cell().k;
            // Arithmetic shift keeps the floor division exact for negatives.
            k = (k >= 0) ? (k >> up) : ~((~k) >> up);
            time_ks.push_back(k);
        }
        std::sort(time_ks.begin(), time_ks.end());
        time_ks.erase(std::unique(time_ks.begin(), time_ks.end()), time_ks.end());
        for (const long long tk : time_ks) {
            for (int sigma = 0; sigma < 3; ++sigma) {
                const Rational shift = ShiftedDyadicInterval(-js, 0, sigma).signed_shift();
                std::vector<long long> freq_ks;
                for (const TriTile& t : tiles) {
                    const RInterval frame = t.component(slot).interval.dilate(3);
                    // Centers c with [c - half_span, c + half_span] inside
                    // frame, where c = 2^{-js}(k + 1/2) + shift.
                    const Rational lo =
                        (frame.lo + half_span - shift) * Rational::pow2(js) - Rational(1, 2);
                    const Rational hi =
                        (frame.hi - half_span - shift) * Rational::pow2(js) - Rational(1, 2);
                    if (hi < lo) continue;
                    freq_ks.push_back(ceil_ratio(lo));
                    freq_ks.push_back(floor_ratio(hi));
                }
                std::sort(freq_ks.begin(), freq_ks.end());
                freq_ks.erase(std::unique(freq_ks.begin(), freq_ks.end()), freq_ks.end());
                for (const long long fk : freq_ks) {
                    const Tile top{ShiftedDyadicInterval(js, tk, 0),
                                   ShiftedDyadicInterval(-js, fk, sigma)};
                    double mass = 0.0;
                    for (std::size_t k = 0; k < tiles.size(); ++k)
                        if (tile_le(tiles[k].slot(slot), rect_of(top))) mass += masses[k];
                    if (mass > 0.0) best = std::max(best, std::sqrt(mass / std::ldexp(1.0, js)));
                }
            }
        }
    }
    return best;
}

}  // namespace detail

/// Coefficient of f against the first-slot packet, the quantity every
/// selection and size below is built from.
inline cplx selection_coeff(const TriTile& tile, const SampledSignal& f, int variant = 1,
                            const MotherBump& mother = {}) {
    return packet_coeff(f, slot_packet(f.lattice(), tile, 0, mother, {variant}));
}

/// Sup over trees comparable in the middle slot of the normalized first-slot
/// coefficient mass.
inline double size_1(const std::vector<TriTile>& p_sub, const SampledSignal& f,
                     const MotherBump& mother = {}) {
    std::vector<double> masses;
    masses.reserve(p_sub.size());
    for (const TriTile& p : p_sub) masses.push_back(std::norm(selection_coeff(p, f, 1, mother)));
    return detail::size_sup(p_sub, masses, 1);
}

/// The three squared pairings entering the middle-slot mass of one tile: the
/// capped operator sum, the tiles whose third component strictly dominates
/// the middle slot, and the tiles of comparable length.
struct MiddleBlocks {
    cplx capped{0.0, 0.0};
    cplx dominating{0.0, 0.0};
    cplx comparable{0.0, 0.0};

    double mass() const { return std::norm(capped) + std::norm(dominating) + std::norm(comparable); }
};

inline MiddleBlocks middle_blocks(const TriTile& p, const std::vector<TriTile>& q_tiles,
                                  const SampledSignal& f2, const SampledSignal& f3,
                                  int alpha_nodes = 8, const MotherBump& mother = {},
                                  const ContainmentConstants& cc = {}) {
    const FrequencyLattice lat = f2.lattice();
    const RInterval mid = p.component(1).interval;
    const WavePacket probe = slot_packet(lat, p, 1, mother, {0});
    MiddleBlocks out;
    out.capped = detail::averaged_bht_pairing(mid, q_tiles, f2, f3, probe, alpha_nodes, mother, cc);

    const std::vector<double> alphas = detail::average_nodes(alpha_nodes);
    cplx dom{0.0, 0.0};
    cplx comp{0.0, 0.0};
    for (const double a : alphas) {
        for (const TriTile& q : q_tiles) {
            const RInterval third = q.component(2).interval;
            const bool dominating = well_inside(mid, third, cc);
            const bool comparable = length_comparable(third, mid, cc);
            if (!dominating && !comparable) continue;
            const double len = q.time_interval().length().to_double();
            const cplx c2 =
                packet_coeff(f2, slot_packet(lat, q, 0, mother, {2, PacketKind::standard, a}));
            const cplx c3 =
                packet_coeff(f3, slot_packet(lat, q, 1, mother, {3, PacketKind::standard, a}));
            const WavePacket outp = slot_packet(lat, q, 2, mother, {5, PacketKind::standard, a});
            const cplx w = c2 * c3 / std::sqrt(len) * grid_inner(outp.signal, probe.signal);
            if (dominating) dom += w;
            if (comparable) comp += w;
        }
    }
    out.dominating = dom / static_cast<double>(alphas.size());
    out.comparable = comp / static_cast<double>(alphas.size());
    return out;
}

/// Sup over trees comparable in the first slot of the normalized three-block
/// middle-slot mass.
inline double size_0(const std::vector<TriTile>& p_sub, const std::vector<TriTile>& q_sub,
                     const SampledSignal& f2, const SampledSignal& f3, int alpha_nodes = 8,
                     const MotherBump& mother = {}, const ContainmentConstants& cc = {}) {
    std::vector<double> masses;
    masses.reserve(p_sub.size());
    for (const TriTile& p : p_sub)
        masses.push_back(middle_blocks(p, q_sub, f2, f3, alpha_nodes, mother, cc).mass());
    return detail::size_sup(p_sub, masses, 0);
}

// ---------------------------------------------------------------------------
// Greedy tree selection.

/// One harvested tree: the top tile from the collection, the members taken
/// with it (top included), the companion tiles removed alongside because
/// their first slot sits below the top's, and the coefficient mass.
struct SelectedTree {
    TriTile top;
    std::vector<TriTile> members;
    std::vector<TriTile> companion;
    bool upward = true;
    double mass = 0.0;
};

struct TreeSelectResult {
    std::vector<SelectedTree> trees;
    std::vector<TriTile> residual;
    int level = 0;
    double threshold_scale = 0.0;  // mass must reach threshold_scale * |I_top|
};

struct SelectOptions {
    int variant = 1;
    MotherBump mother;
    Rational order_dilation = Rational(8);
};

namespace detail {

inline Rational slot_center(const TriTile& t, std::size_t slot) {
    return t.component(slot).interval.center();
}

struct CandidateTree {
    std::size_t top = 0;
    std::vector<std::size_t> members;
    double mass = 0.0;
};

/// Member test for a candidate tree: middle slot at or below the top's and,
/// except for the top itself, first slot in the strict relaxed order with
/// the center on the required side.
inline CandidateTree grow_tree(const std::vector<TriTile>& tiles, const std::vector<char>& alive,
                               const std::vector<double>& masses, std::size_t top, bool upward,
                               const Rational& dilation) {
    const TimeFreqRect top_mid = tiles[top].slot(1);
    const TimeFreqRect top_first = tiles[top].slot(0);
    const Rational top_center = slot_center(tiles[top], 0);
    CandidateTree tree;
    tree.top = top;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (!alive[i]) continue;
        if (i == top) {
            tree.members.push_back(i);
            tree.mass += masses[i];
            continue;
        }
        if (!tile_le(tiles[i].slot(1), top_mid)) continue;
        if (!tile_lesssim_prime(tiles[i].slot(0), top_first, dilation)) continue;
        const Rational center = slot_center(tiles[i], 0);
        if (upward ? (center > top_center) : (center < top_center)) {
            tree.members.push_back(i);
            tree.mass += masses[i];
        }
    }
    return tree;
}

}  // namespace detail

/// Builds the comparability-tree object for a harvested tree: members are
/// dominated by the top's middle slot.
inline Tree selection_tree(const SelectedTree& sel) {
    if (!sel.top.component(1).on_mesh)
        throw std::invalid_argument("selection_tree: top middle slot must lie on the mesh");
    return Tree(sel.members, Tile{sel.top.time_cell(), sel.top.component(1).mesh}, 1);
}

/// The harvested trees of one direction, in selection order, as tree objects
/// ready for the strong-disjointness check.
inline std::vector<Tree> selection_chain(const TreeSelectResult& result, bool upward) {
    std::vector<Tree> chain;
    for (const SelectedTree& sel : result.trees)
        if (sel.upward == upward) chain.push_back(selection_tree(sel));
    return chain;
}

/// Iterative greedy harvest at threshold scale 2^{-2 level - 3}: among trees
/// whose first-slot centers sit above their top's (upward), repeatedly take
/// the qualifying tree with the largest top center, remove it together with
/// its companion (everything with first slot at or below the top's), then
/// repeat downward with the smallest center.  Terminates by finiteness; the
/// residual carries no qualifying tree of either direction.
inline TreeSelectResult tree_select(const std::vector<TriTile>& p_tiles, const SampledSignal& f,
                                    int level, const SelectOptions& opts = {}) {
    for (const TriTile& p : p_tiles) {
        if (p.arity() != 3) throw std::invalid_argument("tree_select: tiles must have arity 3");
        if (!p.component(1).on_mesh)
            throw std::invalid_argument("tree_select: middle slots must lie on the mesh");
    }
    TreeSelectResult result;
    result.level = level;
    result.threshold_scale = std::ldexp(1.0, -2 * level - 3);

    std::vector<double> masses;
    masses.reserve(p_tiles.size());
    for (const TriTile& p : p_tiles)
        masses.push_back(std::norm(selection_coeff(p, f, opts.variant, opts.mother)));

    std::vector<char> alive(p_tiles.size(), 1);
    for (const bool upward : {true, false}) {
        for (;;) {
            std::optional<detail::CandidateTree> chosen;
            for (std::size_t top = 0; top < p_tiles.size(); ++top) {
                if (!alive[top]) continue;
                detail::CandidateTree tree =
                    detail::grow_tree(p_tiles, alive, masses, top, upward, opts.order_dilation);
                const double need =
                    result.threshold_scale * p_tiles[top].time_interval().length().to_double();
                if (tree.mass < need) continue;
                if (!chosen) {
                    chosen = std::move(tree);
                    continue;
                }
                const Rational c_new = detail::slot_center(p_tiles[tree.top], 0);
                const Rational c_old = detail::slot_center(p_tiles[chosen->top], 0);
                const bool better_center = upward ? (c_new > c_old) : (c_new < c_old);
                const bool tie_center = c_new == c_old;
                const bool better_size = tie_center && tree.members.size() > chosen->members.size();
                const bool tie_size = tie_center && tree.members.size() == chosen->members.size();
                const bool better_text =
                    tie_size && to_text(p_tiles[tree.top]) < to_text(p_tiles[chosen->top]);
                if (better_center || better_size || better_text) chosen = std::move(tree);
            }
            if (!chosen) break;

            SelectedTree sel{p_tiles[chosen->top], {}, {}, upward, chosen->mass};
            for (const std::size_t i : chosen->members) {
                sel.members.push_back(p_tiles[i]);
                alive[i] = 0;
            }
            const TimeFreqRect top_first = p_tiles[chosen->top].slot(0);
            for (std::size_t i = 0; i < p_tiles.size(); ++i) {
                if (!alive[i]) continue;
                if (tile_le(p_tiles[i].slot(0), top_first)) {
                    sel.companion.push_back(p_tiles[i]);
                    alive[i] = 0;
                }
            }
            result.trees.push_back(std::move(sel));
        }
    }
    for (std::size_t i = 0; i < p_tiles.size(); ++i)
        if (alive[i]) result.residual.push_back(p_tiles[i]);
    return result;
}

// ---------------------------------------------------------------------------
// Layered decomposition by decreasing threshold.

struct SizePart {
    int level = 0;
    std::vector<TriTile> part;
    std::vector<SelectedTree> trees;
    double part_size = 0.0;  // size_1 of the part, re-evaluated
};

/// Repeated harvest at levels n, n+1, ...: each round's selected trees and
/// companions form one part; tiles with exactly zero coefficient mass end in
/// a final silent part.  The parts partition the input.
inline std::vector<SizePart> size_decompose(const std::vector<TriTile>& p_tiles,
                                            const SampledSignal& f,
                                            const SelectOptions& opts = {}) {
    std::vector<SizePart> parts;
    if (p_tiles.empty()) return parts;
    std::vector<TriTile> remaining = p_tiles;
    const double start_size = size_1(remaining, f, opts.mother);
    if (start_size <= 0.0) {
        parts.push_back(SizePart{0, std::move(remaining), {}, 0.0});
        return parts;
    }
    int level = static_cast<int>(std::ceil(-std::log2(start_size)));
    for (int round = 0; !remaining.empty(); ++round) {
        if (round > 200)
            throw std::runtime_error("size_decompose: threshold ladder failed to terminate");
        bool any_mass = false;
        for (const TriTile& p : remaining)
            if (std::norm(selection_coeff(p, f, opts.variant, opts.mother)) > 0.0) {
                any_mass = true;
                break;
            }
        if (!any_mass) {
            parts.push_back(SizePart{level, std::move(remaining), {}, 0.0});
            break;
        }
        TreeSelectResult sel = tree_select(remaining, f, level, opts);
        if (!sel.trees.empty()) {
            SizePart part;
            part.level = level;
            for (const SelectedTree& t : sel.trees) {
                part.part.insert(part.part.end(), t.members.begin(), t.members.end());
                part.part.insert(part.part.end(), t.companion.begin(), t.companion.end());
            }
            part.trees = std::move(sel.trees);
            part.part_size = size_1(part.part, f, opts.mother);
            parts.push_back(std::move(part));
        }
        remaining = std::move(sel.residual);
        ++level;
    }
    return parts;
}

// ---------------------------------------------------------------------------
// Energy of a coefficient family.

struct EnergyResult {
    double value = 0.0;
    bool exact = true;
    int level = 0;            // the exponent attaining the sup
    std::size_t chain_trees = 0;
};

struct EnergyOptions {
    std::size_t max_exact_tiles = 12;
    Rational order_dilation = Rational(8);
};

namespace detail {

/// Concrete tree candidate for the energy search: member set, a witness top
/// tile, and the time scale that fixes |I_T|.  Candidates sharing a member
/// set carry the same set id, so at most one of them can enter a chain.
struct EnergyTree {
    std::vector<std::size_t> members;
    Tile top;
    double mass = 0.0;
    int scale = 0;
    std::size_t set_id = 0;

    double length() const { return std::ldexp(1.0, scale); }
};

/// Searches a witness top at time scale js dominating every listed slot
/// rect.  Time cells must share their ancestor at that scale; the frequency
/// cell is scanned at pattern breakpoints like the size sup.
inline std::optional<Tile> witness_top(const std::vector<TriTile>& tiles,
                                       const std::vector<std::size_t>& members, std::size_t slot,
                                       int js) {
    long long tk = 0;
    bool first = true;
    for (const std::size_t i : members) {
        const int jm = tiles[i].time_cell().j;
        if (jm > js) return std::nullopt;
        long long k = tiles[i].time_cell().k;
        if (jm < js) {
            const int up = js - jm;
            k = (k >= 0) ? (k >> up) : ~((~k) >> up);
        }
        if (first) {
            tk = k;
            first = false;
        } else if (k != tk) {
            return std::nullopt;
        }
    }
    // Members at the top scale force the top to equal their slot tile.
    std::optional<Tile> forced;
    for (const std::size_t i : members) {
        if (tiles[i].time_cell().j != js) continue;
        if (!tiles[i].component(slot).on_mesh) return std::nullopt;
        const Tile own{tiles[i].time_cell(), tiles[i].component(slot).mesh};
        if (forced && !(forced->freq == own.freq)) return std::nullopt;
        forced = own;
    }
    auto dominates_all = [&](const Tile& top) {
        for (const std::size_t i : members)
            if (!tile_le(tiles[i].slot(slot), rect_of(top))) return false;
        return true;
    };
    if (forced) return dominates_all(*forced) ? forced : std::nullopt;

    const Rational half_span = Rational(3) * Rational::pow2(-js) / 2;
    for (int sigma = 0; sigma < 3; ++sigma) {
        const Rational shift = ShiftedDyadicInterval(-js, 0, sigma).signed_shift();
        Rational lo(0);
        Rational hi(0);
        bool have = false;
        for (const std::size_t i : members) {
            const RInterval frame = tiles[i].component(slot).interval.dilate(3);
            const Rational l =
                (frame.lo + half_span - shift) * Rational::pow2(js) - Rational(1, 2);
            const Rational h =
                (frame.hi - half_span - shift) * Rational::pow2(js) - Rational(1, 2);
            if (!have) {
                lo = l;
                hi = h;
                have = true;
            } else {
                lo = std::max(lo, l);
                hi = std::min(hi, h);
            }
        }
        if (!have || hi < lo) continue;
        const long long klo = ceil_ratio(lo);
        if (Rational(klo) > hi) continue;
        const Tile top{ShiftedDyadicInterval(js, tk, 0), ShiftedDyadicInterval(-js, klo, sigma)};
        if (dominates_all(top)) return top;
    }
    return std::nullopt;
}

/// Ordered-chain compatibility of a new tree against every earlier one,
/// phrased through the strong-disjointness clauses.
inline bool chain_compatible(const std::vector<TriTile>& tiles, const std::vector<EnergyTree>& chain,
                             const EnergyTree& next, std::size_t slot) {
    for (const EnergyTree& prev : chain) {
        for (const std::size_t a : prev.members) {
            for (const std::size_t b : next.members) {
                if (tiles[a].slot(slot) == tiles[b].slot(slot)) return false;
                const RInterval wa = tiles[a].component(slot).interval;
                const RInterval wb = tiles[b].component(slot).interval;
                if (!wa.dilate(2).intersects_closed(wb.dilate(2))) continue;
                if (wa.length() < wb.length()) {
                    if (tiles[b].time_interval().intersects(prev.top.time.realize())) return false;
                } else if (wb.length() < wa.length()) {
                    if (tiles[a].time_interval().intersects(next.top.time.realize())) return false;
                } else {
                    if (tiles[b].time_interval().intersects(prev.top.time.realize())) return false;
                }
            }
        }
    }
    return true;
}

/// Pairwise constraint between two candidate trees under the disjointness
/// clauses.  Shared slot tiles or an unavoidable member/top overlap reject
/// the pair outright; equal-length frequency overlaps only pin which of the
/// two trees must come first in a valid chain order.
enum class PairOrder { reject, free, first_first, second_first };

inline PairOrder pair_order(const std::vector<TriTile>& tiles, const EnergyTree& s,
                            const EnergyTree& t, std::size_t slot) {
    bool s_first_ok = true;
    bool t_first_ok = true;
    for (const std::size_t a : s.members) {
        for (const std::size_t b : t.members) {
            if (tiles[a].slot(slot) == tiles[b].slot(slot)) return PairOrder::reject;
            const RInterval wa = tiles[a].component(slot).interval;
            const RInterval wb = tiles[b].component(slot).interval;
            if (!wa.dilate(2).intersects_closed(wb.dilate(2))) continue;
            if (wa.length() < wb.length()) {
                if (tiles[b].time_interval().intersects(s.top.time.realize()))
                    return PairOrder::reject;
            } else if (wb.length() < wa.length()) {
                if (tiles[a].time_interval().intersects(t.top.time.realize()))
                    return PairOrder::reject;
            } else {
                if (tiles[b].time_interval().intersects(s.top.time.realize())) s_first_ok = false;
                if (tiles[a].time_interval().intersects(t.top.time.realize())) t_first_ok = false;
                if (!s_first_ok && !t_first_ok) return PairOrder::reject;
            }
        }
    }
    if (s_first_ok && t_first_ok) return PairOrder::free;
    return s_first_ok ? PairOrder::first_first : PairOrder::second_first;
}

/// State of the exhaustive chain maximization.  A tree set admits a valid
/// chain order exactly when every pair is compatible and the forced
/// precedence edges are acyclic, so candidates are scanned once each in a
/// take-or-skip sweep; taking a candidate jumps past the rest of its member
/// set group.  bound[i] caps what positions i.. can still add, counting each
/// group once through its longest variant.
struct ChainContext {
    const std::vector<TriTile>& tiles;
    const std::vector<EnergyTree>& cand;
    const std::vector<std::size_t>& next_group;
    const std::vector<double>& bound;
    std::size_t slot;
    std::vector<std::size_t> picked;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<char> used;
    double best = 0.0;
    std::size_t best_count = 0;
    long long budget = 0;
};

inline bool chain_acyclic(const ChainContext& ctx) {
    const std::size_t n = ctx.picked.size();
    std::vector<int> indeg(n, 0);
    for (const auto& e : ctx.edges) ++indeg[e.second];
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::size_t seen = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        ++seen;
        for (const auto& e : ctx.edges)
            if (e.first == v && --indeg[e.second] == 0) ready.push_back(e.second);
    }
    return seen == n;
}

inline void chain_search(ChainContext& ctx, std::size_t i, double acc) {
    if (acc > ctx.best) {
        ctx.best = acc;
        ctx.best_count = ctx.picked.size();
    }
    while (i < ctx.cand.size()) {
        if (ctx.budget-- <= 0) return;
        if (acc + ctx.bound[i] <= ctx.best) return;
        const EnergyTree& t = ctx.cand[i];
        bool overlap = false;
        for (const std::size_t m : t.members)
            if (ctx.used[m]) {
                overlap = true;
                break;
            }
        if (!overlap) {
            const std::size_t added_at = ctx.edges.size();
            const std::size_t np = ctx.picked.size();
            bool ok = true;
            for (std::size_t pi = 0; pi < np && ok; ++pi) {
                switch (pair_order(ctx.tiles, ctx.cand[ctx.picked[pi]], t, ctx.slot)) {
                    case PairOrder::reject:
                        ok = false;
                        break;
                    case PairOrder::free:
                        break;
                    case PairOrder::first_first:
                        ctx.edges.emplace_back(pi, np);
                        break;
                    case PairOrder::second_first:
                        ctx.edges.emplace_back(np, pi);
                        break;
                }
            }
            if (ok) {
                ctx.picked.push_back(i);
                if (chain_acyclic(ctx)) {
                    for (const std::size_t m : t.members) ctx.used[m] = 1;
                    chain_search(ctx, ctx.next_group[i], acc + t.length());
                    for (const std::size_t m : t.members) ctx.used[m] = 0;
                }
                ctx.picked.pop_back();
            }
            ctx.edges.resize(added_at);
        }
        ++i;
    }
}

}  // namespace detail

/// Sup over integer exponents n and chains of strongly slot-disjoint trees,
/// comparable in some other slot, of 2^n sqrt(sum of |I_T|), where each tree
/// must carry coefficient mass at least 4^n |I_T|.  Exact by enumeration up
/// to max_exact_tiles; beyond that a greedy chain gives a lower bound and
/// the exact flag drops.
inline EnergyResult energy_j(const std::vector<TriTile>& tiles, const std::vector<cplx>& coeffs,
                             std::size_t slot, const EnergyOptions& opts = {}) {
    if (tiles.size() != coeffs.size())
        throw std::invalid_argument("energy_j: one coefficient per tile required");
    EnergyResult result;
    if (tiles.empty()) return result;
    const std::size_t arity = tiles.front().arity();
    if (slot >= arity) throw std::invalid_argument("energy_j: slot out of range");

    std::vector<double> masses;
    masses.reserve(coeffs.size());
    double total = 0.0;
    for (const cplx& c : coeffs) {
        masses.push_back(std::norm(c));
        total += std::norm(c);
    }
    if (total <= 0.0) return result;

    const bool exact = tiles.size() <= opts.max_exact_tiles;
    result.exact = exact;

    // Member sets: subsets in exact mode, single tiles in greedy mode.  Only
    // the coefficient mass and the coarsest member time scale matter before
    // the top search.
    struct MemberSet {
        std::vector<std::size_t> members;
        double mass = 0.0;
        int js_floor = 0;   // top time scale can be no finer than this
        int level_top = 0;  // largest exponent at which the set qualifies
    };
    auto qualifies = [](double mass, int n, int js) {
        return mass >= std::ldexp(1.0, 2 * n + js);
    };
    std::vector<MemberSet> sets;
    auto add_set = [&](std::vector<std::size_t> members, double mass) {
        if (mass <= 0.0) return;
        MemberSet s;
        s.members = std::move(members);
        s.mass = mass;
        s.js_floor = std::numeric_limits<int>::min();
        for (const std::size_t i : s.members)
            s.js_floor = std::max(s.js_floor, tiles[i].time_cell().j);
        int n = static_cast<int>(std::floor(0.5 * std::log2(mass / std::ldexp(1.0, s.js_floor))));
        while (qualifies(mass, n + 1, s.js_floor)) ++n;
        while (!qualifies(mass, n, s.js_floor)) --n;
        s.level_top = n;
        sets.push_back(std::move(s));
    };
    if (exact) {
        const std::size_t n = tiles.size();
        for (std::uint64_t maskbits = 1; maskbits < (std::uint64_t{1} << n); ++maskbits) {
            std::vector<std::size_t> members;
            double mass = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (maskbits & (std::uint64_t{1} << i)) {
                    members.push_back(i);
                    mass += masses[i];
                }
            add_set(std::move(members), mass);
        }
    } else {
        for (std::size_t i = 0; i < tiles.size(); ++i) add_set({i}, masses[i]);
    }
    if (sets.empty()) return result;

    // The sup needs only exponents between the smallest and largest per-set
    // qualification tops: above the largest nothing qualifies; below the
    // smallest every set already fits its best contribution at an ever finer
    // top, and shrinking tops only relaxes the disjointness clauses.
    int level_lo = std::numeric_limits<int>::max();
    int level_hi = std::numeric_limits<int>::min();
    for (const MemberSet& s : sets) {
        level_lo = std::min(level_lo, s.level_top);
        level_hi = std::max(level_hi, s.level_top);
    }
    if (level_hi - level_lo > 96) {
        level_lo = level_hi - 96;
        result.exact = false;
    }

    // Concrete tree candidates: each set at every admissible top time scale,
    // capped by the qualification at the lowest exponent considered and
    // clamped to keep exact mesh arithmetic in range.
    std::vector<detail::EnergyTree> candidates;
    for (std::size_t si = 0; si < sets.size(); ++si) {
        const MemberSet& s = sets[si];
        const int js_cap_clamp = std::min(s.js_floor + 64, 40);
        for (int js = s.js_floor; qualifies(s.mass, level_lo, js); ++js) {
            if (js > js_cap_clamp) {
                result.exact = false;
                break;
            }
            for (std::size_t other = 0; other < arity; ++other) {
                if (other == slot) continue;
                if (auto top = detail::witness_top(tiles, s.members, other, js)) {
                    candidates.push_back(detail::EnergyTree{s.members, *top, s.mass, js, si});
                    break;
                }
            }
        }
    }

    for (int n = level_lo; n <= level_hi; ++n) {
        std::vector<detail::EnergyTree> qualifying;
        for (const detail::EnergyTree& t : candidates)
            if (t.mass >= std::ldexp(1.0, 2 * n) * t.length()) qualifying.push_back(t);
        double best_sum = 0.0;
        std::size_t best_count = 0;
        if (exact) {
            // Member set groups stay contiguous; longest variants lead both
            // within a group and across groups so the first descent seeds a
            // strong incumbent.
            std::vector<std::vector<detail::EnergyTree>> groups;
            for (detail::EnergyTree& t : qualifying) {
                if (groups.empty() || groups.back().front().set_id != t.set_id)
                    groups.emplace_back();
                groups.back().push_back(std::move(t));
            }
            for (auto& g : groups)
                std::sort(g.begin(), g.end(),
                          [](const detail::EnergyTree& a, const detail::EnergyTree& b) {
                              return a.length() > b.length();
                          });
            std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
                return a.front().length() > b.front().length();
            });
            std::vector<detail::EnergyTree> cand;
            std::vector<std::size_t> next_group;
            for (auto& g : groups) {
                const std::size_t end = cand.size() + g.size();
                for (detail::EnergyTree& t : g) {
                    cand.push_back(std::move(t));
                    next_group.push_back(end);
                }
            }
            std::vector<double> bound(cand.size() + 1, 0.0);
            for (std::size_t i = cand.size(); i-- > 0;)
                bound[i] = std::max(cand[i].length() + bound[next_group[i]], bound[i + 1]);
            detail::ChainContext ctx{tiles,
                                     cand,
                                     next_group,
                                     bound,
                                     slot,
                                     {},
                                     {},
                                     std::vector<char>(tiles.size(), 0),
                                     0.0,
                                     0,
                                     2'000'000};
            detail::chain_search(ctx, 0, 0.0);
            best_sum = ctx.best;
            best_count = ctx.best_count;
            if (ctx.budget <= 0) result.exact = false;
        } else {
            std::sort(qualifying.begin(), qualifying.end(),
                      [](const detail::EnergyTree& a, const detail::EnergyTree& b) {
                          return a.length() > b.length();
                      });
            std::vector<detail::EnergyTree> chain;
            std::vector<char> used(tiles.size(), 0);
            for (const detail::EnergyTree& t : qualifying) {
                bool overlap = false;
                for (const std::size_t m : t.members)
                    if (used[m]) {
                        overlap = true;
                        break;
                    }
                if (overlap) continue;
                if (!detail::chain_compatible(tiles, chain, t, slot)) continue;
                chain.push_back(t);
                for (const std::size_t m : t.members) used[m] = 1;
                best_sum += t.length();
            }
            best_count = chain.size();
        }
        const double value = std::ldexp(std::sqrt(best_sum), n);
        if (value > result.value) {
            result.value = value;
            result.level = n;
            result.chain_trees = best_count;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Measured inequality ratios.

enum class EnergyMode { bessel, l1 };

struct RatioRow {
    int level = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    std::size_t count = 0;  // trees (bessel) or tiles (l1) entering the row
};

struct EnergyRatioReport {
    EnergyMode mode = EnergyMode::bessel;
    double ratio = 0.0;  // worst row
    bool chains_ok = true;
    double e2 = 0.0;
    double e3 = 0.0;
    std::vector<RatioRow> rows;
};

/// bessel: layers the collection by tree selection and compares, per level,
/// the selected trees' first-slot coefficient mass against the squared norm
/// of the input; every level's chains are re-checked for strong
/// disjointness.  l1: superlevel sets of the normalized middle-slot operator
/// pairing are weighed against 2^b times the geometric mean of the input
/// supports; the middle slots must be pairwise disjoint and the inputs must
/// be bounded by one.
inline EnergyRatioReport measure_energy_bounds(const ModelConfig& config,
                                               const std::vector<SampledSignal>& fs,
                                               EnergyMode mode) {
    EnergyRatioReport report;
    report.mode = mode;
    if (mode == EnergyMode::bessel) {
        if (fs.size() != 1)
            throw std::invalid_argument("measure_energy_bounds: bessel mode takes one function");
        const SampledSignal& f = fs.front();
        const double rhs = std::pow(lp_norm(f, 2.0), 2.0);
        if (rhs <= 0.0) return report;
        SelectOptions opts;
        opts.mother = config.mother;
        opts.order_dilation = config.order_dilation;
        const std::vector<SizePart> parts = size_decompose(config.p_tiles, f, opts);
        for (const SizePart& part : parts) {
            if (part.trees.empty()) continue;
            RatioRow row;
            row.level = part.level;
            row.count = part.trees.size();
            for (const SelectedTree& tree : part.trees) row.lhs += tree.mass;
            row.rhs = rhs;
            row.ratio = row.lhs / rhs;
            for (const bool upward : {true, false}) {
                std::vector<Tree> chain;
                for (const SelectedTree& tree : part.trees)
                    if (tree.upward == upward) chain.push_back(selection_tree(tree));
                if (!check_strongly_disjoint(chain, 0).ok) report.chains_ok = false;
            }
            report.ratio = std::max(report.ratio, row.ratio);
            report.rows.push_back(row);
        }
        return report;
    }

    if (fs.size() != 2)
        throw std::invalid_argument("measure_energy_bounds: l1 mode takes two functions");
    const SampledSignal& f2 = fs[0];
    const SampledSignal& f3 = fs[1];
    for (std::size_t a = 0; a < config.p_tiles.size(); ++a) {
        for (std::size_t b = a + 1; b < config.p_tiles.size(); ++b) {
            const TimeFreqRect ra = config.p_tiles[a].slot(1);
            const TimeFreqRect rb = config.p_tiles[b].slot(1);
            if (ra.time.intersects(rb.time) && ra.freq.intersects(rb.freq))
                throw std::invalid_argument(
                    "measure_energy_bounds: middle slots must be pairwise disjoint");
        }
    }
    auto support = [](const SampledSignal& f) {
        double measure = 0.0;
        double sup = 0.0;
        for (const cplx& v : f.samples()) {
            const double m = std::abs(v);
            sup = std::max(sup, m);
            if (m > 0.0) measure += f.lattice().spacing();
        }
        if (sup > 1.0 + 1e-9)
            throw std::invalid_argument("measure_energy_bounds: inputs must be bounded by one");
        return measure;
    };
    report.e2 = support(f2);
    report.e3 = support(f3);
    const double rhs_base = std::sqrt(report.e2 * report.e3);
    if (rhs_base <= 0.0) return report;

    const FrequencyLattice lat = f2.lattice();
    std::vector<double> normalized;
    normalized.reserve(config.p_tiles.size());
    for (const TriTile& p : config.p_tiles) {
        const WavePacket probe = slot_packet(lat, p, 1, config.mother, {0});
        const cplx pairing = detail::averaged_bht_pairing(
            p.component(1).interval, config.q_tiles, f2, f3, probe, config.alpha_nodes,
            config.mother, config.containment);
        const double len = p.time_interval().length().to_double();
        normalized.push_back(std::abs(pairing) / std::sqrt(len));
    }
    double top = 0.0;
    for (const double m : normalized) top = std::max(top, m);
    if (top <= 0.0) return report;
    const int b_lo = std::max(0, static_cast<int>(std::floor(-std::log2(top))));
    for (int b = b_lo; b <= b_lo + 48; ++b) {
        RatioRow row;
        row.level = b;
        const double cut = std::ldexp(1.0, -b);
        for (std::size_t i = 0; i < normalized.size(); ++i) {
            if (normalized[i] >= cut) {
                row.lhs += config.p_tiles[i].time_interval().length().to_double();
                ++row.count;
            }
        }
        row.rhs = std::ldexp(rhs_base, b);
        row.ratio = row.lhs / row.rhs;
        report.ratio = std::max(report.ratio, row.ratio);
        report.rows.push_back(row);
        if (row.count == normalized.size()) break;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Per-tree report rows.

/// CSV listing of a selection: one row per harvested tree with its direction,
/// top time length, member and companion counts, coefficient mass, and the
/// size it contributes (sqrt of mass over length).
inline std::string selection_csv(const TreeSelectResult& result) {
    std::string out = "tree,branch,interval,members,companions,mass,size\n";
    char buf[160];
    for (std::size_t i = 0; i < result.trees.size(); ++i) {
        const SelectedTree& t = result.trees[i];
        const double len = t.top.time_interval().length().to_double();
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%zu,%zu,%.17g,%.17g\n", i,
                      t.upward ? "up" : "down", len, t.members.size(), t.companion.size(), t.mass,
                      std::sqrt(t.mass / len));
        out += buf;
    }
    return out;
}

}  // namespace latmul
