#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "latmul/rational.hpp"

namespace latmul {

/// One cell of the shifted dyadic mesh at scale j with shift sigma =
/// shift_numerator/3: the interval 2^j (k + (0,1) + (-1)^j sigma).  Cells of
/// equal scale and shift tile the line; the three shifts together make every
/// interval coverable with bounded eccentricity.
struct ShiftedDyadicInterval {
    int j = 0;
    long long k = 0;
    int shift_numerator = 0;

    ShiftedDyadicInterval() = default;
    ShiftedDyadicInterval(int scale, long long position, int shift_num)
        : j(scale), k(position), shift_numerator(shift_num) {
        if (shift_numerator < 0 || shift_numerator > 2)
            throw std::invalid_argument("ShiftedDyadicInterval: shift numerator must be 0, 1, or 2");
    }

    Rational length() const { return Rational::pow2(j); }

    /// Shift sign alternates with scale parity so that coarser cells never
    /// share endpoints with finer ones across two consecutive scales.
    Rational signed_shift() const {
        const Rational sigma(shift_numerator, 3);
        return (j % 2 == 0) ? sigma : -sigma;
    }

    RInterval realize() const {
        const Rational lo = Rational::pow2(j) * (Rational(k) + signed_shift());
        return {lo, lo + Rational::pow2(j)};
    }

    friend bool operator==(const ShiftedDyadicInterval& a, const ShiftedDyadicInterval& b) {
        return a.j == b.j && a.k == b.k && a.shift_numerator == b.shift_numerator;
    }
    friend auto operator<=>(const ShiftedDyadicInterval& a, const ShiftedDyadicInterval& b) {
        return std::tie(a.j, a.k, a.shift_numerator) <=> std::tie(b.j, b.k, b.shift_numerator);
    }
};

/// Axis-aligned product of same-scale mesh cells, one per coordinate.
struct MeshCube {
    std::vector<ShiftedDyadicInterval> sides;

    MeshCube() = default;
    explicit MeshCube(std::vector<ShiftedDyadicInterval> s) : sides(std::move(s)) {
        if (sides.empty() || sides.size() > 4)
            throw std::invalid_argument("MeshCube: dimension must be between 1 and 4");
        for (const auto& side : sides)
            if (side.j != sides.front().j)
                throw std::invalid_argument("MeshCube: all sides must share one scale");
    }

    int scale() const { return sides.front().j; }
    Rational side_length() const { return Rational::pow2(scale()); }
    std::vector<RInterval> realize() const {
        std::vector<RInterval> out;
        out.reserve(sides.size());
        for (const auto& side : sides) out.push_back(side.realize());
        return out;
    }

    friend bool operator==(const MeshCube& a, const MeshCube& b) { return a.sides == b.sides; }
};

/// Time-frequency rectangle of unit area: the time cell comes from the
/// unshifted dyadic grid, the frequency cell from any of the three shifted
/// grids, and the scales are reciprocal.
struct Tile {
    ShiftedDyadicInterval time;
    ShiftedDyadicInterval freq;

    Tile() = default;
    Tile(ShiftedDyadicInterval t, ShiftedDyadicInterval f) : time(t), freq(f) {
        if (time.shift_numerator != 0)
            throw std::invalid_argument("Tile: time cell must come from the unshifted grid");
        if (time.j != -freq.j)
            throw std::invalid_argument("Tile: time and frequency scales must be reciprocal");
    }

    friend bool operator==(const Tile& a, const Tile& b) {
        return a.time == b.time && a.freq == b.freq;
    }
};

/// Time-frequency rectangle with exact endpoints, the common currency of the
/// order predicates.  Mesh tiles and generalized components both reduce to it.
struct TimeFreqRect {
    RInterval time;
    RInterval freq;

    friend bool operator==(const TimeFreqRect& a, const TimeFreqRect& b) {
        return a.time == b.time && a.freq == b.freq;
    }
};

inline TimeFreqRect rect_of(const Tile& tile) { return {tile.time.realize(), tile.freq.realize()}; }

/// One frequency component of a multi-tile: either a mesh cell or, for the
/// generalized variant, a raw rational interval of the matching length.
struct FreqComponent {
    RInterval interval;
    bool on_mesh = false;
    ShiftedDyadicInterval mesh;

    static FreqComponent from_mesh(const ShiftedDyadicInterval& cell) {
        FreqComponent c;
        c.interval = cell.realize();
        c.on_mesh = true;
        c.mesh = cell;
        return c;
    }
    static FreqComponent from_interval(const RInterval& iv) {
        FreqComponent c;
        c.interval = iv;
        return c;
    }
};

/// A shared time cell paired with one frequency component per slot.  Every
/// component has length reciprocal to the time length, so each slot is a unit
/// area rectangle.  Generalized components drop the mesh alignment but keep
/// exact rational endpoints.
class TriTile {
public:
    TriTile(ShiftedDyadicInterval time_cell, const std::vector<ShiftedDyadicInterval>& freq_cells)
        : time_(time_cell) {
        components_.reserve(freq_cells.size());
        for (const auto& cell : freq_cells) components_.push_back(FreqComponent::from_mesh(cell));
        validate();
    }

    TriTile(ShiftedDyadicInterval time_cell, std::vector<FreqComponent> components)
        : time_(time_cell), components_(std::move(components)) {
        validate();
    }

    std::size_t arity() const { return components_.size(); }
    const ShiftedDyadicInterval& time_cell() const { return time_; }
    RInterval time_interval() const { return time_.realize(); }
    const FreqComponent& component(std::size_t i) const { return components_.at(i); }
    bool generalized() const {
        return std::any_of(components_.begin(), components_.end(),
                           [](const FreqComponent& c) { return !c.on_mesh; });
    }

    TimeFreqRect slot(std::size_t i) const { return {time_.realize(), components_.at(i).interval}; }

    std::vector<TimeFreqRect> slots() const {
        const RInterval t = time_.realize();
        std::vector<TimeFreqRect> out;
        out.reserve(components_.size());
        for (const auto& c : components_) out.push_back({t, c.interval});
        return out;
    }

    std::vector<RInterval> frequency_cube() const {
        std::vector<RInterval> cube;
        cube.reserve(components_.size());
        for (const auto& c : components_) cube.push_back(c.interval);
        return cube;
    }

    friend bool operator==(const TriTile& a, const TriTile& b) {
        if (!(a.time_ == b.time_) || a.arity() != b.arity()) return false;
        for (std::size_t i = 0; i < a.arity(); ++i)
            if (!(a.components_[i].interval == b.components_[i].interval)) return false;
        return true;
    }

private:
    void validate() const {
        if (time_.shift_numerator != 0)
            throw std::invalid_argument("TriTile: time cell must come from the unshifted grid");
        if (components_.size() < 2 || components_.size() > 4)
            throw std::invalid_argument("TriTile: arity must be between 2 and 4");
        const Rational want = Rational::pow2(-time_.j);
        for (const auto& c : components_) {
            if (c.on_mesh && c.mesh.j != -time_.j)
                throw std::invalid_argument("TriTile: component scale must be reciprocal to time scale");
            if (!(c.interval.length() == want))
                throw std::invalid_argument("TriTile: component length must be reciprocal to time length");
        }
    }

    ShiftedDyadicInterval time_;
    std::vector<FreqComponent> components_;
};

// ---------------------------------------------------------------------------
// Order predicates.

struct OrderFlags {
    bool lt = false;
    bool le = false;
    bool lesssim = false;
    bool lesssim_prime = false;
};

/// a < b: time of a strictly inside time of b while the tripled frequency of b
/// sits inside the tripled frequency of a.
inline bool tile_lt(const TimeFreqRect& a, const TimeFreqRect& b) {
    return b.time.contains_strictly(a.time) && a.freq.dilate(3).contains(b.freq.dilate(3));
}

inline bool tile_le(const TimeFreqRect& a, const TimeFreqRect& b) {
    return a == b || tile_lt(a, b);
}

/// Relaxed order: containment of time cells plus containment of the
/// dilation-widened frequencies, with configurable dilation constant.
inline bool tile_lesssim(const TimeFreqRect& a, const TimeFreqRect& b, const Rational& dilation) {
    return b.time.contains(a.time) && a.freq.dilate(dilation).contains(b.freq.dilate(dilation));
}

inline bool tile_lesssim_prime(const TimeFreqRect& a, const TimeFreqRect& b,
                               const Rational& dilation) {
    return tile_lesssim(a, b, dilation) && !tile_le(a, b);
}

inline OrderFlags tile_order(const TimeFreqRect& a, const TimeFreqRect& b,
                             const Rational& dilation = Rational(8)) {
    OrderFlags f;
    f.lt = tile_lt(a, b);
    f.le = tile_le(a, b);
    f.lesssim = tile_lesssim(a, b, dilation);
    f.lesssim_prime = f.lesssim && !f.le;
    return f;
}

inline OrderFlags tile_order(const Tile& a, const Tile& b, const Rational& dilation = Rational(8)) {
    return tile_order(rect_of(a), rect_of(b), dilation);
}

// ---------------------------------------------------------------------------
// Covering.

/// Finds a shifted dyadic interval whose 7/10 contraction contains q and
/// whose length is within a factor of 8 of the length of q.  The scan runs
/// over ascending scales, then shifts 0, 1/3, 2/3, then positions, and
/// returns the first hit, which makes the result deterministic.
inline ShiftedDyadicInterval cover_interval(const RInterval& q) {
    const Rational len = q.length();
    int j = -62;
    while (Rational::pow2(j) < len) ++j;
    const Rational seven_tenths(7, 10);
    for (int scale = j; scale <= j + 3; ++scale) {
        const Rational cell = Rational::pow2(scale);
        if (cell > len * 8) break;
        for (int shift = 0; shift < 3; ++shift) {
            const ShiftedDyadicInterval probe(scale, 0, shift);
            // realize() has lo = cell * (k + signed shift), so the cell whose
            // center is nearest the center of q has k near this target.
            const Rational target = q.center() / cell - probe.signed_shift() - Rational(1, 2);
            const long long base = static_cast<long long>(std::floor(target.to_double()));
            for (long long k = base - 1; k <= base + 1; ++k) {
                const ShiftedDyadicInterval candidate(scale, k, shift);
                if (candidate.realize().dilate(seven_tenths).contains(q)) return candidate;
            }
        }
    }
    throw std::logic_error("cover_interval: no admissible cell found");
}

// ---------------------------------------------------------------------------
// Sparse collections.

struct SparseWitness {
    std::size_t first = 0;
    std::size_t second = 0;
};

struct SparseCheck {
    bool sparse = true;
    std::optional<SparseWitness> witness;
};

namespace detail {

inline bool dilates_meet(const std::vector<RInterval>& a, const std::vector<RInterval>& b,
                         const Rational& c) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].dilate(c).intersects_closed(b[i].dilate(c))) return false;
    return true;
}

}  // namespace detail

/// Pairwise separation of equal-dimension cubes, understood as a set:
/// duplicate cubes are ignored.  Distinct cubes of different sizes must have
/// sizes separated by more than the separation constant; equal-size cubes
/// must have disjoint dilates.  Dilate overlap is tested with closed
/// endpoints.
inline SparseCheck is_sparse(const std::vector<MeshCube>& cubes, long long separation) {
    SparseCheck result;
    for (std::size_t a = 0; a < cubes.size(); ++a) {
        for (std::size_t b = a + 1; b < cubes.size(); ++b) {
            if (cubes[a].sides.size() != cubes[b].sides.size())
                throw std::invalid_argument("is_sparse: mixed dimensions");
            if (cubes[a] == cubes[b]) continue;
            const int ja = cubes[a].scale();
            const int jb = cubes[b].scale();
            bool ok = true;
            if (ja != jb) {
                const auto& small = ja < jb ? cubes[a] : cubes[b];
                const auto& large = ja < jb ? cubes[b] : cubes[a];
                ok = small.side_length() * separation < large.side_length();
            } else {
                ok = !detail::dilates_meet(cubes[a].realize(), cubes[b].realize(),
                                           Rational(separation));
            }
            if (!ok) {
                result.sparse = false;
                result.witness = SparseWitness{a, b};
                return result;
            }
        }
    }
    return result;
}

inline SparseCheck is_sparse(const std::vector<ShiftedDyadicInterval>& cells,
                             long long separation) {
    std::vector<MeshCube> cubes;
    cubes.reserve(cells.size());
    for (const auto& cell : cells) cubes.push_back(MeshCube({cell}));
    return is_sparse(cubes, separation);
}

/// Partitions a cube family into sparse parts.  Scales are classed modulo the
/// smallest m with 2^m exceeding the separation constant, and positions are
/// colored modulo separation+1 per coordinate, so each part satisfies both
/// sparseness clauses by construction.  The number of parts actually used is
/// the size of the returned list.
inline std::vector<std::vector<MeshCube>> split_sparse(const std::vector<MeshCube>& cubes,
                                                       long long separation) {
    if (separation < 1) throw std::invalid_argument("split_sparse: separation must be positive");
    int scale_classes = 1;
    while ((1LL << scale_classes) <= separation) ++scale_classes;
    const long long color_classes = separation + 1;

    std::map<std::vector<long long>, std::vector<MeshCube>> parts;
    for (const auto& cube : cubes) {
        std::vector<long long> key;
        key.reserve(1 + 2 * cube.sides.size());
        const int j = cube.scale();
        key.push_back(((j % scale_classes) + scale_classes) % scale_classes);
        for (const auto& side : cube.sides) {
            key.push_back(((side.k % color_classes) + color_classes) % color_classes);
            key.push_back(side.shift_numerator);
        }
        parts[key].push_back(cube);
    }
    std::vector<std::vector<MeshCube>> out;
    out.reserve(parts.size());
    for (auto& [key, group] : parts) out.push_back(std::move(group));
    return out;
}

/// Multi-tile collections are sparse when all members share one shift vector
/// and the set of their frequency cubes is sparse.
inline SparseCheck is_sparse(const std::vector<TriTile>& tiles, long long separation) {
    SparseCheck result;
    std::vector<MeshCube> cubes;
    cubes.reserve(tiles.size());
    for (const auto& tile : tiles) {
        std::vector<ShiftedDyadicInterval> sides;
        sides.reserve(tile.arity());
        for (std::size_t i = 0; i < tile.arity(); ++i) {
            const auto& c = tile.component(i);
            if (!c.on_mesh)
                throw std::invalid_argument("is_sparse: needs mesh-aligned components");
            sides.push_back(c.mesh);
        }
        cubes.push_back(MeshCube(std::move(sides)));
    }
    for (std::size_t a = 0; a < tiles.size(); ++a) {
        for (std::size_t b = a + 1; b < tiles.size(); ++b) {
            if (tiles[a].arity() != tiles[b].arity())
                throw std::invalid_argument("is_sparse: mixed arities");
            for (std::size_t i = 0; i < tiles[a].arity(); ++i) {
                if (cubes[a].sides[i].shift_numerator != cubes[b].sides[i].shift_numerator) {
                    result.sparse = false;
                    result.witness = SparseWitness{a, b};
                    return result;
                }
            }
        }
    }
    return is_sparse(cubes, separation);
}

inline std::vector<std::vector<TriTile>> split_sparse(const std::vector<TriTile>& tiles,
                                                      long long separation) {
    if (separation < 1) throw std::invalid_argument("split_sparse: separation must be positive");
    int scale_classes = 1;
    while ((1LL << scale_classes) <= separation) ++scale_classes;
    const long long color_classes = separation + 1;

    std::map<std::vector<long long>, std::vector<TriTile>> parts;
    for (const auto& tile : tiles) {
        std::vector<long long> key;
        const int j = -tile.time_cell().j;
        key.push_back(((j % scale_classes) + scale_classes) % scale_classes);
        for (std::size_t i = 0; i < tile.arity(); ++i) {
            const auto& c = tile.component(i);
            if (!c.on_mesh)
                throw std::invalid_argument("split_sparse: needs mesh-aligned components");
            key.push_back(((c.mesh.k % color_classes) + color_classes) % color_classes);
            key.push_back(c.mesh.shift_numerator);
        }
        parts[key].push_back(tile);
    }
    std::vector<std::vector<TriTile>> out;
    out.reserve(parts.size());
    for (auto& [key, group] : parts) out.push_back(std::move(group));
    return out;
}

// ---------------------------------------------------------------------------
// Rank-1 collections.

struct Rank1Options {
    Rational order_dilation = Rational(8);
    Rational scale_gap = Rational(8);
};

struct Rank1Violation {
    std::size_t first = 0;   // index of the finer multi-tile
    std::size_t second = 0;  // index of the coarser multi-tile
    int clause = 0;          // 1 shared component, 2 relaxed order, 3 strict relaxed order
    std::size_t slot = 0;    // component where the clause failed
};

struct Rank1Check {
    bool ok = true;
    std::optional<Rank1Violation> witness;
};

namespace detail {

/// Directed clauses 2 and 3 for the pair (fine, coarse): one slot of fine
/// ordered below the matching slot of coarse forces all slots into the
/// relaxed order, and a time-scale gap beyond scale_gap forces the slots away
/// from the ordered one into the strict relaxed order.
inline std::optional<std::pair<int, std::size_t>> rank1_directed(
    const std::vector<TimeFreqRect>& fine, const std::vector<TimeFreqRect>& coarse,
    const Rank1Options& opts) {
    std::vector<std::size_t> below;
    for (std::size_t i = 0; i < fine.size(); ++i)
        if (tile_le(fine[i], coarse[i])) below.push_back(i);
    if (below.empty()) return std::nullopt;
    for (std::size_t i = 0; i < fine.size(); ++i)
        if (!tile_lesssim(fine[i], coarse[i], opts.order_dilation))
            return std::make_pair(2, i);
    if (fine.front().time.length() * opts.scale_gap < coarse.front().time.length()) {
        for (const std::size_t j : below) {
            for (std::size_t i = 0; i < fine.size(); ++i) {
                if (i == j) continue;
                if (!tile_lesssim_prime(fine[i], coarse[i], opts.order_dilation))
                    return std::make_pair(3, i);
            }
        }
    }
    return std::nullopt;
}

inline std::optional<Rank1Violation> rank1_pair(const std::vector<TimeFreqRect>& a,
                                                const std::vector<TimeFreqRect>& b,
                                                std::size_t index_a, std::size_t index_b,
                                                const Rank1Options& opts) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) return Rank1Violation{index_a, index_b, 1, i};
    if (auto hit = rank1_directed(a, b, opts))
        return Rank1Violation{index_a, index_b, hit->first, hit->second};
    if (auto hit = rank1_directed(b, a, opts))
        return Rank1Violation{index_b, index_a, hit->first, hit->second};
    return std::nullopt;
}

}  // namespace detail

/// Checks the three pairwise clauses of a rank-1 family: distinct multi-tiles
/// never share a slot; one slot ordered below its partner forces every slot
/// into the relaxed order; and when the time scales are separated by more
/// than the scale gap, the slots away from the ordered one must satisfy the
/// relaxed order strictly.
inline Rank1Check check_rank1(const std::vector<TriTile>& tiles,
                              const Rank1Options& opts = Rank1Options{}) {
    Rank1Check result;
    std::vector<std::vector<TimeFreqRect>> rects;
    rects.reserve(tiles.size());
    for (const auto& tile : tiles) {
        if (tile.arity() != tiles.front().arity())
            throw std::invalid_argument("check_rank1: mixed arities");
        rects.push_back(tile.slots());
    }
    for (std::size_t a = 0; a < tiles.size(); ++a) {
        for (std::size_t b = a + 1; b < tiles.size(); ++b) {
            if (auto hit = detail::rank1_pair(rects[a], rects[b], a, b, opts)) {
                result.ok = false;
                result.witness = *hit;
                return result;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Trees and disjointness.

/// Family of multi-tiles dominated in one slot by a common top tile.
struct Tree {
    std::vector<TriTile> members;
    Tile top;
    std::size_t slot = 0;

    Tree(std::vector<TriTile> m, Tile t, std::size_t s) : members(std::move(m)), top(t), slot(s) {
        for (const auto& tri : members) {
            if (slot >= tri.arity()) throw std::invalid_argument("Tree: slot out of range");
            if (!tile_le(tri.slot(slot), rect_of(top)))
                throw std::invalid_argument("Tree: member escapes the top tile");
        }
    }

    RInterval time_interval() const { return top.time.realize(); }
};

struct DisjointViolation {
    std::size_t tree_a = 0;
    std::size_t tree_b = 0;
    std::size_t member_a = 0;
    std::size_t member_b = 0;
    int clause = 0;  // 1 shared slot tile, 2 size-ordered overlap, 3 equal-size overlap
};

struct DisjointCheck {
    bool ok = true;
    std::optional<DisjointViolation> witness;
};

/// Strong slot disjointness across an ordered chain of trees: slot tiles
/// never repeat between trees; when the doubled slot frequencies of members
/// from two trees meet and one frequency interval is shorter, the member with
/// the longer frequency interval must have its time support avoid the top
/// time interval of the other tree; and on equal frequency lengths the member
/// from the later tree must avoid the top time interval of the earlier tree.
inline DisjointCheck check_strongly_disjoint(const std::vector<Tree>& chain, std::size_t slot) {
    DisjointCheck result;
    auto fail = [&](std::size_t ta, std::size_t tb, std::size_t ma, std::size_t mb, int clause) {
        result.ok = false;
        result.witness = DisjointViolation{ta, tb, ma, mb, clause};
    };
    for (std::size_t t1 = 0; t1 < chain.size(); ++t1) {
        for (std::size_t t2 = t1 + 1; t2 < chain.size(); ++t2) {
            for (std::size_t m1 = 0; m1 < chain[t1].members.size(); ++m1) {
                for (std::size_t m2 = 0; m2 < chain[t2].members.size(); ++m2) {
                    const TriTile& p = chain[t1].members[m1];
                    const TriTile& q = chain[t2].members[m2];
                    if (slot >= p.arity() || slot >= q.arity())
                        throw std::invalid_argument("check_strongly_disjoint: slot out of range");
                    if (p.slot(slot) == q.slot(slot)) {
                        fail(t1, t2, m1, m2, 1);
                        return result;
                    }
                    const RInterval wp = p.component(slot).interval;
                    const RInterval wq = q.component(slot).interval;
                    if (!wp.dilate(2).intersects_closed(wq.dilate(2))) continue;
                    if (wp.length() < wq.length()) {
                        if (q.time_interval().intersects(chain[t1].time_interval())) {
                            fail(t1, t2, m1, m2, 2);
                            return result;
                        }
                    } else if (wq.length() < wp.length()) {
                        if (p.time_interval().intersects(chain[t2].time_interval())) {
                            fail(t1, t2, m1, m2, 2);
                            return result;
                        }
                    } else {
                        if (q.time_interval().intersects(chain[t1].time_interval())) {
                            fail(t1, t2, m1, m2, 3);
                            return result;
                        }
                    }
                }
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Frequency cubes along a line.

/// Line through the origin with integer direction, the degenerate set the
/// multi-tile collections cluster around.
struct LineSpec {
    std::array<long long, 3> direction{1, 0, 0};
};

/// Exact sup-metric distance from an axis-aligned cube to the line
/// {t * direction}.  The distance as a function of the line parameter is a
/// maximum of finitely many affine pieces, so the minimum sits at a crossing
/// of two pieces and is found by exact enumeration.
inline Rational line_distance(const LineSpec& line, const std::vector<RInterval>& cube) {
    if (cube.size() != 3) throw std::invalid_argument("line_distance: cube must be 3-dimensional");
    bool moving = false;
    // Affine pieces value(t) = a + b t whose maximum over the list is the
    // distance at parameter t.
    std::vector<std::pair<Rational, Rational>> pieces;
    pieces.emplace_back(Rational(0), Rational(0));
    for (std::size_t i = 0; i < 3; ++i) {
        const Rational d(line.direction[i]);
        if (line.direction[i] == 0) {
            pieces.emplace_back(cube[i].distance_to(Rational(0)), Rational(0));
        } else {
            moving = true;
            pieces.emplace_back(cube[i].lo, -d);
            pieces.emplace_back(-cube[i].hi, d);
        }
    }
    if (!moving) throw std::invalid_argument("line_distance: direction must be nonzero");

    auto value_at = [&](const Rational& t) {
        Rational best(0);
        for (const auto& [a, b] : pieces) {
            const Rational v = a + b * t;
            if (v > best) best = v;
        }
        return best;
    };

    std::optional<Rational> minimum;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        for (std::size_t q = p + 1; q < pieces.size(); ++q) {
            if (pieces[p].second == pieces[q].second) continue;
            const Rational t =
                (pieces[q].first - pieces[p].first) / (pieces[p].second - pieces[q].second);
            const Rational v = value_at(t);
            if (!minimum || v < *minimum) minimum = v;
        }
    }
    return *minimum;
}

struct WhitneyOptions {
    Rational box_halfwidth = Rational(8);
    std::array<Rational, 3> box_center{Rational(0), Rational(0), Rational(0)};
    int scale_min = -3;
    int scale_max = 0;
    std::array<int, 3> shift_numerators{0, 0, 0};
    Rational ratio_lo = Rational(1);
    Rational ratio_hi = Rational(4);
};

/// Cubes of the shifted mesh at scale j inside the box whose distance to the
/// line is between ratio_lo and ratio_hi times their side length.  Candidate
/// positions are gathered by walking cells along the line (the only place
/// floating point appears, and only to seed integer search windows); the
/// selection itself is exact.
inline std::vector<MeshCube> whitney_frequency_cubes(const LineSpec& line,
                                                     const WhitneyOptions& opts, int j) {
    const Rational cell = Rational::pow2(j);
    const Rational lo_bound = opts.ratio_lo * cell;
    const Rational hi_bound = opts.ratio_hi * cell;

    std::size_t drive = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (std::llabs(line.direction[i]) > std::llabs(line.direction[drive])) drive = i;
    if (line.direction[drive] == 0)
        throw std::invalid_argument("whitney_frequency_cubes: direction must be nonzero");

    auto cell_window = [&](std::size_t i, const Rational& vlo,
                           const Rational& vhi) -> std::pair<long long, long long> {
        const Rational shift = ShiftedDyadicInterval(j, 0, opts.shift_numerators[i]).signed_shift();
        const double klo = ((vlo / cell) - shift).to_double();
        const double khi = ((vhi / cell) - shift).to_double();
        return {static_cast<long long>(std::floor(klo)) - 1,
                static_cast<long long>(std::ceil(khi)) + 1};
    };

    const Rational margin = hi_bound + cell;
    std::array<RInterval, 3> boxes{
        RInterval{opts.box_center[0] - opts.box_halfwidth, opts.box_center[0] + opts.box_halfwidth},
        RInterval{opts.box_center[1] - opts.box_halfwidth, opts.box_center[1] + opts.box_halfwidth},
        RInterval{opts.box_center[2] - opts.box_halfwidth, opts.box_center[2] + opts.box_halfwidth}};
    const Rational dd(line.direction[drive]);
    const Rational t_lo =
        std::min((boxes[drive].lo - margin) / dd, (boxes[drive].hi + margin) / dd);
    const Rational t_hi =
        std::max((boxes[drive].lo - margin) / dd, (boxes[drive].hi + margin) / dd);

    std::vector<std::array<long long, 3>> candidates;
    const Rational step = cell / dd.abs();
    for (Rational t = t_lo; t <= t_hi; t += step) {
        std::array<std::pair<long long, long long>, 3> ranges;
        for (std::size_t i = 0; i < 3; ++i) {
            const Rational v0 = Rational(line.direction[i]) * t;
            const Rational v1 = Rational(line.direction[i]) * (t + step);
            ranges[i] = cell_window(i, std::min(v0, v1) - margin, std::max(v0, v1) + margin);
        }
        for (long long k0 = ranges[0].first; k0 <= ranges[0].second; ++k0)
            for (long long k1 = ranges[1].first; k1 <= ranges[1].second; ++k1)
                for (long long k2 = ranges[2].first; k2 <= ranges[2].second; ++k2)
                    candidates.push_back({k0, k1, k2});
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<MeshCube> out;
    for (const auto& ks : candidates) {
        std::vector<ShiftedDyadicInterval> sides;
        sides.reserve(3);
        bool inside = true;
        for (std::size_t i = 0; i < 3; ++i) {
            const ShiftedDyadicInterval side(j, ks[i], opts.shift_numerators[i]);
            const RInterval iv = side.realize();
            if (!(boxes[i].lo <= iv.lo && iv.hi <= boxes[i].hi)) {
                inside = false;
                break;
            }
            sides.push_back(side);
        }
        if (!inside) continue;
        MeshCube cube(std::move(sides));
        const Rational dist = line_distance(line, cube.realize());
        if (lo_bound <= dist && dist <= hi_bound) out.push_back(std::move(cube));
    }
    return out;
}

struct WhitneyTriTileOptions {
    WhitneyOptions cubes;
    int time_cells = 2;
    Rank1Options rank1;
};

/// Multi-tiles whose frequency cubes track the line at every scale in range.
/// Each qualifying cube is paired with a few time cells at the reciprocal
/// scale, coarse time first, and a greedy pass keeps only tiles compatible
/// with the rank-1 clauses, so the output passes check_rank1 by construction.
inline std::vector<TriTile> whitney_tri_tiles(const LineSpec& line,
                                              const WhitneyTriTileOptions& opts) {
    std::vector<TriTile> kept;
    std::vector<std::vector<TimeFreqRect>> kept_rects;
    for (int j = opts.cubes.scale_min; j <= opts.cubes.scale_max; ++j) {
        const auto cubes = whitney_frequency_cubes(line, opts.cubes, j);
        for (const auto& cube : cubes) {
            for (int kt = 0; kt < opts.time_cells; ++kt) {
                TriTile candidate(ShiftedDyadicInterval(-j, kt, 0), cube.sides);
                auto rects = candidate.slots();
                bool ok = true;
                for (const auto& other : kept_rects) {
                    if (detail::rank1_pair(rects, other, 0, 1, opts.rank1)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    kept.push_back(std::move(candidate));
                    kept_rects.push_back(std::move(rects));
                }
            }
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Serialization.

inline std::string to_text(const Tile& tile) {
    std::ostringstream os;
    os << "tile " << tile.time.j << ' ' << tile.time.k << ' ' << tile.freq.j << ' ' << tile.freq.k
       << ' ' << tile.freq.shift_numerator;
    return os.str();
}

inline Tile tile_from_text(const std::string& line) {
    std::istringstream is(line);
    std::string tag;
    int tj = 0, fj = 0, fs = 0;
    long long tk = 0, fk = 0;
    if (!(is >> tag >> tj >> tk >> fj >> fk >> fs) || tag != "tile")
        throw std::invalid_argument("tile_from_text: malformed line");
    return Tile(ShiftedDyadicInterval(tj, tk, 0), ShiftedDyadicInterval(fj, fk, fs));
}

/// One multi-tile per line: arity, time scale and position, then per
/// component either "m j k s" for a mesh cell or "g lo_num lo_den hi_num
/// hi_den" for a generalized rational interval.
inline std::string to_text(const TriTile& tile) {
    std::ostringstream os;
    os << tile.arity() << ' ' << tile.time_cell().j << ' ' << tile.time_cell().k;
    for (std::size_t i = 0; i < tile.arity(); ++i) {
        const auto& c = tile.component(i);
        if (c.on_mesh)
            os << " m " << c.mesh.j << ' ' << c.mesh.k << ' ' << c.mesh.shift_numerator;
        else
            os << " g " << c.interval.lo.num() << ' ' << c.interval.lo.den() << ' '
               << c.interval.hi.num() << ' ' << c.interval.hi.den();
    }
    return os.str();
}

inline TriTile tri_tile_from_text(const std::string& line) {
    std::istringstream is(line);
    std::size_t arity = 0;
    int tj = 0;
    long long tk = 0;
    if (!(is >> arity >> tj >> tk))
        throw std::invalid_argument("tri_tile_from_text: malformed line");
    std::vector<FreqComponent> comps;
    for (std::size_t i = 0; i < arity; ++i) {
        std::string kind;
        if (!(is >> kind)) throw std::invalid_argument("tri_tile_from_text: missing component");
        if (kind == "m") {
            int cj = 0, cs = 0;
            long long ck = 0;
            if (!(is >> cj >> ck >> cs))
                throw std::invalid_argument("tri_tile_from_text: malformed mesh component");
            comps.push_back(FreqComponent::from_mesh(ShiftedDyadicInterval(cj, ck, cs)));
        } else if (kind == "g") {
            long long ln = 0, ld = 0, hn = 0, hd = 0;
            if (!(is >> ln >> ld >> hn >> hd))
                throw std::invalid_argument("tri_tile_from_text: malformed interval component");
            comps.push_back(
                FreqComponent::from_interval(RInterval(Rational(ln, ld), Rational(hn, hd))));
        } else {
            throw std::invalid_argument("tri_tile_from_text: unknown component kind");
        }
    }
    return TriTile(ShiftedDyadicInterval(tj, tk, 0), std::move(comps));
}

inline std::string to_text(const std::vector<TriTile>& tiles) {
    std::string out;
    for (const auto& tile : tiles) {
        out += to_text(tile);
        out += '\n';
    }
    return out;
}

inline std::vector<TriTile> tri_tiles_from_text(const std::string& text) {
    std::vector<TriTile> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(tri_tile_from_text(line));
    }
    return out;
}

}  // namespace latmul
