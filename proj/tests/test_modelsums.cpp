#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "latmul/modelsums.hpp"
#include "latmul/rng.hpp"

using namespace latmul;

namespace {

ShiftedDyadicInterval cell(int j, long long k, int s = 0) { return {j, k, s}; }

TriTile tri3(int time_scale, long long time_k, std::array<long long, 3> freq_k,
             std::array<int, 3> shifts = {0, 0, 0}) {
    return TriTile(cell(time_scale, time_k),
                   std::vector<ShiftedDyadicInterval>{cell(-time_scale, freq_k[0], shifts[0]),
                                                      cell(-time_scale, freq_k[1], shifts[1]),
                                                      cell(-time_scale, freq_k[2], shifts[2])});
}

/// Arity-3 generalized tile whose second component mirrors the first and
/// whose third is centered at the origin, as the reflection collection wants.
TriTile mirror_tri(long long time_k, const Rational& lo) {
    std::vector<FreqComponent> comps;
    comps.push_back(FreqComponent::from_interval(RInterval{lo, lo + 1}));
    comps.push_back(FreqComponent::from_interval(RInterval{-(lo + 1), -lo}));
    comps.push_back(FreqComponent::from_interval(RInterval{Rational(-1, 2), Rational(1, 2)}));
    return TriTile(cell(0, time_k), std::move(comps));
}

RInterval riv(long long lo, long long hi) { return RInterval{Rational(lo), Rational(hi)}; }

SampledSignal zero_signal(const FrequencyLattice& lat) {
    return SampledSignal(lat, std::vector<cplx>(static_cast<std::size_t>(lat.samples)));
}

SampledSignal indicator_signal(const FrequencyLattice& lat, double lo, double hi,
                               double amplitude = 1.0) {
    std::vector<cplx> s(static_cast<std::size_t>(lat.samples));
    for (int i = 0; i < lat.samples; ++i)
        if (lat.x(i) >= lo && lat.x(i) < hi) s[static_cast<std::size_t>(i)] = amplitude;
    return SampledSignal(lat, std::move(s));
}

SampledSignal combine(const SampledSignal& a, const SampledSignal& b, cplx ca, cplx cb) {
    std::vector<cplx> s(a.samples().size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = ca * a.samples()[i] + cb * b.samples()[i];
    return SampledSignal(a.lattice(), std::move(s));
}

std::multiset<std::string> text_multiset(const std::vector<TriTile>& tiles) {
    std::multiset<std::string> out;
    for (const TriTile& t : tiles) out.insert(to_text(t));
    return out;
}

/// Dense scan over candidate tops: every shifted cell pair in a wide window,
/// independent of the breakpoint enumeration inside the library.
double oracle_size(const std::vector<TriTile>& tiles, const std::vector<double>& masses,
                   std::size_t slot) {
    double best = 0.0;
    for (int js = -1; js <= 8; ++js) {
        const long long span = 10 * (1LL << std::max(0, js + 1)) + 4;
        for (long long tk = -2; tk <= 2; ++tk) {
            for (int sigma = 0; sigma < 3; ++sigma) {
                for (long long fk = -span; fk <= span; ++fk) {
                    const Tile top{cell(js, tk), cell(-js, fk, sigma)};
                    double mass = 0.0;
                    for (std::size_t i = 0; i < tiles.size(); ++i)
                        if (tile_le(tiles[i].slot(slot), rect_of(top))) mass += masses[i];
                    if (mass > 0.0) best = std::max(best, std::sqrt(mass / std::ldexp(1.0, js)));
                }
            }
        }
    }
    return best;
}

/// The dyadic whitney family hugging the operator line at scale 1/8, reused
/// as the inner collection by several cases below.  38 tiles by construction.
std::vector<TriTile> inner_collection() {
    WhitneyTriTileOptions opts;
    opts.cubes.box_halfwidth = Rational(2);
    opts.cubes.box_center = {Rational(7, 2), Rational(-7), Rational(-7, 2)};
    opts.cubes.scale_min = -3;
    opts.cubes.scale_max = -3;
    return whitney_tri_tiles(bht_line(), opts);
}

std::vector<TriTile> outer_collection_1() {
    WhitneyTriTileOptions opts;
    opts.cubes.box_halfwidth = Rational(4);
    opts.cubes.box_center = {Rational(-7, 4), Rational(-7, 2), Rational(21, 4)};
    opts.cubes.scale_min = 0;
    opts.cubes.scale_max = 0;
    return whitney_tri_tiles(lambda1_line(), opts);
}

std::vector<TriTile> outer_collection_2() {
    WhitneyTriTileOptions opts;
    opts.cubes.box_halfwidth = Rational(4);
    opts.cubes.box_center = {Rational(5), Rational(-5), Rational(0)};
    opts.cubes.scale_min = -2;
    opts.cubes.scale_max = 0;
    return whitney_tri_tiles(lambda2_line(), opts);
}

std::vector<TriTile> hand_tiles() {
    return {tri3(0, 0, {-2, 0, 4}), tri3(0, 0, {-5, 1, 5}), tri3(-1, 0, {-2, 0, 1}),
            tri3(-1, 0, {0, -1, 2})};
}

/// 2 Phi_A + Phi_B for the hand instance on the (256, 16) lattice.
SampledSignal hand_signal(const FrequencyLattice& lat, const std::vector<TriTile>& hand) {
    const WavePacket pa = slot_packet(lat, hand[0], 0, {}, {1});
    const WavePacket pb = slot_packet(lat, hand[1], 0, {}, {1});
    return combine(pa.signal, pb.signal, cplx{2.0, 0.0}, cplx{1.0, 0.0});
}

/// Random same-shift two-scale instance whose frequency cubes are pairwise
/// separated: scales 64 apart, equal-scale cube centers at least 15 units
/// apart in every coordinate, fine tiles anchored near the coarse ones so
/// member relations actually occur, plus an occasional duplicate cube at a
/// fresh time cell.
std::vector<TriTile> separated_instance(Rng& rng, int coarse_j) {
    std::vector<TriTile> tiles;
    std::array<std::array<long long, 3>, 3> v{};
    for (int s = 0; s < 3; ++s) {
        std::array<long long, 3> p{-1, 0, 1};
        for (int i = 2; i > 0; --i)
            std::swap(p[static_cast<std::size_t>(i)],
                      p[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        v[static_cast<std::size_t>(s)] = p;
    }
    const long long cpu = 1LL << coarse_j;
    std::vector<std::array<long long, 3>> fine_cells(3);
    for (int i = 0; i < 3; ++i) {
        std::array<long long, 3> ks{};
        for (int s = 0; s < 3; ++s)
            ks[static_cast<std::size_t>(s)] =
                24 * cpu * v[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] +
                rng.uniform_int(-cpu / 4, cpu / 4);
        const long long tk = rng.uniform_int(0, (256 >> coarse_j) - 1);
        tiles.push_back(tri3(coarse_j, tk, ks));
        fine_cells[static_cast<std::size_t>(i)] = ks;
    }
    for (int i = 0; i < 3; ++i) {
        const TriTile& anchor = tiles[static_cast<std::size_t>(i)];
        std::array<long long, 3> ks{};
        for (int s = 0; s < 3; ++s) {
            const double c = (static_cast<double>(
                                  fine_cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]) +
                              0.5) /
                             static_cast<double>(cpu);
            const long long base = static_cast<long long>(std::floor(c));
            const long long jit = (s == 0) ? rng.uniform_int(-4, 4) : rng.uniform_int(-1, 1);
            ks[static_cast<std::size_t>(s)] = base + jit;
        }
        long long tk;
        if (rng.uniform_int(0, 3) > 0)
            tk = (anchor.time_cell().k << coarse_j) + rng.uniform_int(0, cpu - 1);
        else
            tk = rng.uniform_int(0, 255);
        tiles.push_back(tri3(0, tk, ks));
    }
    if (rng.uniform_int(0, 1) == 1) {
        const TriTile& orig = tiles[3];
        long long tk = orig.time_cell().k;
        while (tk == orig.time_cell().k) tk = rng.uniform_int(0, 255);
        std::array<long long, 3> ks{};
        for (int s = 0; s < 3; ++s)
            ks[static_cast<std::size_t>(s)] = orig.component(static_cast<std::size_t>(s)).mesh.k;
        tiles.push_back(tri3(0, tk, ks));
    }
    return tiles;
}

}  // namespace

TEST_CASE("containment predicates pin the length and interior constants", "[modelsums]") {
    CHECK(well_inside(riv(3, 4), riv(0, 8)));
    // 9/10 interior: [0,1) pokes past the shrunk left edge of [0,8)
    CHECK_FALSE(well_inside(riv(0, 1), riv(0, 8)));
    // length gap 8 is required inclusively, 7 is not enough
    CHECK_FALSE(well_inside(riv(3, 4), riv(0, 7)));
    CHECK(length_comparable(riv(0, 1), riv(0, 7)));
    CHECK(length_comparable(riv(0, 7), riv(0, 1)));
    CHECK(length_comparable(riv(2, 3), riv(5, 6)));
    // ratio exactly 8 falls outside the open comparability band
    CHECK_FALSE(length_comparable(riv(0, 1), riv(0, 8)));
}

TEST_CASE("translation window shifts the leading component by its own length", "[modelsums]") {
    const TriTile r = mirror_tri(0, Rational(3, 2));
    const RInterval w = translated_window(r);
    CHECK(w.lo == Rational(5, 2));
    CHECK(w.hi == Rational(7, 2));
    CHECK(w.contains_point(Rational(5, 2)));
    CHECK(w.contains_point(Rational(3)));
    CHECK_FALSE(w.contains_point(Rational(7, 2)));
}

TEST_CASE("whitney collections pass the adapted check and freeze their counts", "[modelsums]") {
    const std::vector<TriTile> q = inner_collection();
    REQUIRE(q.size() == 38);
    CHECK(check_adapted(q, bht_line()).ok);
    int inside = 0;
    for (const TriTile& t : q)
        if (well_inside(t.component(2).interval, riv(-4, -3))) ++inside;
    CHECK(inside == 12);

    const std::vector<TriTile> p1 = outer_collection_1();
    REQUIRE(p1.size() == 14);
    CHECK(check_adapted(p1, lambda1_line()).ok);
    int pairs = 0;
    for (const TriTile& p : p1)
        for (const TriTile& t : q)
            if (well_inside(t.component(2).interval, p.component(1).interval)) ++pairs;
    CHECK(pairs == 52);

    CHECK(outer_collection_2().size() == 46);

    // a cube kissing the line is rejected with its ratio reported
    const AdaptedCheck bad = check_adapted({tri3(0, 0, {0, 0, 0})}, lambda1_line());
    CHECK_FALSE(bad.ok);
    CHECK(bad.offender == 0);
    CHECK(bad.ratio < Rational(1));
}

TEST_CASE("bilinear operator expands term by term under its cap", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    Rng r42(42), r43(43);
    const SampledSignal f2 = random_band_signal(lat, 10.0, r42);
    const SampledSignal f3 = random_band_signal(lat, 10.0, r43);
    const std::vector<TriTile> q = inner_collection();
    const RInterval cap = riv(-4, -3);
    const double alpha = 0.37;

    const SampledSignal model = bht_model(cap, alpha, q, f2, f3);

    std::vector<cplx> acc(static_cast<std::size_t>(lat.samples));
    int used = 0;
    for (const TriTile& t : q) {
        if (!well_inside(t.component(2).interval, cap)) continue;
        ++used;
        const double len = t.time_interval().length().to_double();
        const cplx c1 = packet_coeff(f2, slot_packet(lat, t, 0, {}, {3, PacketKind::standard, alpha}));
        const cplx c2 = packet_coeff(f3, slot_packet(lat, t, 1, {}, {4, PacketKind::standard, alpha}));
        const WavePacket out = slot_packet(lat, t, 2, {}, {5, PacketKind::standard, alpha});
        const cplx w = c1 * c2 / std::sqrt(len);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * out.signal.samples()[i];
    }
    REQUIRE(used == 12);
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        diff = std::max(diff, std::abs(acc[i] - model.samples()[i]));
        scale = std::max(scale, std::abs(model.samples()[i]));
    }
    CHECK(scale > 1e-8);
    CHECK(diff <= 1e-12 * scale);

    // empty collection and a cap that admits nothing both give the zero signal
    CHECK(lp_norm(bht_model(cap, alpha, {}, f2, f3), 2.0) == 0.0);
    CHECK(lp_norm(bht_model(riv(100, 101), alpha, q, f2, f3), 2.0) == 0.0);

    CHECK_THROWS_AS(bht_model(cap, alpha, {TriTile(cell(0, 0), {cell(0, 0), cell(0, 2)})}, f2, f3),
                    std::invalid_argument);
}

TEST_CASE("middle blocks split by length class with exact zero cross terms", "[modelsums]") {
    const FrequencyLattice lat(2048, 32.0);
    Rng r21(21), r22(22);
    const SampledSignal f2 = random_band_signal(lat, 26.0, r21);
    const SampledSignal f3 = random_band_signal(lat, 26.0, r22);
    const TriTile p = tri3(0, 3, {2, 0, 4});
    // qa: third component an eighth of the middle slot and well inside it
    const TriTile qa(cell(3, 0), {cell(-3, -16), cell(-3, 8), cell(-3, 2)});
    // qb: third component eight times longer, its shrunk dilate covering the
    // middle slot (the shifted cell at scale 8 realizing [-8/3, 16/3))
    const TriTile qb(cell(-3, 5), {cell(3, -2, 1), cell(3, 1, 1), cell(3, 0, 1)});
    // qc: matching length, adjacent in time, same third frequency cell
    const TriTile qc = tri3(0, 4, {-3, 5, 0});

    const MiddleBlocks ba = middle_blocks(p, {qa}, f2, f3);
    const MiddleBlocks bb = middle_blocks(p, {qb}, f2, f3);
    const MiddleBlocks bc = middle_blocks(p, {qc}, f2, f3);

    CHECK(std::abs(ba.capped) > 1e-5);
    CHECK(ba.dominating == cplx{0.0, 0.0});
    CHECK(ba.comparable == cplx{0.0, 0.0});

    CHECK(bb.capped == cplx{0.0, 0.0});
    CHECK(std::abs(bb.dominating) > 1e-5);
    CHECK(bb.comparable == cplx{0.0, 0.0});

    CHECK(bc.capped == cplx{0.0, 0.0});
    CHECK(bc.dominating == cplx{0.0, 0.0});
    CHECK(std::abs(bc.comparable) > 1e-4);

    const MiddleBlocks all = middle_blocks(p, {qa, qb, qc}, f2, f3);
    CHECK(std::abs(all.capped - ba.capped) <= 1e-15);
    CHECK(std::abs(all.dominating - bb.dominating) <= 1e-15);
    CHECK(std::abs(all.comparable - bc.comparable) <= 1e-15);
    CHECK(all.mass() == Catch::Approx(std::norm(all.capped) + std::norm(all.dominating) +
                                      std::norm(all.comparable)));

    // the dominating block, recomputed flat from its displayed formula
    const WavePacket probe = slot_packet(lat, p, 1, {}, {0});
    cplx dom{0.0, 0.0};
    const double len = qb.time_interval().length().to_double();
    for (int m = 0; m < 8; ++m) {
        const double a = (m + 0.5) / 8.0;
        const cplx c2 = packet_coeff(f2, slot_packet(lat, qb, 0, {}, {2, PacketKind::standard, a}));
        const cplx c3 = packet_coeff(f3, slot_packet(lat, qb, 1, {}, {3, PacketKind::standard, a}));
        const WavePacket out = slot_packet(lat, qb, 2, {}, {5, PacketKind::standard, a});
        dom += c2 * c3 / std::sqrt(len) * grid_inner(out.signal, probe.signal);
    }
    dom /= 8.0;
    CHECK(std::abs(dom - bb.dominating) <= 1e-15);

    // a one-tile collection's own slot is the best tree top
    const double s0 = size_0({p}, {qa, qb, qc}, f2, f3);
    CHECK(s0 == Catch::Approx(std::sqrt(all.mass())).epsilon(1e-13));
}

TEST_CASE("four function form matches a flat tile expansion", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    Rng r41(41), r42(42), r43(43), r44(44);
    const SampledSignal f1 = random_band_signal(lat, 10.0, r41);
    const SampledSignal f2 = random_band_signal(lat, 10.0, r42);
    const SampledSignal f3 = random_band_signal(lat, 10.0, r43);
    const SampledSignal f4 = random_band_signal(lat, 10.0, r44);

    ModelConfig cfg;
    cfg.q_tiles = inner_collection();
    cfg.p_tiles = outer_collection_1();
    const cplx v = lambda1_form(cfg, f1, f2, f3, f4);
    REQUIRE(std::abs(v) > 1e-6);

    cplx flat{0.0, 0.0};
    for (const TriTile& p : cfg.p_tiles) {
        const double len = p.time_interval().length().to_double();
        const cplx a1 = packet_coeff(f1, slot_packet(lat, p, 0, {}, {1}));
        const cplx a4 = packet_coeff(f4, slot_packet(lat, p, 2, {}, {4}));
        const WavePacket probe = slot_packet(lat, p, 1, {}, {0});
        const cplx mid = grid_inner(
            bht_model(p.component(1).interval, 0.0, cfg.q_tiles, f2, f3), probe.signal);
        flat += a1 * a4 * mid / std::sqrt(len);
    }
    CHECK(std::abs(v - flat) <= 1e-12 * std::abs(v));

    // enumeration order of either collection is immaterial
    ModelConfig perm = cfg;
    std::reverse(perm.p_tiles.begin(), perm.p_tiles.end());
    std::rotate(perm.q_tiles.begin(), perm.q_tiles.begin() + 11, perm.q_tiles.end());
    const cplx vp = lambda1_form(perm, f1, f2, f3, f4);
    CHECK(std::abs(vp - v) <= 1e-10 * std::abs(v));
}

TEST_CASE("forms are linear in every argument", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    Rng r41(41), r42(42), r43(43), r44(44), r45(45);
    const SampledSignal f1 = random_band_signal(lat, 10.0, r41);
    const SampledSignal f2 = random_band_signal(lat, 10.0, r42);
    const SampledSignal f3 = random_band_signal(lat, 10.0, r43);
    const SampledSignal f4 = random_band_signal(lat, 10.0, r44);
    const SampledSignal g = random_band_signal(lat, 10.0, r45);
    const cplx sc{2.0, -0.5};

    SECTION("first form, all four arguments") {
        ModelConfig cfg;
        cfg.q_tiles = inner_collection();
        cfg.p_tiles = outer_collection_1();
        const cplx base = lambda1_form(cfg, f1, f2, f3, f4);
        const double tol = 1e-10 * std::abs(base);

        CHECK(std::abs(lambda1_form(cfg, combine(f1, g, 1.0, 1.0), f2, f3, f4) -
                       (base + lambda1_form(cfg, g, f2, f3, f4))) <= tol);
        CHECK(std::abs(lambda1_form(cfg, f1, combine(f2, g, 1.0, 1.0), f3, f4) -
                       (base + lambda1_form(cfg, f1, g, f3, f4))) <= tol);
        CHECK(std::abs(lambda1_form(cfg, f1, f2, combine(f3, g, 1.0, 1.0), f4) -
                       (base + lambda1_form(cfg, f1, f2, g, f4))) <= tol);
        CHECK(std::abs(lambda1_form(cfg, f1, f2, f3, combine(f4, g, 1.0, 1.0)) -
                       (base + lambda1_form(cfg, f1, f2, f3, g))) <= tol);
        CHECK(std::abs(lambda1_form(cfg, combine(f1, g, sc, 0.0), f2, f3, f4) - sc * base) <=
              std::abs(sc) * tol);
    }

    SECTION("averaged form, middle argument") {
        ModelConfig cfg;
        cfg.q_tiles = inner_collection();
        cfg.p_tiles = outer_collection_2();
        const cplx base = lambda2_form(cfg, f1, f2, f3, f4);
        REQUIRE(std::abs(base) > 1e-7);
        CHECK(std::abs(lambda2_form(cfg, f1, combine(f2, g, 1.0, 1.0), f3, f4) -
                       (base + lambda2_form(cfg, f1, g, f3, f4))) <= 1e-10 * std::abs(base));
    }
}

TEST_CASE("five function form gates reflections by half open windows", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    Rng r31(31), r32(32), r33(33), r34(34), r35(35), r36(36);
    const SampledSignal f1 = random_band_signal(lat, 10.0, r31);
    const SampledSignal f2 = random_band_signal(lat, 10.0, r32);
    const SampledSignal f3 = random_band_signal(lat, 10.0, r33);
    const SampledSignal f4 = random_band_signal(lat, 10.0, r34);
    const SampledSignal f5 = random_band_signal(lat, 10.0, r35);
    const SampledSignal g = random_band_signal(lat, 10.0, r36);

    // two outer tiles a unit off the degenerate line, coupling offsets 2 and
    // 3; the reflection window [2, 3) takes the first and drops the second
    const TriTile p_in = tri3(0, 2, {0, 0, -4});
    const TriTile p_out = tri3(0, 2, {1, 2, -4});
    CHECK((p_in.component(1).interval.center() - p_in.component(2).interval.center()) / 2 ==
          Rational(2));
    CHECK((p_out.component(1).interval.center() - p_out.component(2).interval.center()) / 2 ==
          Rational(3));

    ModelConfig cfg;
    cfg.q_tiles = inner_collection();
    cfg.p_tiles = {p_in, p_out};
    cfg.r_tiles = {mirror_tri(2, Rational(1))};
    REQUIRE(translated_window(cfg.r_tiles[0]).contains_point(Rational(2)));
    REQUIRE_FALSE(translated_window(cfg.r_tiles[0]).contains_point(Rational(3)));

    const cplx v = lambda3_form(cfg, f1, f2, f3, f4, f5);
    REQUIRE(std::abs(v) > 1e-9);

    // the out-of-window tile contributes an exact zero term
    ModelConfig only_in = cfg;
    only_in.p_tiles = {p_in};
    CHECK(lambda3_form(only_in, f1, f2, f3, f4, f5) == v);

    // a reflection tile whose window misses every coupling offset is inert
    ModelConfig extra = cfg;
    extra.r_tiles.push_back(mirror_tri(5, Rational(7, 2)));
    CHECK(lambda3_form(extra, f1, f2, f3, f4, f5) == v);

    CHECK(lambda3_form(cfg, f1, f2, f3, f4, zero_signal(lat)) == cplx{0.0, 0.0});

    const double tol = 1e-10 * std::abs(v);
    CHECK(std::abs(lambda3_form(cfg, combine(f1, g, 1.0, 1.0), f2, f3, f4, f5) -
                   (v + lambda3_form(cfg, g, f2, f3, f4, f5))) <= tol);
    CHECK(std::abs(lambda3_form(cfg, f1, f2, f3, f4, combine(f5, g, 1.0, 1.0)) -
                   (v + lambda3_form(cfg, f1, f2, f3, f4, g))) <= tol);
    const cplx sc{2.0, -0.5};
    CHECK(std::abs(lambda3_form(cfg, f1, f2, f3, f4, combine(f5, g, sc, 0.0)) - sc * v) <=
          std::abs(sc) * tol);
}

TEST_CASE("collection validation rejects rank violations and off band tiles", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    Rng r41(41);
    const SampledSignal f = random_band_signal(lat, 10.0, r41);

    ModelConfig good;
    good.q_tiles = inner_collection();
    good.p_tiles = outer_collection_1();

    ModelConfig dup = good;
    dup.q_tiles.push_back(dup.q_tiles.front());
    CHECK_THROWS_AS(lambda1_form(dup, f, f, f, f), std::invalid_argument);

    ModelConfig off = good;
    off.p_tiles.push_back(tri3(0, 0, {0, 0, 0}));
    CHECK_THROWS_AS(lambda1_form(off, f, f, f, f), std::invalid_argument);

    ModelConfig badr = good;
    badr.p_tiles = {tri3(0, 2, {0, 0, -4})};
    badr.r_tiles = {TriTile(
        cell(0, 2), {FreqComponent::from_interval(RInterval{Rational(1), Rational(2)}),
                     FreqComponent::from_interval(RInterval{Rational(-3), Rational(-2)}),
                     FreqComponent::from_interval(RInterval{Rational(-1, 2), Rational(1, 2)})})};
    CHECK_THROWS_AS(lambda3_form(badr, f, f, f, f, f), std::invalid_argument);

    badr.r_tiles = {TriTile(
        cell(0, 2), {FreqComponent::from_interval(RInterval{Rational(1), Rational(2)}),
                     FreqComponent::from_interval(RInterval{Rational(-2), Rational(-1)}),
                     FreqComponent::from_interval(RInterval{Rational(0), Rational(1)})})};
    CHECK_THROWS_AS(lambda3_form(badr, f, f, f, f, f), std::invalid_argument);
}

TEST_CASE("selection coefficients reproduce an explicit packet superposition", "[modelsums]") {
    const FrequencyLattice lat(256, 16.0);
    const std::vector<TriTile> hand = hand_tiles();
    const SampledSignal f = hand_signal(lat, hand);
    CHECK(std::abs(selection_coeff(hand[0], f) - cplx{2.0, 0.0}) <= 1e-9);
    CHECK(std::abs(selection_coeff(hand[1], f) - cplx{1.0, 0.0}) <= 1e-9);
    CHECK(std::abs(selection_coeff(hand[2], f)) <= 1e-12);
    CHECK(std::abs(selection_coeff(hand[3], f)) <= 1e-12);
}

TEST_CASE("tree selection harvests the hand instance in order", "[modelsums]") {
    const FrequencyLattice lat(256, 16.0);
    const std::vector<TriTile> hand = hand_tiles();
    const SampledSignal f = hand_signal(lat, hand);

    const TreeSelectResult sel = tree_select(hand, f, 0);
    CHECK(sel.threshold_scale == 0.125);
    REQUIRE(sel.trees.size() == 2);
    CHECK(sel.residual.empty());

    const SelectedTree& t0 = sel.trees[0];
    CHECK(to_text(t0.top) == to_text(hand[0]));
    CHECK(t0.upward);
    CHECK(text_multiset(t0.members) ==
          std::multiset<std::string>{to_text(hand[0]), to_text(hand[3])});
    CHECK(text_multiset(t0.companion) == std::multiset<std::string>{to_text(hand[2])});
    CHECK(t0.mass == Catch::Approx(4.0).margin(1e-9));

    const SelectedTree& t1 = sel.trees[1];
    CHECK(to_text(t1.top) == to_text(hand[1]));
    CHECK(t1.upward);
    CHECK(text_multiset(t1.members) == std::multiset<std::string>{to_text(hand[1])});
    CHECK(t1.companion.empty());
    CHECK(t1.mass == Catch::Approx(1.0).margin(1e-9));

    // removed and remaining tiles partition the input
    std::multiset<std::string> seen;
    for (const SelectedTree& t : sel.trees) {
        for (const TriTile& m : t.members) seen.insert(to_text(m));
        for (const TriTile& c : t.companion) seen.insert(to_text(c));
    }
    for (const TriTile& t : sel.residual) seen.insert(to_text(t));
    CHECK(seen == text_multiset(hand));

    // both harvested trees face up and the chain passes the disjointness check
    const std::vector<Tree> up = selection_chain(sel, true);
    REQUIRE(up.size() == 2);
    CHECK(check_strongly_disjoint(up, 0).ok);
    CHECK(selection_chain(sel, false).empty());

    const std::string csv = selection_csv(sel);
    REQUIRE(csv.rfind("tree,branch,interval,members,companions,mass,size\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("0,up,1,2,1,") != std::string::npos);
    CHECK(csv.find("1,up,1,1,0,") != std::string::npos);
}

TEST_CASE("tree selection respects thresholds and leaves quiet tiles alone", "[modelsums]") {
    const FrequencyLattice lat(256, 16.0);
    const std::vector<TriTile> hand = hand_tiles();

    SECTION("single active packet") {
        const WavePacket pb = slot_packet(lat, hand[1], 0, {}, {1});
        const TreeSelectResult sel = tree_select(hand, pb.signal, 0);
        REQUIRE(sel.trees.size() == 1);
        CHECK(to_text(sel.trees[0].top) == to_text(hand[1]));
        CHECK(sel.trees[0].members.size() == 1);
        CHECK(text_multiset(sel.trees[0].companion) ==
              std::multiset<std::string>{to_text(hand[2])});
        CHECK(sel.residual.size() == 2);
    }

    SECTION("silent input") {
        const TreeSelectResult sel = tree_select(hand, zero_signal(lat), 0);
        CHECK(sel.trees.empty());
        CHECK(sel.residual.size() == hand.size());
    }

    SECTION("structural rejections") {
        Rng r7(7);
        const SampledSignal f = random_band_signal(lat, 8.0, r7);
        CHECK_THROWS_AS(tree_select({TriTile(cell(0, 0), {cell(0, 0), cell(0, 2)})}, f, 0),
                        std::invalid_argument);
        const TriTile gen(cell(0, 0),
                          {FreqComponent::from_mesh(cell(0, 0)),
                           FreqComponent::from_interval(RInterval{Rational(1, 3), Rational(4, 3)}),
                           FreqComponent::from_mesh(cell(0, 2))});
        CHECK_THROWS_AS(tree_select({gen}, f, 0), std::invalid_argument);
    }
}

TEST_CASE("selection size matches a dense scan oracle", "[modelsums]") {
    const FrequencyLattice lat(256, 16.0);
    const std::vector<TriTile> hand = hand_tiles();

    SECTION("explicit superposition") {
        const SampledSignal f = hand_signal(lat, hand);
        std::vector<double> masses;
        for (const TriTile& t : hand) masses.push_back(std::norm(selection_coeff(t, f)));
        const double expect = oracle_size(hand, masses, 1);
        CHECK(size_1(hand, f) == Catch::Approx(expect).epsilon(1e-12));
        CHECK(size_1(hand, f) == Catch::Approx(2.0).margin(1e-9));
    }

    SECTION("random input") {
        Rng r5(5);
        const SampledSignal f = random_band_signal(lat, 8.0, r5);
        std::vector<double> masses;
        for (const TriTile& t : hand) masses.push_back(std::norm(selection_coeff(t, f)));
        CHECK(size_1(hand, f) == Catch::Approx(oracle_size(hand, masses, 1)).epsilon(1e-12));
    }

    SECTION("degenerate inputs") {
        const WavePacket pa = slot_packet(lat, hand[0], 0, {}, {1});
        const SampledSignal f = combine(pa.signal, pa.signal, cplx{0.7, 0.0}, cplx{0.0, 0.0});
        CHECK(size_1({hand[0]}, f) == Catch::Approx(0.7).margin(1e-9));
        CHECK(size_1({}, f) == 0.0);
        CHECK(size_1(hand, zero_signal(lat)) == 0.0);
    }
}

TEST_CASE("selection layers partition the collection with level scaled sizes", "[modelsums]") {
    const FrequencyLattice lat(2048, 32.0);
    const std::vector<TriTile> p2 = outer_collection_2();
    Rng r3(3);
    const SampledSignal f = random_band_signal(lat, 10.0, r3);

    const std::vector<SizePart> parts = size_decompose(p2, f);
    REQUIRE(parts.size() == 5);
    const std::array<int, 5> levels{3, 4, 5, 6, 7};
    const std::array<std::size_t, 5> tile_counts{39, 4, 1, 1, 1};
    const std::array<std::size_t, 5> tree_counts{25, 4, 1, 1, 1};
    const std::array<double, 5> sizes{0.17945555796190651, 0.04229296016054563,
                                      0.011130921249617428, 0.010606201232715589,
                                      0.0040148477514658281};
    std::multiset<std::string> seen;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        CHECK(parts[i].level == levels[i]);
        CHECK(parts[i].part.size() == tile_counts[i]);
        CHECK(parts[i].trees.size() == tree_counts[i]);
        CHECK(parts[i].part_size == Catch::Approx(sizes[i]).epsilon(1e-9));
        // each layer's size is controlled by its threshold scale
        CHECK(parts[i].part_size <= 4.0 * std::ldexp(1.0, -parts[i].level));
        for (const TriTile& t : parts[i].part) seen.insert(to_text(t));
    }
    CHECK(seen == text_multiset(p2));

    // silent input collapses to a single zero layer holding everything
    const std::vector<SizePart> silent = size_decompose(hand_tiles(), zero_signal(FrequencyLattice(256, 16.0)));
    REQUIRE(silent.size() == 1);
    CHECK(silent[0].part_size == 0.0);
    CHECK(silent[0].trees.empty());
    CHECK(silent[0].part.size() == 4);
}

TEST_CASE("energy follows the coefficient ladder on singletons", "[modelsums]") {
    const std::vector<TriTile> one{tri3(0, 0, {0, 2, 4})};

    EnergyResult e = energy_j(one, {cplx{0.9, 0.0}}, 0);
    CHECK(e.value == Catch::Approx(0.707106781186548).epsilon(1e-12));
    CHECK(e.level == -1);
    CHECK(e.exact);
    CHECK(e.chain_trees == 1);

    e = energy_j(one, {cplx{1.0, 0.0}}, 0);
    CHECK(e.value == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(e.level == 0);

    CHECK(energy_j(one, {cplx{0.0, 0.0}}, 0).value == 0.0);
    CHECK(energy_j({}, {}, 0).value == 0.0);

    // one tile of mass m scores in (sqrt(m/2), sqrt(m)]
    for (const double a : {0.3, 0.55, 1.3, 2.7, 17.0}) {
        const EnergyResult r = energy_j(one, {cplx{a, 0.0}}, 0);
        CHECK(r.value <= a + 1e-12);
        CHECK(r.value > a / std::sqrt(2.0) - 1e-12);
        CHECK(r.exact);
    }

    CHECK_THROWS_AS(energy_j(one, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(energy_j(one, {cplx{1.0, 0.0}}, 3), std::invalid_argument);
}

TEST_CASE("energy exact search beats greedy under forced orientations", "[modelsums]") {
    EnergyOptions greedy;
    greedy.max_exact_tiles = 0;

    SECTION("orientation forced by a coarse witness top") {
        // two tiles sharing frequency cells: the heavy one supports a
        // four-cell tree that must come after the light singleton
        const std::vector<TriTile> ts{tri3(0, 0, {0, 2, 4}), tri3(0, 1, {0, 2, 4})};
        const std::vector<cplx> cs{cplx{1.05, 0.0}, cplx{std::sqrt(0.26), 0.0}};
        const EnergyResult ex = energy_j(ts, cs, 0);
        CHECK(ex.value == Catch::Approx(std::sqrt(5.0) / 2.0).epsilon(1e-12));
        CHECK(ex.exact);
        CHECK(ex.level == -1);
        CHECK(ex.chain_trees == 2);

        // the ordered greedy pass grabs the big tree first and gets stuck
        const EnergyResult gr = energy_j(ts, cs, 0, greedy);
        CHECK(gr.value == Catch::Approx(1.0).epsilon(1e-12));
        CHECK_FALSE(gr.exact);
    }

    SECTION("spread family where greedy is already optimal") {
        std::vector<TriTile> sp;
        std::vector<cplx> cs;
        Rng r11(11);
        for (int i = 0; i < 10; ++i) {
            sp.push_back(tri3(0, 0, {7 * i, 7 * i + 2, 7 * i + 4}));
            cs.push_back(r11.coefficient());
        }
        const EnergyResult ex = energy_j(sp, cs, 0);
        const EnergyResult gr = energy_j(sp, cs, 0, greedy);
        CHECK(ex.value == Catch::Approx(1.870828693386971).epsilon(1e-9));
        CHECK(ex.exact);
        CHECK(gr.value == Catch::Approx(ex.value).epsilon(1e-12));
        CHECK_FALSE(gr.exact);
    }

    SECTION("beyond the exact tile budget") {
        std::vector<TriTile> many;
        std::vector<cplx> cs;
        for (int i = 0; i < 13; ++i) {
            many.push_back(tri3(0, 0, {9 * i, 9 * i + 2, 9 * i + 4}));
            cs.push_back(cplx{1.0, 0.0});
        }
        const EnergyResult e = energy_j(many, cs, 0);
        CHECK_FALSE(e.exact);
        CHECK(e.value == Catch::Approx(std::sqrt(13.0)).epsilon(1e-9));
    }
}

TEST_CASE("tree selection prefers the downward branch when mass sits below the top",
          "[modelsums]") {
    const FrequencyLattice lat(16384, 256.0);
    const TriTile top = tri3(6, 0, {32, 0, -32});
    const TriTile member = tri3(0, 5, {-3, -1, -1});

    // solve a 2x2 system so the two first-slot coefficients land exactly on
    // sqrt(7.95) and sqrt(0.12)
    const WavePacket pt = slot_packet(lat, top, 0, {}, {1});
    const WavePacket pm = slot_packet(lat, member, 0, {}, {1});
    const cplx g1 = grid_inner(pt.signal, pt.signal);
    const cplx g12 = grid_inner(pm.signal, pt.signal);
    const cplx g21 = grid_inner(pt.signal, pm.signal);
    const cplx g2 = grid_inner(pm.signal, pm.signal);
    const cplx ct{std::sqrt(7.95), 0.0};
    const cplx cm{std::sqrt(0.12), 0.0};
    const cplx det = g1 * g2 - g12 * g21;
    const SampledSignal f =
        combine(pt.signal, pm.signal, (ct * g2 - cm * g12) / det, (g1 * cm - g21 * ct) / det);

    const TreeSelectResult sel = tree_select({top, member}, f, 0);
    REQUIRE(sel.trees.size() == 1);
    CHECK(sel.residual.empty());
    CHECK_FALSE(sel.trees[0].upward);
    CHECK(to_text(sel.trees[0].top) == to_text(top));
    CHECK(sel.trees[0].members.size() == 2);
    CHECK(sel.trees[0].companion.empty());
    CHECK(sel.trees[0].mass == Catch::Approx(8.07).margin(1e-6));

    const std::vector<Tree> down = selection_chain(sel, false);
    REQUIRE(down.size() == 1);
    CHECK(check_strongly_disjoint(down, 0).ok);
}

TEST_CASE("selected chains on separated collections stay strongly disjoint", "[modelsums]") {
    const FrequencyLattice lat(16384, 256.0);
    int chains = 0;
    int multi_member = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        Rng rng(seed);
        const std::vector<TriTile> tiles = separated_instance(rng, 6);
        REQUIRE(is_sparse(tiles, 10).sparse);
        const SampledSignal f = random_band_signal(lat, 26.0, rng);

        std::size_t covered = 0;
        for (const SizePart& part : size_decompose(tiles, f)) {
            covered += part.part.size();
            for (const bool up : {true, false}) {
                std::vector<Tree> chain;
                for (const SelectedTree& t : part.trees)
                    if (t.upward == up) {
                        chain.push_back(selection_tree(t));
                        if (t.members.size() > 1) ++multi_member;
                    }
                if (chain.empty()) continue;
                ++chains;
                CHECK(check_strongly_disjoint(chain, 0).ok);
            }
        }
        CHECK(covered == tiles.size());
    }
    // the sweep is not vacuous: plenty of chains, some with branching trees
    CHECK(chains >= 100);
    CHECK(multi_member >= 5);
}

TEST_CASE("bessel ratios stay below one on the hand instance", "[modelsums]") {
    const FrequencyLattice lat(256, 16.0);
    const std::vector<TriTile> hand = hand_tiles();
    ModelConfig cfg;
    cfg.p_tiles = hand;

    const SampledSignal f = hand_signal(lat, hand);
    const EnergyRatioReport rep = measure_energy_bounds(cfg, {f}, EnergyMode::bessel);
    CHECK(rep.mode == EnergyMode::bessel);
    CHECK(rep.chains_ok);
    CHECK(rep.ratio == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].count == 2);
    CHECK(rep.rows[0].lhs == Catch::Approx(5.0).margin(1e-6));
    CHECK(rep.rows[0].rhs == Catch::Approx(5.0).margin(1e-6));
    CHECK(rep.e2 == 0.0);
    CHECK(rep.e3 == 0.0);

    // silent input reports nothing rather than dividing by zero
    const EnergyRatioReport silent = measure_energy_bounds(cfg, {zero_signal(lat)}, EnergyMode::bessel);
    CHECK(silent.ratio == 0.0);
    CHECK(silent.rows.empty());

    CHECK_THROWS_AS(measure_energy_bounds(cfg, {f, f}, EnergyMode::bessel), std::invalid_argument);
    CHECK_THROWS_AS(measure_energy_bounds(cfg, {f}, EnergyMode::l1), std::invalid_argument);
}

TEST_CASE("truncation ratios compare superlevel mass to support geometry", "[modelsums]") {
    const FrequencyLattice lat(1024, 32.0);
    ModelConfig cfg;
    cfg.q_tiles = inner_collection();
    cfg.p_tiles = {tri3(0, 4, {-8, -4, 6}), tri3(0, 9, {-8, -4, 6})};
    const SampledSignal f2 = indicator_signal(lat, 0.0, 6.0);
    const SampledSignal f3 = indicator_signal(lat, 2.0, 12.0);

    const EnergyRatioReport rep = measure_energy_bounds(cfg, {f2, f3}, EnergyMode::l1);
    CHECK(rep.mode == EnergyMode::l1);
    CHECK(rep.e2 == 6.0);
    CHECK(rep.e3 == 10.0);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].level == 14);
    CHECK(rep.rows[0].count == 0);
    CHECK(rep.rows[0].lhs == 0.0);
    CHECK(rep.rows[1].level == 15);
    CHECK(rep.rows[1].count == 2);
    CHECK(rep.rows[1].lhs == 2.0);
    for (const RatioRow& row : rep.rows)
        CHECK(row.rhs == Catch::Approx(std::ldexp(std::sqrt(60.0), row.level)).epsilon(1e-12));
    CHECK(rep.ratio == Catch::Approx(rep.rows[1].lhs / rep.rows[1].rhs).epsilon(1e-12));
    CHECK(rep.ratio < 1.0);

    // middle slots must tile disjointly
    ModelConfig overlap = cfg;
    overlap.p_tiles.push_back(tri3(0, 4, {-8, -4, 7}));
    CHECK_THROWS_AS(measure_energy_bounds(overlap, {f2, f3}, EnergyMode::l1),
                    std::invalid_argument);

    // inputs above unit height are rejected
    CHECK_THROWS_AS(
        measure_energy_bounds(cfg, {indicator_signal(lat, 0.0, 6.0, 2.0), f3}, EnergyMode::l1),
        std::invalid_argument);

    // an empty support short-circuits with an empty table
    const EnergyRatioReport zr = measure_energy_bounds(cfg, {f2, zero_signal(lat)}, EnergyMode::l1);
    CHECK(zr.ratio == 0.0);
    CHECK(zr.rows.empty());
    CHECK(zr.e2 == 6.0);
    CHECK(zr.e3 == 0.0);
}
