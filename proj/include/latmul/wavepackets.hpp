#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "tiles.hpp"

namespace latmul {

/// Smooth even profile whose frequency content lives exactly in
/// [-9/20, 9/20]: hat(u) = exp(A - A/(1 - (20u/9)^2)^p) inside the support
/// and zero outside.  Building packets from a frequency-compact profile
/// keeps disjoint-spectrum orthogonality exact on the lattice.  The boundary
/// order p controls the space tail, roughly exp(-c x^{p/(p+1)}).  No profile
/// of bandwidth 9/10 can sink below (1+|x|)^{-10} at moderate distances, so
/// envelope fits against that power are tail-dominated with constants around
/// 1e6; the defaults p = 2, A = 3 hold that plateau flat (max ratio near ten
/// cell lengths, inside any reasonable window) so fitted constants stay
/// comparable across scales and grids.
///
/// smoothness bounds the derivative orders a validator may probe; decay is
/// the envelope exponent L used by the fits.
struct MotherBump {
    int smoothness = 4;
    int decay = 10;
    double boundary_order = 2.0;
    double sharpness = 3.0;

    static constexpr double support_radius = 0.45;

    /// Frequency profile at u (mother units, packet spectrum at
    /// c_omega + u/|I|).  Even, peak 1 at u = 0, identically zero for
    /// |u| >= support_radius.
    double hat(double u) const {
        const double v = u / support_radius;
        if (!(std::abs(v) < 1.0)) return 0.0;
        return std::exp(sharpness - sharpness / std::pow(1.0 - v * v, boundary_order));
    }

    /// Two-sided profile vanishing on the middle quarter of the support:
    /// bumps at u = +-1/4 of width 9/80 each.  Spectrum omits
    /// [-9/80, 9/80] around the center, a strict superset of |u| <= 1/8.
    double hat_gapped(double u) const {
        return hat(4.0 * (u - 0.25)) + hat(4.0 * (u + 0.25));
    }

    /// Space samples of the profile itself on a lattice (Riemann synthesis
    /// of the frequency profile; spectrum exact by construction).
    SampledSignal realize(const FrequencyLattice& lat) const {
        std::vector<cplx> coeffs(static_cast<std::size_t>(lat.samples));
        for (int k = lat.min_index(); k <= lat.max_index(); ++k)
            coeffs[static_cast<std::size_t>(k - lat.min_index())] =
                hat(lat.xi(k)) / lat.length;
        return SampledSignal::from_coefficients(lat, std::move(coeffs));
    }
};

/// standard: unit-L2 packet, spectrum inside the shrunk frequency cell.
/// gapped:   same but the spectrum omits a neighborhood of the cell center
///           (mean-zero flavor used where cancellation matters).
/// sup_normalized: |I|^{1/2} |Phi|, a positive weight of unit height; it
///           trades the spectral support for pointwise control and is not
///           expected to pass the spectral checks.
enum class PacketKind { standard, gapped, sup_normalized };

struct PacketOptions {
    int variant = 0;
    PacketKind kind = PacketKind::standard;
    /// Continuous translation knob in [0,1]: shifts the profile by
    /// alpha * |I| in space, used when averaging over packet families.
    double alpha = 0.0;
};

/// L2-normalized bump occupying the unit-area rectangle box: spectrum inside
/// the 9/10-dilate of box.freq, mass concentrated on box.time.  variant v
/// applies a global phase pi v/4 and a translation by v/8 of |I|, so packets
/// with distinct variants on one tile are genuinely distinct functions drawn
/// from the same admissible class.
struct WavePacket {
    TimeFreqRect box;
    int variant = 0;
    PacketKind kind = PacketKind::standard;
    double alpha = 0.0;
    double freq_center = 0.0;
    SampledSignal signal;
};

inline WavePacket make_wave_packet(const FrequencyLattice& lat, const TimeFreqRect& box,
                                   const MotherBump& mother = {},
                                   const PacketOptions& opt = {}) {
    if (!(box.time.length() * box.freq.length() == Rational(1)))
        throw std::invalid_argument("make_wave_packet: box must have unit area");
    const double scale = box.time.length().to_double();
    const double h = lat.spacing();
    if (scale < 4.0 * h)
        throw std::invalid_argument("make_wave_packet: time cell under four sample spacings");
    if (scale > 0.25 * lat.length)
        throw std::invalid_argument(
            "make_wave_packet: frequency cell under four lattice steps wide");
    const double lo = box.freq.lo.to_double();
    const double hi = box.freq.hi.to_double();
    if (lo < lat.xi(lat.min_index()) - 1e-12 ||
        hi > lat.xi(lat.max_index() + 1) + 1e-12)
        throw band_overflow_error("make_wave_packet: frequency cell outside lattice band");

    const double c_omega = box.freq.center().to_double();
    const double c_time = box.time.center().to_double();
    // Mother-unit translation: variant steps of 1/8 plus the continuous knob.
    const double shift = static_cast<double>(opt.variant) / 8.0 + opt.alpha;
    const double phase0 = pi * static_cast<double>(opt.variant) / 4.0;
    const bool gapped = opt.kind == PacketKind::gapped;

    // Synthesize in frequency: the transform of
    // |I|^{-1/2} m((x - c_I)/|I| - shift) e^{2 pi i c_omega x} evaluated at
    // the lattice points, which pins the spectral support exactly.
    const int n = lat.samples;
    std::vector<cplx> coeffs(static_cast<std::size_t>(n));
    double norm_sq = 0.0;
    for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
        const double u = scale * (lat.xi(k) - c_omega);
        const double amp = gapped ? mother.hat_gapped(u) : mother.hat(u);
        if (amp == 0.0) continue;
        const double arg =
            phase0 - 2.0 * pi * (lat.xi(k) - c_omega) * c_time - 2.0 * pi * u * shift;
        const cplx density = std::sqrt(scale) * amp * std::polar(1.0, arg);
        coeffs[static_cast<std::size_t>(k - lat.min_index())] = density / lat.length;
        norm_sq += std::norm(density) / lat.length;
    }
    if (!(norm_sq > 0.0))
        throw std::invalid_argument("make_wave_packet: frequency cell misses the lattice");
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (auto& c : coeffs) c *= inv_norm;

    SampledSignal sig = SampledSignal::from_coefficients(lat, std::move(coeffs));
    if (opt.kind == PacketKind::sup_normalized) {
        std::vector<cplx> flat(sig.samples().size());
        const double height = std::sqrt(scale);
        for (std::size_t j = 0; j < flat.size(); ++j)
            flat[j] = height * std::abs(sig.samples()[j]);
        sig = SampledSignal(lat, std::move(flat));
    }
    return WavePacket{box, opt.variant, opt.kind, opt.alpha, c_omega, std::move(sig)};
}

inline WavePacket make_wave_packet(const FrequencyLattice& lat, const Tile& tile,
                                   const MotherBump& mother = {},
                                   const PacketOptions& opt = {}) {
    return make_wave_packet(lat, rect_of(tile), mother, opt);
}

/// Packet occupying slot i of a multi-tile.
inline WavePacket slot_packet(const FrequencyLattice& lat, const TriTile& tile, std::size_t i,
                              const MotherBump& mother = {}, const PacketOptions& opt = {}) {
    return make_wave_packet(lat, tile.slot(i), mother, opt);
}

/// Grid inner product h * sum f conj(g), conjugate-linear in the second slot.
inline cplx grid_inner(const SampledSignal& f, const SampledSignal& g) {
    if (f.lattice() != g.lattice())
        throw lattice_mismatch_error("grid_inner: operands on different lattices");
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < f.samples().size(); ++j)
        acc += f.samples()[j] * std::conj(g.samples()[j]);
    return f.lattice().spacing() * acc;
}

inline cplx packet_coeff(const SampledSignal& f, const WavePacket& p) {
    return grid_inner(f, p.signal);
}

/// Distance from x to c on the circle of circumference len.
inline double periodic_distance(double x, double c, double len) {
    return std::abs(std::remainder(x - c, len));
}

/// Validation report for one packet.  support_leak is the largest spectral
/// density outside the 9/10-dilate of the frequency cell, relative to the
/// spectral peak.  envelope_c0 / envelope_c1 are the smallest constants
/// making |I|^{1/2+k} |d^k/dx^k demodulated packet| <= C_k (1+|x-c_I|/|I|)^{-L}
/// hold at every probed sample (k = 1 via centered finite differences);
/// samples where the envelope dips below the floating noise floor are left
/// out of the fit.
struct PacketReport {
    double l2_norm = 0.0;
    bool norm_ok = false;
    double support_leak = 0.0;
    bool support_ok = false;
    double envelope_c0 = 0.0;
    double envelope_c1 = 0.0;
    bool pass = false;
};

inline PacketReport verify_packet(const WavePacket& p, const MotherBump& mother = {}) {
    const FrequencyLattice& lat = p.signal.lattice();
    PacketReport rep;

    rep.l2_norm = lp_norm(p.signal, 2.0);
    rep.norm_ok = std::abs(rep.l2_norm - 1.0) <= 1e-8;

    const double half_band = 0.45 * p.box.freq.length().to_double();
    double peak = 0.0, leak = 0.0;
    for (int k = lat.min_index(); k <= lat.max_index(); ++k) {
        const double mag = std::abs(p.signal.coefficient(k));
        peak = std::max(peak, mag);
        if (std::abs(lat.xi(k) - p.freq_center) > half_band * (1.0 + 1e-12))
            leak = std::max(leak, mag);
    }
    rep.support_leak = peak > 0.0 ? leak / peak : 0.0;
    rep.support_ok = rep.support_leak <= 1e-10;

    const double scale = p.box.time.length().to_double();
    const double c_time = p.box.time.center().to_double();
    const double h = lat.spacing();
    const int n = lat.samples;
    // Envelope values below this are comparable to rounding noise in the
    // synthesis; ratios against them would fit noise, not decay.
    const double envelope_floor = 1e-11;

    std::vector<cplx> demod(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        demod[static_cast<std::size_t>(j)] =
            p.signal.samples()[static_cast<std::size_t>(j)] *
            std::polar(1.0, -2.0 * pi * p.freq_center * lat.x(j));

    double c0 = 0.0, c1 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = periodic_distance(lat.x(j), c_time, lat.length) / scale;
        const double env = std::pow(1.0 + d, -mother.decay);
        if (env < envelope_floor) continue;
        c0 = std::max(c0, std::abs(demod[static_cast<std::size_t>(j)]) * std::sqrt(scale) / env);
        if (j >= 1 && j + 1 < n) {
            const cplx deriv = (demod[static_cast<std::size_t>(j + 1)] -
                                demod[static_cast<std::size_t>(j - 1)]) /
                               (2.0 * h);
            c1 = std::max(c1, std::abs(deriv) * std::pow(scale, 1.5) / env);
        }
    }
    rep.envelope_c0 = c0;
    rep.envelope_c1 = c1;

    rep.pass = rep.norm_ok && rep.support_ok;
    return rep;
}

}  // namespace latmul
