#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace latmul {

/// Exact rational scalar.  Arithmetic routes every intermediate product
/// through 128-bit integers and re-reduces, so values stay exact as long as
/// the reduced numerator and denominator fit in 64 bits; anything larger
/// throws instead of silently wrapping.
class Rational {
public:
    Rational() = default;
    Rational(long long value) : num_(value), den_(1) {}  // NOLINT: implicit by design
    Rational(long long num, long long den) : num_(num), den_(den) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::invalid_argument("Rational: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ <=> i128(b.num_) * a.den_;
    }

    Rational abs() const { return num_ < 0 ? Rational(-num_, den_) : *this; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

    /// 2^j as an exact rational, for any sign of j.
    static Rational pow2(int j) {
        if (j < -62 || j > 62) throw std::overflow_error("Rational: 2^j out of 64-bit range");
        const long long p = 1LL << (j < 0 ? -j : j);
        return j < 0 ? Rational(1, p) : Rational(p);
    }

private:
    using i128 = __int128;

    static Rational make(i128 num, i128 den) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const i128 g = gcd128(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        constexpr i128 lim = INT64_MAX;
        if (num > lim || num < -lim || den > lim)
            throw std::overflow_error("Rational: value exceeds 64-bit range after reduction");
        Rational r;
        r.num_ = static_cast<long long>(num);
        r.den_ = static_cast<long long>(den);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) {
            const i128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    void normalize() { *this = make(num_, den_); }

    long long num_ = 0;
    long long den_ = 1;
};

/// Closed-endpoint view is never needed separately: intervals are stored as
/// [lo, hi) for tiling/disjointness of mesh cells, while dilation-overlap
/// predicates (the conservative ones) treat operands as closed.
struct RInterval {
    Rational lo;
    Rational hi;

    RInterval() = default;
    RInterval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
        if (!(lo < hi)) throw std::invalid_argument("RInterval: requires lo < hi");
    }

    Rational length() const { return hi - lo; }
    Rational center() const { return (lo + hi) / 2; }

    /// Interval with the same center and c times the length.
    RInterval dilate(const Rational& c) const {
        const Rational ctr = center();
        const Rational half = length() * c / 2;
        return {ctr - half, ctr + half};
    }

    /// Reflection through the origin.
    RInterval negate() const { return {-hi, -lo}; }

    bool contains(const RInterval& inner) const { return lo <= inner.lo && inner.hi <= hi; }
    bool contains_strictly(const RInterval& inner) const {
        return contains(inner) && !(*this == inner);
    }
    bool contains_point(const Rational& x) const { return lo <= x && x < hi; }

    /// Half-open overlap, for mesh cells.
    bool intersects(const RInterval& other) const { return lo < other.hi && other.lo < hi; }
    /// Closed overlap, for dilated-cube separation checks.
    bool intersects_closed(const RInterval& other) const {
        return lo <= other.hi && other.lo <= hi;
    }

    /// Sup-metric distance from the interval to a point (0 inside).
    Rational distance_to(const Rational& x) const {
        if (x < lo) return lo - x;
        if (x > hi) return x - hi;
        return Rational(0);
    }

    friend bool operator==(const RInterval& a, const RInterval& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

}  // namespace latmul
