#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace sfd {

// Exact rational scalar over Q. Always kept canonical (lowest terms,
// positive denominator); gmp arithmetic preserves canonical form.
class Rational {
public:
    Rational() : v_(0) {}
    explicit Rational(long n) : v_(n) {}
    Rational(long n, long d) : v_(n, d) {
        if (d == 0) throw std::invalid_argument("Rational: zero denominator");
        v_.canonicalize();
    }
    explicit Rational(const mpq_class& v) : v_(v) { v_.canonicalize(); }

    static Rational from_string(const std::string& s) {
        mpq_class v;
        if (v.set_str(s, 10) != 0)
            throw std::invalid_argument("Rational: bad literal '" + s + "'");
        v.canonicalize();
        return Rational(v);
    }

    bool is_zero() const { return sgn(v_) == 0; }
    bool is_one() const { return v_ == 1; }

    Rational operator+(const Rational& o) const { return Rational(mpq_class(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(mpq_class(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(mpq_class(v_ * o.v_)); }
    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational inv() const {
        if (is_zero()) throw std::domain_error("Rational: division by zero");
        return Rational(mpq_class(1 / v_));
    }
    Rational operator/(const Rational& o) const { return *this * o.inv(); }

    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    bool operator!=(const Rational& o) const { return v_ != o.v_; }

    Rational zero_like() const { return Rational(); }
    Rational one_like() const { return Rational(1); }
    Rational from_int_like(long k) const { return Rational(k); }
    bool char_two() const { return false; }

    // Exact string form "num/den".
    std::string str() const {
        return v_.get_num().get_str() + "/" + v_.get_den().get_str();
    }

    const mpq_class& value() const { return v_; }

private:
    mpq_class v_;
};

// Prime field F_p, residues normalised to [0, p). The modulus travels with
// the value; mixing moduli is a programming error.
class GFp {
public:
    GFp() : v_(0), p_(0) {}
    GFp(uint64_t v, uint32_t p) : p_(p) {
        assert(p >= 2);
        v_ = static_cast<uint32_t>(v % p);
    }

    static GFp from_string(const std::string& s, uint32_t p) {
        mpz_class z;
        if (z.set_str(s, 10) != 0)
            throw std::invalid_argument("GFp: bad literal '" + s + "'");
        mpz_class r = z % p;
        if (r < 0) r += p;
        return GFp(r.get_ui(), p);
    }

    bool is_zero() const { return v_ == 0; }
    bool is_one() const { return v_ == 1; }
    uint32_t residue() const { return v_; }
    uint32_t p() const { return p_; }

    GFp operator+(const GFp& o) const { return GFp(uint64_t(v_) + pick(o), pp(o)); }
    GFp operator-(const GFp& o) const { return GFp(uint64_t(v_) + pp(o) - pick(o), pp(o)); }
    GFp operator*(const GFp& o) const { return GFp(uint64_t(v_) * pick(o), pp(o)); }
    GFp operator-() const { return p_ == 0 ? *this : GFp(uint64_t(p_) - v_, p_); }
    GFp inv() const {
        if (v_ == 0) throw std::domain_error("GFp: division by zero");
        // extended Euclid
        int64_t a = v_, m = p_, x0 = 1, x1 = 0;
        while (m != 0) {
            int64_t q = a / m;
            int64_t t = a - q * m; a = m; m = t;
            t = x0 - q * x1; x0 = x1; x1 = t;
        }
        assert(a == 1);
        return GFp(uint64_t(x0 < 0 ? x0 + p_ : x0), p_);
    }
    GFp operator/(const GFp& o) const { return *this * o.inv(); }

    GFp& operator+=(const GFp& o) { return *this = *this + o; }
    GFp& operator-=(const GFp& o) { return *this = *this - o; }
    GFp& operator*=(const GFp& o) { return *this = *this * o; }

    bool operator==(const GFp& o) const {
        assert(p_ == o.p_ || v_ == 0 || o.v_ == 0);
        return v_ == o.v_;
    }
    bool operator!=(const GFp& o) const { return !(*this == o); }

    GFp zero_like() const { return GFp(0, p_ ? p_ : 2); }
    GFp one_like() const {
        if (p_ < 2) throw std::logic_error("GFp: modulus not set");
        return GFp(1, p_);
    }
    GFp from_int_like(long k) const {
        if (p_ < 2) throw std::logic_error("GFp: modulus not set");
        long r = k % long(p_);
        if (r < 0) r += p_;
        return GFp(uint64_t(r), p_);
    }
    bool char_two() const { return p_ == 2; }

    std::string str() const { return std::to_string(v_); }

private:
    // A default-constructed GFp is the zero of an unknown modulus; it may
    // combine with anything.
    uint32_t pick(const GFp& o) const { return o.v_; }
    uint32_t pp(const GFp& o) const {
        assert(p_ == o.p_ || p_ == 0 || o.p_ == 0);
        uint32_t p = p_ ? p_ : o.p_;
        assert(p >= 2);
        return p;
    }

    uint32_t v_;
    uint32_t p_;
};

// Runtime ring selector used at I/O and CLI boundaries.
struct RingDesc {
    enum class Kind { Q, Fp };
    Kind kind = Kind::Q;
    uint32_t p = 0;

    bool operator==(const RingDesc& o) const { return kind == o.kind && p == o.p; }
};

inline bool is_probable_prime(uint32_t p) {
    if (p < 2) return false;
    for (uint32_t d = 2; uint64_t(d) * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

template <class K> K parse_scalar(const std::string& s, const RingDesc& ring);

template <> inline Rational parse_scalar<Rational>(const std::string& s, const RingDesc&) {
    return Rational::from_string(s);
}
template <> inline GFp parse_scalar<GFp>(const std::string& s, const RingDesc& ring) {
    return GFp::from_string(s, ring.p);
}

template <class K> RingDesc ring_of(const K& like);
template <> inline RingDesc ring_of<Rational>(const Rational&) { return RingDesc{RingDesc::Kind::Q, 0}; }
template <> inline RingDesc ring_of<GFp>(const GFp& like) { return RingDesc{RingDesc::Kind::Fp, like.p()}; }

}  // namespace sfd
