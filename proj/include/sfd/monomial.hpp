#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

namespace sfd {

inline constexpr int kMaxVars = 6;

// Exponent vector packed one byte per variable, x1 in the most significant
// used byte. Within a fixed degree, larger packed value = larger in lex
// order with x1 > x2 > ... > xn.
struct Mono {
    uint64_t packed = 0;

    static Mono one() { return Mono{0}; }

    static Mono var(int i, int n) {
        assert(1 <= i && i <= n && n <= kMaxVars);
        Mono m;
        m.packed = uint64_t(1) << (8 * (n - i));
        return m;
    }

    static Mono from_exponents(const std::vector<int>& e) {
        int n = int(e.size());
        assert(n <= kMaxVars);
        Mono m;
        for (int i = 0; i < n; ++i) {
            assert(0 <= e[i] && e[i] < 200);
            m.packed |= uint64_t(uint8_t(e[i])) << (8 * (n - 1 - i));
        }
        return m;
    }

    int exp(int i, int n) const { return int((packed >> (8 * (n - i))) & 0xff); }

    std::vector<int> exponents(int n) const {
        std::vector<int> e(n);
        for (int i = 1; i <= n; ++i) e[i - 1] = exp(i, n);
        return e;
    }

    int degree() const {
        // bytewise sum; total degree stays < 256 at supported sizes
        return int((packed * 0x0101010101010101ull) >> 56);
    }

    bool is_one() const { return packed == 0; }

    Mono operator*(const Mono& o) const { return Mono{packed + o.packed}; }

    // quotient by a single variable; caller guarantees divisibility
    Mono div_var(int i, int n) const {
        assert(exp(i, n) > 0);
        return Mono{packed - (uint64_t(1) << (8 * (n - i)))};
    }

    bool operator==(const Mono& o) const { return packed == o.packed; }
    bool operator!=(const Mono& o) const { return packed != o.packed; }

    std::string str(int n) const {
        if (is_one()) return "1";
        std::string s;
        for (int i = 1; i <= n; ++i) {
            int e = exp(i, n);
            if (e == 0) continue;
            if (!s.empty()) s += "*";
            s += "x" + std::to_string(i);
            if (e > 1) s += "^" + std::to_string(e);
        }
        return s;
    }
};

// Graded lex, x1 > ... > xn: sort by degree, then by descending packed
// value so that within a degree x1-heavy monomials come first.
struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const {
        int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        return a.packed > b.packed;
    }
};

// All monomials of degree <= order in n variables, graded-lex order.
std::vector<Mono> monomials_up_to(int n, int order);
// All monomials of exact degree d in n variables, graded-lex order.
std::vector<Mono> monomials_of_degree(int n, int d);

}  // namespace sfd
