#include "sfd/monomial.hpp"

#include <algorithm>

namespace sfd {

static void gen_rec(int n, int var, int remaining, std::vector<int>& e,
                    std::vector<Mono>& out) {
    if (var > n) {
        if (remaining == 0) out.push_back(Mono::from_exponents(e));
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        e[var - 1] = k;
        gen_rec(n, var + 1, remaining - k, e, out);
    }
    e[var - 1] = 0;
}

std::vector<Mono> monomials_of_degree(int n, int d) {
    std::vector<Mono> out;
    if (n == 0) {
        if (d == 0) out.push_back(Mono::one());
        return out;
    }
    std::vector<int> e(n, 0);
    gen_rec(n, 1, d, e, out);
    std::sort(out.begin(), out.end(), [](const Mono& a, const Mono& b) {
        return MonoLess{}(a, b);
    });
    return out;
}

std::vector<Mono> monomials_up_to(int n, int order) {
    std::vector<Mono> out;
    for (int d = 0; d <= order; ++d) {
        auto layer = monomials_of_degree(n, d);
        out.insert(out.end(), layer.begin(), layer.end());
    }
    return out;
}

}  // namespace sfd
