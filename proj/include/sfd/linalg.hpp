#pragma once

#include <optional>
#include <vector>

namespace sfd {

// Exact dense row reduction over a field K. Pivoting is deterministic:
// columns are scanned left to right, the first row with a nonzero entry
// wins. Callers order their columns graded-lex so results are canonical.
template <class K>
struct Rref {
    std::vector<std::vector<K>> m;  // reduced rows
    std::vector<int> pivot_col;     // column of the i-th pivot row
    int rank = 0;
};

template <class K>
Rref<K> rref(std::vector<std::vector<K>> m, int ncols) {
    Rref<K> r;
    int nrows = int(m.size());
    int row = 0;
    for (int col = 0; col < ncols && row < nrows; ++col) {
        int piv = -1;
        for (int i = row; i < nrows; ++i)
            if (!m[i][col].is_zero()) { piv = i; break; }
        if (piv < 0) continue;
        std::swap(m[row], m[piv]);
        K inv = m[row][col].inv();
        for (auto& x : m[row]) x *= inv;
        for (int i = 0; i < nrows; ++i) {
            if (i == row || m[i][col].is_zero()) continue;
            K f = m[i][col];
            for (size_t j = 0; j < m[i].size(); ++j) m[i][j] -= f * m[row][j];
        }
        r.pivot_col.push_back(col);
        ++row;
    }
    r.rank = row;
    m.resize(nrows);
    r.m = std::move(m);
    return r;
}

template <class K>
int rank_of(const std::vector<std::vector<K>>& m, int ncols) {
    if (m.empty()) return 0;
    return rref(m, ncols).rank;
}

template <class K>
struct LinearSolution {
    bool consistent = false;
    std::vector<K> particular;            // size = #unknowns
    std::vector<std::vector<K>> kernel;   // basis of the homogeneous space
};

// Solve A x = b (A given as rows). The particular solution sets all free
// unknowns to zero; kernel vectors have one free unknown set to one.
template <class K>
LinearSolution<K> solve_linear(const std::vector<std::vector<K>>& a,
                               const std::vector<K>& b, const K& like) {
    int nrows = int(a.size());
    int ncols = nrows ? int(a[0].size()) : (b.empty() ? 0 : -1);
    if (ncols < 0) ncols = 0;
    std::vector<std::vector<K>> aug(nrows);
    for (int i = 0; i < nrows; ++i) {
        aug[i] = a[i];
        aug[i].push_back(b[i]);
    }
    auto r = rref(aug, ncols);
    LinearSolution<K> s;
    K zero = like.zero_like(), one = like.one_like();
    // consistency: no pivot in the rhs column beyond the reduced part
    for (int i = r.rank; i < nrows; ++i)
        if (!r.m[i][ncols].is_zero()) { s.consistent = false; return s; }
    s.consistent = true;
    s.particular.assign(ncols, zero);
    std::vector<bool> is_pivot(ncols, false);
    for (int i = 0; i < r.rank; ++i) {
        is_pivot[r.pivot_col[i]] = true;
        s.particular[r.pivot_col[i]] = r.m[i][ncols];
    }
    for (int j = 0; j < ncols; ++j) {
        if (is_pivot[j]) continue;
        std::vector<K> v(ncols, zero);
        v[j] = one;
        for (int i = 0; i < r.rank; ++i) v[r.pivot_col[i]] = -r.m[i][j];
        s.kernel.push_back(std::move(v));
    }
    return s;
}

// Basis of ker A, same free-variable convention as solve_linear.
template <class K>
std::vector<std::vector<K>> kernel_basis(const std::vector<std::vector<K>>& a,
                                         int ncols, const K& like) {
    if (a.empty()) {
        std::vector<std::vector<K>> id(ncols, std::vector<K>(ncols, like.zero_like()));
        for (int i = 0; i < ncols; ++i) id[i][i] = like.one_like();
        return id;
    }
    std::vector<K> zero_rhs(a.size(), like.zero_like());
    return solve_linear(a, zero_rhs, like).kernel;
}

}  // namespace sfd
