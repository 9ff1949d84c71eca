#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dpim {

/// Exponent vector of a monomial z^alpha; one entry per normal variable.
using MultiIndex = std::vector<int>;

// Bookkeeping for monomials in d normal variables: graded enumeration
// (total order ascending; within an order the leading exponent decreases
// first), combinatorial rank/unrank and the small index arithmetic needed
// when assembling residuals.
class MultiIndexTable {
public:
    MultiIndexTable() = default;
    MultiIndexTable(int n_vars, int max_order);

    int n_vars() const { return d_; }
    int max_order() const { return max_order_; }

    /// Number of monomials of exact order p, i.e. C(p+d-1, p).
    int count(int p) const;

    const std::vector<MultiIndex>& order(int p) const;
    const MultiIndex& alpha(int p, int k) const { return order(p)[static_cast<std::size_t>(k)]; }

    /// Rank of alpha within its own order block; inverse of alpha(p,k).
    int index_of(const MultiIndex& a) const;

    static MultiIndex add(const MultiIndex& a, const MultiIndex& b);

    /// Power rule d(z^a)/dz_i = a_i z^(a - e_i); requires a[i] >= 1.
    static std::pair<int, MultiIndex> derivative_shift(const MultiIndex& a, int i);

    /// C(n, k) as int64 (0 when out of range). Valid for the table's sizes.
    std::int64_t binom(int n, int k) const;

private:
    int d_ = 0;
    int max_order_ = 0;
    std::vector<std::vector<MultiIndex>> orders_;   // orders_[p], p = 0..max_order
    std::vector<std::int64_t> binom_;               // flat (n, k) table
    int binom_n_ = 0;
};

}  // namespace dpim
