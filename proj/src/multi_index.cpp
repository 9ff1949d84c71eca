#include "dpim/multi_index.hpp"

namespace dpim {

namespace {

void enumerate_rec(int d, int pos, int remaining, MultiIndex& current,
                   std::vector<MultiIndex>& out) {
    if (pos == d - 1) {
        current[static_cast<std::size_t>(pos)] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[static_cast<std::size_t>(pos)] = e;
        enumerate_rec(d, pos + 1, remaining - e, current, out);
    }
}

}  // namespace

MultiIndexTable::MultiIndexTable(int n_vars, int max_order)
    : d_(n_vars), max_order_(max_order) {
    if (n_vars < 1) throw std::invalid_argument("MultiIndexTable: need at least one variable");
    if (max_order < 0) throw std::invalid_argument("MultiIndexTable: negative order");

    binom_n_ = max_order_ + d_ + 1;
    binom_.assign(static_cast<std::size_t>(binom_n_) * binom_n_, 0);
    for (int n = 0; n < binom_n_; ++n) {
        binom_[static_cast<std::size_t>(n) * binom_n_] = 1;
        for (int k = 1; k <= n; ++k) {
            binom_[static_cast<std::size_t>(n) * binom_n_ + k] =
                binom(n - 1, k - 1) + binom(n - 1, k);
        }
    }

    orders_.resize(static_cast<std::size_t>(max_order_) + 1);
    for (int p = 0; p <= max_order_; ++p) {
        MultiIndex current(static_cast<std::size_t>(d_), 0);
        orders_[static_cast<std::size_t>(p)].reserve(static_cast<std::size_t>(binom(p + d_ - 1, p)));
        enumerate_rec(d_, 0, p, current, orders_[static_cast<std::size_t>(p)]);
    }
}

std::int64_t MultiIndexTable::binom(int n, int k) const {
    if (n < 0 || k < 0 || k > n) return 0;
    return binom_[static_cast<std::size_t>(n) * binom_n_ + k];
}

int MultiIndexTable::count(int p) const {
    return static_cast<int>(order(p).size());
}

const std::vector<MultiIndex>& MultiIndexTable::order(int p) const {
    if (p < 0 || p > max_order_) throw std::out_of_range("MultiIndexTable: order out of range");
    return orders_[static_cast<std::size_t>(p)];
}

int MultiIndexTable::index_of(const MultiIndex& a) const {
    if (static_cast<int>(a.size()) != d_) throw std::invalid_argument("MultiIndexTable: wrong arity");
    // Monomials with a larger exponent in an earlier slot come first.
    int rank = 0;
    int remaining = 0;
    for (int v : a) remaining += v;
    for (int j = 0; j + 1 < d_; ++j) {
        const int e = d_ - j - 1;
        rank += static_cast<int>(binom(remaining - a[static_cast<std::size_t>(j)] - 1 + e, e));
        remaining -= a[static_cast<std::size_t>(j)];
    }
    return rank;
}

MultiIndex MultiIndexTable::add(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size()) throw std::invalid_argument("MultiIndex add: arity mismatch");
    MultiIndex out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

std::pair<int, MultiIndex> MultiIndexTable::derivative_shift(const MultiIndex& a, int i) {
    if (i < 0 || i >= static_cast<int>(a.size()))
        throw std::invalid_argument("derivative_shift: variable index out of range");
    if (a[static_cast<std::size_t>(i)] < 1)
        throw std::invalid_argument("derivative_shift: zero exponent");
    MultiIndex shifted(a);
    shifted[static_cast<std::size_t>(i)] -= 1;
    return {a[static_cast<std::size_t>(i)], shifted};
}

}  // namespace dpim
