#pragma once

#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/rational.hpp"

namespace freeprob::transforms {

/// Truncated formal power series c_0 + c_1 z + ... + c_K z^K with scalar
/// coefficients. Arithmetic truncates at the smaller order of the two
/// operands. Exact when K is exact.
template <class K>
class TruncatedSeries {
public:
    TruncatedSeries() = default;
    explicit TruncatedSeries(std::vector<K> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) throw invalid_input("TruncatedSeries: need at least the constant term");
    }
    static TruncatedSeries zero(int order) {
        return TruncatedSeries(std::vector<K>(static_cast<std::size_t>(order) + 1,
                                              scalar_traits<K>::zero()));
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    const K& operator[](int k) const {
        if (k < 0 || k > order()) throw invalid_input("TruncatedSeries: index out of range");
        return c_[static_cast<std::size_t>(k)];
    }
    K& at(int k) {
        if (k < 0 || k > order()) throw invalid_input("TruncatedSeries: index out of range");
        return c_[static_cast<std::size_t>(k)];
    }
    const std::vector<K>& coefficients() const { return c_; }

    TruncatedSeries truncated(int new_order) const {
        if (new_order < 0) throw invalid_input("TruncatedSeries: negative order");
        std::vector<K> v(static_cast<std::size_t>(new_order) + 1, scalar_traits<K>::zero());
        for (int k = 0; k <= std::min(new_order, order()); ++k) v[static_cast<std::size_t>(k)] = c_[static_cast<std::size_t>(k)];
        return TruncatedSeries(std::move(v));
    }

    friend TruncatedSeries operator+(const TruncatedSeries& a, const TruncatedSeries& b) {
        int n = std::min(a.order(), b.order());
        std::vector<K> v(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = a[k] + b[k];
        return TruncatedSeries(std::move(v));
    }
    friend TruncatedSeries operator-(const TruncatedSeries& a, const TruncatedSeries& b) {
        int n = std::min(a.order(), b.order());
        std::vector<K> v(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = a[k] - b[k];
        return TruncatedSeries(std::move(v));
    }
    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
        int n = std::min(a.order(), b.order());
        std::vector<K> v(static_cast<std::size_t>(n) + 1, scalar_traits<K>::zero());
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j)
                v[static_cast<std::size_t>(i + j)] = v[static_cast<std::size_t>(i + j)] + a[i] * b[j];
        return TruncatedSeries(std::move(v));
    }
    friend TruncatedSeries operator*(const K& s, const TruncatedSeries& a) {
        std::vector<K> v = a.c_;
        for (auto& x : v) x = s * x;
        return TruncatedSeries(std::move(v));
    }

    /// Multiplicative inverse; requires an invertible constant term.
    TruncatedSeries inverse() const {
        if (scalar_traits<K>::is_zero(c_[0]))
            throw invalid_input("TruncatedSeries::inverse: constant term vanishes");
        const int n = order();
        std::vector<K> v(static_cast<std::size_t>(n) + 1, scalar_traits<K>::zero());
        v[0] = scalar_traits<K>::one() / c_[0];
        for (int k = 1; k <= n; ++k) {
            K s = scalar_traits<K>::zero();
            for (int j = 1; j <= k; ++j) s = s + c_[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(k - j)];
            v[static_cast<std::size_t>(k)] = -(s / c_[0]);
        }
        return TruncatedSeries(std::move(v));
    }

    /// f(g(z)) truncated; requires g(0) = 0 (otherwise the truncation would
    /// not be well defined).
    TruncatedSeries compose(const TruncatedSeries& g) const {
        if (!scalar_traits<K>::is_zero(g[0]))
            throw invalid_input("TruncatedSeries::compose: inner series must vanish at 0");
        int n = std::min(order(), g.order());
        TruncatedSeries acc = TruncatedSeries::zero(n);
        // Horner from the top coefficient down
        for (int k = std::min(order(), n); k >= 0; --k) {
            acc = acc * g.truncated(n);
            acc.at(0) = acc[0] + c_[static_cast<std::size_t>(k)];
        }
        return acc;
    }

    /// Compositional inverse g with f(g(z)) = z + O(z^{order+1}); requires
    /// f(0) = 0 and an invertible linear term. Solved coefficient by
    /// coefficient: the z^n residual of f(g) is linear in g_n with
    /// coefficient f_1.
    TruncatedSeries revert() const {
        const int n = order();
        if (n < 1) throw invalid_input("TruncatedSeries::revert: order too small");
        if (!scalar_traits<K>::is_zero(c_[0]))
            throw invalid_input("TruncatedSeries::revert: series must vanish at 0");
        if (scalar_traits<K>::is_zero(c_[1]))
            throw invalid_input("TruncatedSeries::revert: linear term must be invertible");
        TruncatedSeries g = TruncatedSeries::zero(n);
        g.at(1) = scalar_traits<K>::one() / c_[1];
        for (int k = 2; k <= n; ++k) {
            TruncatedSeries h = compose(g.truncated(k));
            g.at(k) = -(h[k] / c_[1]);
        }
        return g;
    }

private:
    std::vector<K> c_;
};

} // namespace freeprob::transforms
