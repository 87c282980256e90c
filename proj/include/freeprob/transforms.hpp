#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/measure.hpp"
#include "freeprob/rational.hpp"
#include "freeprob/series.hpp"

namespace freeprob::transforms {

// ---------------------------------------------------------------------------
// formal series pipeline (exact when K is exact)
//
// Conventions. moments = (m_1, ..., m_n). psi(z) = sum m_k z^k. The R-series
// returned has [z^{k-1}] R = kappa_k; the S-series has S(0) = 1/m_1.
// ---------------------------------------------------------------------------

/// Multiply by z: raises the order by one.
template <class K>
TruncatedSeries<K> shift_up(const TruncatedSeries<K>& f) {
    std::vector<K> v(f.coefficients().size() + 1, scalar_traits<K>::zero());
    for (int k = 0; k <= f.order(); ++k) v[static_cast<std::size_t>(k) + 1] = f[k];
    return TruncatedSeries<K>(std::move(v));
}

template <class K>
TruncatedSeries<K> psi_series(const std::vector<K>& moments) {
    std::vector<K> v(moments.size() + 1, scalar_traits<K>::zero());
    for (std::size_t k = 0; k < moments.size(); ++k) v[k + 1] = moments[k];
    return TruncatedSeries<K>(std::move(v));
}

/// R-transform series from moments m_1..m_n. The Cauchy transform is
/// G(t) = sum m_k t^{-k-1}, so h(z) = G(1/z) = z M(z) is a genuine power
/// series; with g = h^{<-1>} one has R(z) = 1/g(z) - 1/z, and writing
/// g = z q with q(0) = 1 the pole cancels: R = (q^{-1} - 1)/z.
template <class K>
TruncatedSeries<K> r_series(const std::vector<K>& moments) {
    const int n = static_cast<int>(moments.size());
    if (n < 1) throw invalid_input("r_series: need at least one moment");
    std::vector<K> h(static_cast<std::size_t>(n) + 2, scalar_traits<K>::zero());
    h[1] = scalar_traits<K>::one();
    for (int k = 1; k <= n; ++k) h[static_cast<std::size_t>(k) + 1] = moments[static_cast<std::size_t>(k - 1)];
    TruncatedSeries<K> g = TruncatedSeries<K>(std::move(h)).revert();
    std::vector<K> q(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) q[static_cast<std::size_t>(k)] = g[k + 1];
    TruncatedSeries<K> invq = TruncatedSeries<K>(std::move(q)).inverse();
    std::vector<K> r(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) r[static_cast<std::size_t>(k - 1)] = invq[k];
    return TruncatedSeries<K>(std::move(r));
}

/// Free cumulants kappa_1..kappa_n read off the R-series.
template <class K>
std::vector<K> cumulants_from_moments(const std::vector<K>& moments) {
    TruncatedSeries<K> r = r_series(moments);
    std::vector<K> kap(moments.size());
    for (std::size_t k = 0; k < kap.size(); ++k) kap[k] = r[static_cast<int>(k)];
    return kap;
}

/// S-transform series from moments m_1..m_n: S = ((1+z)/z) psi^{<-1>}(z),
/// truncated at z^{n-1}. Requires m_1 invertible.
template <class K>
TruncatedSeries<K> s_series(const std::vector<K>& moments) {
    const int n = static_cast<int>(moments.size());
    if (n < 1) throw invalid_input("s_series: need at least one moment");
    if (scalar_traits<K>::is_zero(moments[0]))
        throw invalid_input("s_series: first moment vanishes, S-transform undefined");
    TruncatedSeries<K> chi = psi_series(moments).revert();
    std::vector<K> q(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) q[static_cast<std::size_t>(k)] = chi[k + 1];
    TruncatedSeries<K> one_plus_z = TruncatedSeries<K>::zero(n - 1);
    one_plus_z.at(0) = scalar_traits<K>::one();
    if (n >= 2) one_plus_z.at(1) = scalar_traits<K>::one();
    return one_plus_z * TruncatedSeries<K>(std::move(q));
}

/// Inverse pipeline: moments m_1..m_{order+1} of the law whose S-transform
/// has the given truncation. S must have an invertible constant term.
template <class K>
std::vector<K> moments_from_s(const TruncatedSeries<K>& s) {
    const int n = s.order() + 1;
    if (scalar_traits<K>::is_zero(s[0]))
        throw invalid_input("moments_from_s: S(0) must be invertible");
    TruncatedSeries<K> one_plus_z = TruncatedSeries<K>::zero(s.order());
    one_plus_z.at(0) = scalar_traits<K>::one();
    if (s.order() >= 1) one_plus_z.at(1) = scalar_traits<K>::one();
    TruncatedSeries<K> q = s * one_plus_z.inverse();
    TruncatedSeries<K> psi = shift_up(q).revert();
    std::vector<K> m(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) m[static_cast<std::size_t>(k - 1)] = psi[k];
    return m;
}

/// Moments of the free multiplicative convolution, computed by multiplying
/// S-transforms and inverting the pipeline. Both inputs need order >= `order`
/// and nonvanishing first moments.
template <class K>
std::vector<K> free_mult_convolution(const std::vector<K>& mu, const std::vector<K>& nu, int order) {
    if (order < 1) throw invalid_input("free_mult_convolution: order must be >= 1");
    if (static_cast<int>(mu.size()) < order || static_cast<int>(nu.size()) < order)
        throw invalid_input("free_mult_convolution: need moments up to the requested order");
    std::vector<K> mu_t(mu.begin(), mu.begin() + order);
    std::vector<K> nu_t(nu.begin(), nu.begin() + order);
    TruncatedSeries<K> s = s_series(mu_t) * s_series(nu_t);
    return moments_from_s(s);
}

/// Compression of the S-transform: z -> S(sz). Matches scaling every free
/// cumulant kappa_n by s^{n-1}.
template <class K>
TruncatedSeries<K> compress_s(const TruncatedSeries<K>& s_ser, const K& s) {
    std::vector<K> v(s_ser.coefficients());
    K p = scalar_traits<K>::one();
    for (std::size_t k = 1; k < v.size(); ++k) {
        p = p * s;
        v[k] = v[k] * p;
    }
    return TruncatedSeries<K>(std::move(v));
}

// ---------------------------------------------------------------------------
// analytic evaluation on discrete measures (double precision)
// ---------------------------------------------------------------------------

/// psi(u) = sum_i w_i (u a_i)/(1 - u a_i). Defined for all u except poles
/// u = 1/a_i; strictly increasing on (-inf, 0] for measures on [0, inf).
inline double psi_eval(const DiscreteMeasure& mu, double u) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        double a = static_cast<double>(mu.atoms[i]);
        double w = static_cast<double>(mu.weights[i]);
        double den = 1.0 - u * a;
        if (std::fabs(den) < 1e-14 * std::max(1.0, std::fabs(u * a)))
            throw invalid_input("psi_eval: u at a pole 1/atom");
        s += w * (u * a) / den;
    }
    return s;
}

/// Weight of the atom at 0, as a double (0 if absent).
inline double weight_at_zero(const DiscreteMeasure& mu) {
    for (std::size_t i = 0; i < mu.atoms.size(); ++i)
        if (mu.atoms[i] == 0) return static_cast<double>(mu.weights[i]);
    return 0.0;
}

/// Solve psi(t) = w for t <= 0, where w must lie in (w0 - 1, 0] and w0 is
/// the weight at the atom 0. Bracketed bisection; the lower bracket expands
/// by doubling until psi drops below w. Stops when |psi(t) - w| <= 1e-12
/// and the bracket is relatively small; hard cap of 200 bisection steps.
inline double psi_inverse(const DiscreteMeasure& mu, double w) {
    if (w == 0.0) return 0.0;
    double w0 = weight_at_zero(mu);
    if (!(w > w0 - 1.0 && w < 0.0))
        throw invalid_input("psi_inverse: target outside the range of psi on (-inf, 0]");
    double lo = -1.0;
    int expand = 0;
    while (psi_eval(mu, lo) > w) {
        lo *= 2.0;
        if (++expand > 200)
            throw numeric_failure("psi_inverse: bracket expansion failed to straddle the target");
    }
    double hi = 0.0;
    double mid = lo;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double v = psi_eval(mu, mid);
        if (std::fabs(v - w) <= 1e-12 && (hi - lo) <= 1e-10 * std::max(1.0, std::fabs(mid)))
            return mid;
        if (v < w) lo = mid; else hi = mid;
    }
    if (std::fabs(psi_eval(mu, mid) - w) <= 1e-9) return mid;
    throw numeric_failure("psi_inverse: bisection did not converge");
}

/// S(z) = ((1+z)/z) psi^{<-1>}(z) for z strictly inside (w0 - 1, 0).
inline double s_eval_negative(const DiscreteMeasure& mu, double z) {
    double w0 = weight_at_zero(mu);
    if (!(z > w0 - 1.0 && z < 0.0))
        throw invalid_input("s_eval_negative: argument outside (weight_at_zero - 1, 0)");
    double t = psi_inverse(mu, z);
    return (1.0 + z) / z * t;
}

/// Evaluator form of the compression z -> S(sz).
inline std::function<double(double)> compress_s(std::function<double(double)> s_fn, double s) {
    if (!(s > 0.0 && s <= 1.0)) throw invalid_input("compress_s: scale must lie in (0, 1]");
    return [s_fn = std::move(s_fn), s](double z) { return s_fn(s * z); };
}

/// Value in [0, +inf]; infinite() marks +inf.
struct ExtendedRational {
    bool finite;
    Rational value;

    static ExtendedRational infinite() { return {false, Rational(0)}; }
    static ExtendedRational of(Rational v) { return {true, std::move(v)}; }
    double as_double() const {
        return finite ? static_cast<double>(value) : std::numeric_limits<double>::infinity();
    }
};

/// S(-1) = mean of the inverse measure: sum w_i / a_i, or +inf when there is
/// an atom at 0.
inline ExtendedRational mean_inverse(const DiscreteMeasure& mu) {
    if (mu.has_atom_at_zero()) return ExtendedRational::infinite();
    Rational s = 0;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) s += mu.weights[i] / mu.atoms[i];
    return ExtendedRational::of(s);
}

/// Numeric limit of S(z) as z -> -1 from the right, by Richardson
/// extrapolation of S(-1 + eps) at eps = 1e-3, 5e-4, 2.5e-4 (the error is
/// analytic in eps, so two elimination stages leave O(eps^3)). Returns +inf
/// when the measure has an atom at 0.
inline double s_at_minus_one_limit(const DiscreteMeasure& mu) {
    if (mu.has_atom_at_zero()) return std::numeric_limits<double>::infinity();
    double f1 = s_eval_negative(mu, -1.0 + 1e-3);
    double f2 = s_eval_negative(mu, -1.0 + 5e-4);
    double f3 = s_eval_negative(mu, -1.0 + 2.5e-4);
    return (8.0 * f3 - 6.0 * f2 + f1) / 3.0;
}

} // namespace freeprob::transforms
