#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freeprob/brown.hpp"
#include "freeprob/errors.hpp"
#include "freeprob/freecum.hpp"
#include "freeprob/rng.hpp"

namespace freeprob::randmat {

using CMat = Eigen::MatrixXcd;

/// Normalized trace tr = Tr / dim.
inline std::complex<double> normalized_trace(const CMat& a) {
    if (a.rows() != a.cols()) throw invalid_input("normalized_trace: matrix must be square");
    return a.trace() / static_cast<double>(a.rows());
}

/// i.i.d. complex Gaussian entries, mean 0, variance 1/m. Entries are drawn
/// in row-major order so a fixed stream reproduces the matrix byte for byte.
inline CMat ginibre(int m, rng::RngStream& gen) {
    if (m < 1) throw invalid_input("ginibre: dimension must be >= 1");
    CMat a(m, m);
    const double var = 1.0 / static_cast<double>(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = gen.complex_gauss(var);
    return a;
}

/// Haar-distributed unitary: QR of a Ginibre sample with each column of Q
/// divided by the phase of the matching diagonal entry of R. Plain QR is
/// not Haar; the phase correction makes the distribution exact.
inline CMat haar_unitary(int m, rng::RngStream& gen) {
    CMat a = ginibre(m, gen);
    Eigen::HouseholderQR<CMat> qr(a);
    CMat u = qr.householderQ() * CMat::Identity(m, m);
    const CMat& packed = qr.matrixQR();
    for (int j = 0; j < m; ++j) {
        const std::complex<double> rjj = packed(j, j);
        const double mod = std::abs(rjj);
        if (mod > 0.0) u.col(j) /= rjj / mod;
    }
    return u;
}

/// Tall dimension used by wishart: round(lambda * m).
inline int wishart_tall_dim(double lambda, int m) {
    return static_cast<int>(std::llround(lambda * static_cast<double>(m)));
}

/// W = A*A with A of shape round(lambda m) x m, i.i.d. complex Gaussian
/// entries of variance 1/m. Hermitian PSD by construction; E tr W = lambda
/// up to rounding of the tall dimension.
inline CMat wishart(double lambda, int m, rng::RngStream& gen) {
    if (!(lambda >= 1.0)) throw invalid_input("wishart: lambda must be >= 1");
    if (m < 1) throw invalid_input("wishart: dimension must be >= 1");
    const int k = wishart_tall_dim(lambda, m);
    CMat a(k, m);
    const double var = 1.0 / static_cast<double>(m);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = gen.complex_gauss(var);
    CMat w = a.adjoint() * a;
    w = (w + CMat(w.adjoint())) / 2.0;
    return w;
}

/// All eigenvalues with multiplicity, via complex Schur reduction.
inline std::vector<std::complex<double>> eigenvalues(const CMat& a) {
    if (a.rows() != a.cols()) throw invalid_input("eigenvalues: matrix must be square");
    Eigen::ComplexSchur<CMat> schur(a, /*computeU=*/false);
    if (schur.info() != Eigen::Success)
        throw numeric_failure("eigenvalues: Schur iteration did not converge");
    const CMat& t = schur.matrixT();
    std::vector<std::complex<double>> out(static_cast<std::size_t>(a.rows()));
    for (int i = 0; i < a.rows(); ++i) out[static_cast<std::size_t>(i)] = t(i, i);
    return out;
}

/// Singular values in decreasing order.
inline std::vector<double> singular_values(const CMat& a) {
    Eigen::BDCSVD<CMat> svd(a);
    const auto& sv = svd.singularValues();
    return std::vector<double>(sv.data(), sv.data() + sv.size());
}

namespace detail {

/// Exchange the diagonal entries k, k+1 of the upper triangular t by a
/// unitary similarity, accumulated into u. Standard 1x1-block reordering:
/// the rotation aligns the block eigenvector of the trailing eigenvalue
/// with the leading coordinate.
inline void swap_schur_adjacent(CMat& t, CMat& u, int k) {
    const std::complex<double> a = t(k, k);
    const std::complex<double> b = t(k, k + 1);
    const std::complex<double> d = t(k + 1, k + 1);
    // eigenvector of [[a, b], [0, d]] for eigenvalue d
    const std::complex<double> p = b;
    const std::complex<double> q = d - a;
    const double nrm = std::sqrt(std::norm(p) + std::norm(q));
    if (nrm < 1e-300) {
        // b = 0 and d = a: the block is scalar, nothing to exchange
        std::swap(t(k, k), t(k + 1, k + 1));
        return;
    }
    const std::complex<double> c = p / nrm;
    const std::complex<double> s = q / nrm;
    Eigen::Matrix2cd g;
    g << c, -std::conj(s), s, std::conj(c);
    const int m = static_cast<int>(t.rows());
    t.block(k, 0, 2, m) = g.adjoint() * t.block(k, 0, 2, m);
    t.block(0, k, m, 2) = t.block(0, k, m, 2) * g;
    u.block(0, k, m, 2) = u.block(0, k, m, 2) * g;
    t(k + 1, k) = 0.0;
}

} // namespace detail

/// Orthogonal projection onto the invariant subspace for eigenvalues of
/// modulus <= s (inclusive within 1e-12, so the rank is deterministic at
/// exact cuts). `tie` reports an eigenvalue within 1e-12 of the cut.
struct SpectralProjection {
    CMat p;
    int rank = 0;
    bool tie = false;
};

inline SpectralProjection spectral_subspace_projection(const CMat& a, double s) {
    if (a.rows() != a.cols())
        throw invalid_input("spectral_subspace_projection: matrix must be square");
    Eigen::ComplexSchur<CMat> schur(a, /*computeU=*/true);
    if (schur.info() != Eigen::Success)
        throw numeric_failure("spectral_subspace_projection: Schur iteration did not converge");
    CMat t = schur.matrixT();
    CMat u = schur.matrixU();
    const int m = static_cast<int>(a.rows());
    const double cut = s + 1e-12;
    auto inside = [&](int k) { return std::abs(t(k, k)) <= cut; };

    SpectralProjection out;
    for (int k = 0; k < m; ++k)
        if (std::fabs(std::abs(t(k, k)) - s) <= 1e-12) out.tie = true;

    // bubble the inside eigenvalues to the leading positions, preserving
    // their relative order; each pass is one sweep of adjacent exchanges
    bool moved = true;
    while (moved) {
        moved = false;
        for (int k = 0; k + 1 < m; ++k) {
            if (!inside(k) && inside(k + 1)) {
                detail::swap_schur_adjacent(t, u, k);
                moved = true;
            }
        }
    }
    int rank = 0;
    while (rank < m && inside(rank)) ++rank;
    out.rank = rank;
    if (rank == 0) {
        out.p = CMat::Zero(m, m);
        return out;
    }
    CMat u1 = u.leftCols(rank);
    CMat p = u1 * u1.adjoint();
    out.p = (p + CMat(p.adjoint())) / 2.0;
    return out;
}

/// Step CDF of eigenvalue moduli: eval(s) = fraction of radii <= s.
/// Right-continuous, reaches 1 at the largest radius.
struct EmpiricalRadialCdf {
    std::vector<double> radii; // sorted ascending

    double operator()(double s) const {
        auto it = std::upper_bound(radii.begin(), radii.end(), s);
        return static_cast<double>(it - radii.begin()) / static_cast<double>(radii.size());
    }
};

inline EmpiricalRadialCdf empirical_radial_cdf(const std::vector<std::complex<double>>& eigs) {
    if (eigs.empty()) throw invalid_input("empirical_radial_cdf: need at least one eigenvalue");
    std::vector<double> radii(eigs.size());
    std::transform(eigs.begin(), eigs.end(), radii.begin(),
                   [](const std::complex<double>& z) { return std::abs(z); });
    std::sort(radii.begin(), radii.end());
    return EmpiricalRadialCdf{std::move(radii)};
}

/// Sup distance between the empirical radial CDF and the law's CDF. The
/// law CDF is recovered by inverting the quantile on a uniform grid of
/// `grid` points in t, so the answer carries a discretization error of at
/// most 1/grid.
inline double ks_distance(const EmpiricalRadialCdf& emp, const brown::RadialLaw& law,
                          int grid = 10000) {
    if (grid < 10) throw invalid_input("ks_distance: grid too coarse");
    std::vector<double> q(static_cast<std::size_t>(grid) + 1);
    for (int i = 0; i <= grid; ++i)
        q[static_cast<std::size_t>(i)] = law.quantile(static_cast<double>(i) / grid);
    // F_law(r) = largest grid t with quantile(t) <= r; the left limit uses
    // a strict comparison so shared atoms are matched rather than split
    auto law_cdf = [&](double r) {
        auto it = std::upper_bound(q.begin(), q.end(), r);
        if (it == q.begin()) return 0.0;
        return static_cast<double>(it - q.begin() - 1) / grid;
    };
    auto law_cdf_left = [&](double r) {
        auto it = std::lower_bound(q.begin(), q.end(), r);
        if (it == q.begin()) return 0.0;
        return static_cast<double>(it - q.begin() - 1) / grid;
    };
    const std::size_t n = emp.radii.size();
    double ks = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && emp.radii[j + 1] == emp.radii[i]) ++j;
        const double r = emp.radii[i];
        const double emp_right = static_cast<double>(j + 1) / static_cast<double>(n);
        const double emp_left = static_cast<double>(i) / static_cast<double>(n);
        ks = std::max(ks, std::fabs(emp_right - law_cdf(r)));
        ks = std::max(ks, std::fabs(emp_left - law_cdf_left(r)));
        i = j + 1;
    }
    return ks;
}

/// Monte-Carlo freeness diagnostic between two matrix families. family_a[t]
/// and family_b[t] are the trial-t samples; words over the two families have
/// their normalized traces averaged across trials in fixed trial order, and
/// the averaged moments feed the exact moment-to-cumulant solver over the
/// alphabet {a, b} in floating (complex) arithmetic. Small mixed cumulants
/// support approximate freeness; the bootstrap resamples whole trials.
struct McFreenessReport {
    int order = 0;
    int trials = 0;
    double max_abs_mixed_cumulant = 0.0;
    double bootstrap_se = 0.0;
    std::vector<std::pair<std::string, std::complex<double>>> mixed_cumulants;
};

namespace detail {

/// Normalized traces of every word over {a, b} of length 1..order, one
/// value per trial, in depth-first prefix order. Each extension of a prefix
/// costs one matrix product.
inline void word_traces(const CMat& a, const CMat& b, int order, const std::string& prefix,
                        const CMat* prod, std::map<std::string, std::complex<double>>& out) {
    const CMat* mats[2] = {&a, &b};
    const char names[2] = {'a', 'b'};
    for (int g = 0; g < 2; ++g) {
        std::string w = prefix + names[g];
        CMat next = prod ? CMat(*prod * *mats[g]) : *mats[g];
        out[w] = next.trace() / static_cast<double>(a.rows());
        if (static_cast<int>(w.size()) < order) word_traces(a, b, order, w, &next, out);
    }
}

} // namespace detail

inline McFreenessReport freeness_diagnostic_mc(const std::vector<CMat>& family_a,
                                               const std::vector<CMat>& family_b, int order,
                                               rng::RngStream& boot_gen, int bootstrap = 200) {
    if (family_a.empty() || family_a.size() != family_b.size())
        throw invalid_input("freeness_diagnostic_mc: need equally many trials in both families");
    if (order < 2) throw invalid_input("freeness_diagnostic_mc: order must be >= 2");
    const int trials = static_cast<int>(family_a.size());
    for (int t = 0; t < trials; ++t) {
        const CMat& a = family_a[static_cast<std::size_t>(t)];
        const CMat& b = family_b[static_cast<std::size_t>(t)];
        if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
            throw invalid_input("freeness_diagnostic_mc: trial " + std::to_string(t) +
                                " has inconsistent dimensions");
    }

    // per-trial traces of every word, cached once; bootstrap only reweights
    std::map<std::string, std::vector<std::complex<double>>> traces;
    for (int t = 0; t < trials; ++t) {
        std::map<std::string, std::complex<double>> one;
        detail::word_traces(family_a[static_cast<std::size_t>(t)],
                            family_b[static_cast<std::size_t>(t)], order, "", nullptr, one);
        for (const auto& [w, v] : one) traces[w].push_back(v);
    }

    freecum::Alphabet alphabet{"a", "b"};
    auto parse = [](const std::string& s) {
        freecum::Word w;
        for (char ch : s) w.push_back(freecum::Letter{ch == 'a' ? 0 : 1, false});
        return w;
    };
    auto word_label = [](const freecum::Word& w) {
        std::string s;
        for (const auto& l : w) s.push_back(l.gen == 0 ? 'a' : 'b');
        return s;
    };

    std::vector<freecum::Word> mixed;
    for (const auto& [label, vals] : traces) {
        const bool has_a = label.find('a') != std::string::npos;
        const bool has_b = label.find('b') != std::string::npos;
        if (has_a && has_b) mixed.push_back(parse(label));
    }

    auto max_mixed = [&](const std::vector<int>& counts,
                         std::vector<std::pair<std::string, std::complex<double>>>* detail_out) {
        freecum::MomentFunctional<std::complex<double>> phi;
        phi.alphabet = alphabet;
        phi.max_order = order;
        phi.eval = [&traces, &counts, trials, &word_label](const freecum::Word& w) {
            const auto& vals = traces.at(word_label(w));
            std::complex<double> s = 0.0;
            for (int t = 0; t < trials; ++t)
                s += static_cast<double>(counts[static_cast<std::size_t>(t)]) *
                     vals[static_cast<std::size_t>(t)];
            return s / static_cast<double>(trials);
        };
        freecum::CumulantEngine<std::complex<double>> engine(phi);
        double mx = 0.0;
        for (const auto& w : mixed) {
            const std::complex<double> k = engine.cumulant(w);
            mx = std::max(mx, std::abs(k));
            if (detail_out) detail_out->emplace_back(word_label(w), k);
        }
        return mx;
    };

    McFreenessReport rep;
    rep.order = order;
    rep.trials = trials;
    std::vector<int> ones(static_cast<std::size_t>(trials), 1);
    rep.max_abs_mixed_cumulant = max_mixed(ones, &rep.mixed_cumulants);

    if (bootstrap > 1 && trials > 1) {
        std::vector<double> reps;
        reps.reserve(static_cast<std::size_t>(bootstrap));
        for (int r = 0; r < bootstrap; ++r) {
            std::vector<int> counts(static_cast<std::size_t>(trials), 0);
            for (int t = 0; t < trials; ++t)
                ++counts[static_cast<std::size_t>(boot_gen.next_u64() %
                                                  static_cast<std::uint64_t>(trials))];
            reps.push_back(max_mixed(counts, nullptr));
        }
        double mean = 0.0;
        for (double v : reps) mean += v;
        mean /= static_cast<double>(bootstrap);
        double var = 0.0;
        for (double v : reps) var += (v - mean) * (v - mean);
        rep.bootstrap_se = std::sqrt(var / static_cast<double>(bootstrap - 1));
    }
    return rep;
}

/// Bi-unitarily invariant sample with the singular values of d: Haar
/// unitary times the deterministic factor.
inline CMat biinvariant_sample(const CMat& d, rng::RngStream& gen) {
    if (d.rows() != d.cols()) throw invalid_input("biinvariant_sample: matrix must be square");
    return haar_unitary(static_cast<int>(d.rows()), gen) * d;
}

} // namespace freeprob::randmat
