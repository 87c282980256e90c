#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freeprob/dhmodel.hpp"
#include "freeprob/errors.hpp"
#include "freeprob/freecum.hpp"
#include "freeprob/randmat.hpp"
#include "freeprob/rng.hpp"

namespace freeprob::trimodel {

using randmat::CMat;

/// Sizes of the diagonal blocks of a block decomposition; offsets derived.
struct BlockSpec {
    std::vector<int> sizes;

    explicit BlockSpec(std::vector<int> s) : sizes(std::move(s)) {
        if (sizes.empty()) throw invalid_input("BlockSpec: need at least one block");
        for (int k : sizes)
            if (k < 1) throw invalid_input("BlockSpec: block sizes must be positive");
    }

    int count() const { return static_cast<int>(sizes.size()); }

    int total() const {
        int t = 0;
        for (int k : sizes) t += k;
        return t;
    }

    /// Start row/column of block k (0-based).
    int offset(int k) const {
        int o = 0;
        for (int i = 0; i < k; ++i) o += sizes[static_cast<std::size_t>(i)];
        return o;
    }
};

/// Hermitian PSD square root by spectral decomposition. Eigenvalues may dip
/// to -1e-12 * ||y|| from rounding and are clamped to 0; anything lower is
/// rejected as a genuine negative direction.
inline CMat hermitian_psd_sqrt(const CMat& y) {
    if (y.rows() != y.cols()) throw invalid_input("hermitian_psd_sqrt: matrix must be square");
    const double scale = std::max(1.0, y.norm());
    if ((y - CMat(y.adjoint())).norm() > 1e-10 * scale)
        throw invalid_input("hermitian_psd_sqrt: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es((y + CMat(y.adjoint())) / 2.0);
    if (es.info() != Eigen::Success)
        throw numeric_failure("hermitian_psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    for (int i = 0; i < lam.size(); ++i) {
        if (lam(i) < -1e-12 * scale)
            throw invalid_input("hermitian_psd_sqrt: input has a negative eigenvalue");
        lam(i) = std::sqrt(std::max(0.0, lam(i)));
    }
    CMat r = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    return (r + CMat(r.adjoint())) / 2.0;
}

namespace detail {

/// Recursion of the block factorization: peel off the trailing block,
/// x22 = sqrt(y22), x12 = y12 x22^{-1}, then factor the Schur complement
/// y11 - x12 x12* over the leading blocks.
inline CMat upper_triangular_sqrt_rec(const CMat& y, const BlockSpec& blocks, int nblocks) {
    const int n = static_cast<int>(y.rows());
    if (nblocks == 1) return hermitian_psd_sqrt(y);
    const int klast = blocks.sizes[static_cast<std::size_t>(nblocks - 1)];
    const int lead = n - klast;
    CMat y11 = y.topLeftCorner(lead, lead);
    CMat y12 = y.topRightCorner(lead, klast);
    CMat y22 = y.bottomRightCorner(klast, klast);

    CMat x22 = hermitian_psd_sqrt(y22);
    // x12 x22* = y12 with x22 Hermitian, so x12 = y12 x22^{-1}
    Eigen::LLT<CMat> llt(x22);
    if (llt.info() != Eigen::Success)
        throw numeric_failure("upper_triangular_sqrt: trailing block is numerically singular");
    CMat x12 = llt.solve(y12.adjoint()).adjoint();

    CMat schur = y11 - x12 * x12.adjoint();
    schur = (schur + CMat(schur.adjoint())) / 2.0;
    CMat x11 = upper_triangular_sqrt_rec(schur, blocks, nblocks - 1);

    CMat x = CMat::Zero(n, n);
    x.topLeftCorner(lead, lead) = x11;
    x.topRightCorner(lead, klast) = x12;
    x.bottomRightCorner(klast, klast) = x22;
    return x;
}

} // namespace detail

/// Block upper triangular x with x x* = y, for Hermitian strictly positive
/// definite y. Blocks strictly below the diagonal are exactly zero. The
/// diagonal blocks come out Hermitian PSD, so the factorization is the
/// block analogue of a reversed Cholesky.
inline CMat upper_triangular_sqrt(const CMat& y, const BlockSpec& blocks) {
    if (y.rows() != y.cols()) throw invalid_input("upper_triangular_sqrt: matrix must be square");
    if (y.rows() != blocks.total())
        throw invalid_input("upper_triangular_sqrt: block sizes must sum to the dimension");
    const double scale = std::max(1.0, y.norm());
    if ((y - CMat(y.adjoint())).norm() > 1e-10 * scale)
        throw invalid_input("upper_triangular_sqrt: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es((y + CMat(y.adjoint())) / 2.0);
    if (es.info() != Eigen::Success)
        throw numeric_failure("upper_triangular_sqrt: eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= 1e-10 * scale)
        throw invalid_input("upper_triangular_sqrt: input must be strictly positive definite");
    return detail::upper_triangular_sqrt_rec(y, blocks, blocks.count());
}

/// Matrix model of the circular free Poisson element with parameter
/// lambda >= 1: Haar unitary times the PSD root of an independent
/// Wishart(lambda) sample. The unitary is drawn first, then the Wishart
/// factor, off one stream.
inline CMat circular_free_poisson_sample(double lambda, int m, rng::RngStream& gen) {
    if (!(lambda >= 1.0))
        throw invalid_input("circular_free_poisson_sample: lambda must be >= 1");
    if (m < 1) throw invalid_input("circular_free_poisson_sample: dimension must be >= 1");
    CMat u = randmat::haar_unitary(m, gen);
    CMat w = randmat::wishart(lambda, m, gen);
    return u * hermitian_psd_sqrt(w);
}

/// Block upper triangular model of size (N m) x (N m): diagonal blocks are
/// independent circular free Poisson samples with parameter (c-1)N + j for
/// the j-th block, blocks above the diagonal are independent Ginibre, and
/// the whole matrix is scaled by 1/sqrt(N). Blocks are drawn row by row,
/// left to right, so a fixed stream reproduces the matrix exactly.
inline CMat dh_model_sample(double c, int N, int m, rng::RngStream& gen) {
    if (!(c >= 1.0)) throw invalid_input("dh_model_sample: c must be >= 1");
    if (N < 1) throw invalid_input("dh_model_sample: N must be >= 1");
    if (m < 1) throw invalid_input("dh_model_sample: block dimension must be >= 1");
    CMat x = CMat::Zero(N * m, N * m);
    for (int i = 1; i <= N; ++i) {
        for (int j = i; j <= N; ++j) {
            CMat block = (i == j)
                             ? circular_free_poisson_sample((c - 1.0) * N + j, m, gen)
                             : randmat::ginibre(m, gen);
            x.block((i - 1) * m, (j - 1) * m, m, m) = block;
        }
    }
    x /= std::sqrt(static_cast<double>(N));
    return x;
}

/// Monte-Carlo and symbolic verification of the block triangular model.
/// Empirically: E tr (xx*)^k for k <= 4 against the free Poisson moments
/// with all cumulants c, at 3 standard errors over the trials. Symbolically
/// (when c is an integer and so exact arithmetic applies): the constrained
/// sums over noncrossing coarsenings of consecutive pairs reproduce their
/// predicted values (c-1)N + a / 1 / 0 for N <= 3, word length <= 3.
struct DhVerifyReport {
    double c = 0.0;
    int N = 0;
    int m = 0;
    int trials = 0;
    std::vector<double> empirical; // k = 1..4
    std::vector<double> se;
    std::vector<double> target;
    bool moments_pass = false;
    bool lemma_checked = false;
    bool lemma_pass = false;
    bool pass = false;
};

inline DhVerifyReport dh_verify(double c, int N, int m, int trials, std::uint64_t seed) {
    if (trials < 2) throw invalid_input("dh_verify: need at least 2 trials");
    DhVerifyReport rep;
    rep.c = c;
    rep.N = N;
    rep.m = m;
    rep.trials = trials;

    const int kmax = 4;
    std::vector<std::vector<double>> per_trial(kmax);
    for (int t = 0; t < trials; ++t) {
        // substream = trial index, so trials can run in any order
        rng::RngStream gen(seed, static_cast<std::uint64_t>(t));
        CMat x = dh_model_sample(c, N, m, gen);
        const int dim = static_cast<int>(x.rows());
        CMat z = x.adjoint() * x; // same nonzero spectrum as xx*
        CMat p = CMat::Identity(dim, dim);
        for (int k = 1; k <= kmax; ++k) {
            p = p * z;
            per_trial[static_cast<std::size_t>(k - 1)].push_back(p.trace().real() / dim);
        }
    }

    std::vector<double> targets = freecum::free_poisson_moments<double>(c, kmax);
    rep.moments_pass = true;
    for (int k = 1; k <= kmax; ++k) {
        const auto& vals = per_trial[static_cast<std::size_t>(k - 1)];
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(trials);
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(trials - 1);
        const double se = std::sqrt(var / static_cast<double>(trials));
        rep.empirical.push_back(mean);
        rep.se.push_back(se);
        rep.target.push_back(targets[static_cast<std::size_t>(k - 1)]);
        if (std::fabs(mean - targets[static_cast<std::size_t>(k - 1)]) > 3.0 * se)
            rep.moments_pass = false;
    }

    // symbolic part needs exact arithmetic, so only integer c qualifies
    if (std::fabs(c - std::llround(c)) < 1e-12) {
        rep.lemma_checked = true;
        rep.lemma_pass = true;
        const Rational cr(std::llround(c));
        const int Ns = std::min(N, 3);
        dhmodel::EntryIndex ei{Ns};
        freecum::MomentEngine<Rational> engine(dhmodel::entry_cumulants<Rational>(Ns, cr, 3));
        // all row words of length <= 3 against every diagonal position
        for (int n = 1; n <= 3 && rep.lemma_pass; ++n) {
            std::vector<int> idx(static_cast<std::size_t>(n), 1);
            bool done = false;
            while (!done && rep.lemma_pass) {
                for (int a = 1; a <= Ns; ++a) {
                    Rational got = dhmodel::computation_lemma_sum<Rational>(engine, ei, a, idx);
                    Rational want = dhmodel::computation_lemma_expected(Ns, cr, a, idx);
                    if (got != want) rep.lemma_pass = false;
                }
                int pos = n - 1;
                while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == Ns) {
                    idx[static_cast<std::size_t>(pos)] = 1;
                    --pos;
                }
                if (pos < 0)
                    done = true;
                else
                    ++idx[static_cast<std::size_t>(pos)];
            }
        }
    }

    rep.pass = rep.moments_pass && (!rep.lemma_checked || rep.lemma_pass);
    return rep;
}

} // namespace freeprob::trimodel
