#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/freecum.hpp"
#include "freeprob/ncpart.hpp"
#include "freeprob/opval.hpp"
#include "freeprob/rational.hpp"

namespace freeprob::dhmodel {

using freecum::Alphabet;
using freecum::CumulantFunctional;
using freecum::Letter;
using freecum::Word;

/// Naming for the entries of the N x N triangular model: a{j} on the
/// diagonal, b{i}_{j} above it, o{i}_{j} below (identically zero).
struct EntryIndex {
    int N;

    explicit EntryIndex(int n) : N(n) {
        if (n < 1) throw invalid_input("EntryIndex: bad dimension");
    }
    /// (row, column), 1-based, to the generator index in alphabet().
    int gen(int i, int j) const {
        if (i < 1 || j < 1 || i > N || j > N) throw invalid_input("EntryIndex: out of range");
        return (i - 1) * N + (j - 1);
    }
    std::string name(int i, int j) const {
        if (i == j) return "a" + std::to_string(j);
        if (i < j) return "b" + std::to_string(i) + "_" + std::to_string(j);
        return "o" + std::to_string(i) + "_" + std::to_string(j);
    }
    Alphabet alphabet() const {
        Alphabet a;
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) a.push_back(name(i, j));
        return a;
    }
};

/// Joint *-cumulants of the unscaled entries: mutually free, the diagonal
/// a_j R-diagonal with squared modulus free Poisson((c-1)N + j), the
/// strictly upper entries circular, the lower triangle zero. `half_order`
/// squared-modulus moments are solved per diagonal entry, so words in one
/// a_j stay admissible up to length 2*half_order.
template <class K>
CumulantFunctional<K> entry_cumulants(int N, const Rational& c, int half_order = 4) {
    if (N < 1) throw invalid_input("entry_cumulants: bad dimension");
    if (c < 1) throw invalid_input("entry_cumulants: parameter must be at least 1");
    if (half_order < 1) throw invalid_input("entry_cumulants: bad order");
    EntryIndex ei(N);
    std::vector<CumulantFunctional<K>> parts;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            if (i == j) {
                K lambda = scalar_traits<K>::from_rational((c - 1) * N + j);
                parts.push_back(freecum::rdiag_from_xxstar_moments<K>(
                    freecum::free_poisson_moments<K>(lambda, half_order), ei.name(i, j)));
            } else if (i < j) {
                parts.push_back(freecum::circular_cumulants<K>(ei.name(i, j)));
            } else {
                parts.push_back(CumulantFunctional<K>{
                    {ei.name(i, j)},
                    [](const Word&) { return scalar_traits<K>::zero(); },
                    freecum::kUnbounded});
            }
        }
    return freecum::joint_free_functional(std::move(parts));
}

/// Left side of the pair-coarsening identity for column a and row indices
/// rows = (i_1, ..., i_n): on the word (y_{i_1 a})* y_{i_1 a} ... the sum
/// of kappa_pi over all noncrossing coarsenings of the consecutive pairing.
template <class K>
K computation_lemma_sum(freecum::MomentEngine<K>& engine, const EntryIndex& ei, int a,
                        const std::vector<int>& rows) {
    const int n = static_cast<int>(rows.size());
    if (n == 0) throw invalid_input("computation_lemma_sum: no rows");
    Word w;
    for (int r : rows) {
        int g = ei.gen(r, a);
        w.push_back({g, true});
        w.push_back({g, false});
    }
    ncpart::BlockList pair_blocks;
    for (int k = 0; k < n; ++k) pair_blocks.push_back({2 * k + 1, 2 * k + 2});
    ncpart::SetPartition pairs(pair_blocks);
    K out = scalar_traits<K>::zero();
    ncpart::for_each_noncrossing(ncpart::range_ground(2 * n), [&](const ncpart::BlockList& bl) {
        ncpart::SetPartition pi(bl);
        if (!ncpart::refines(pairs, pi)) return;
        K term = scalar_traits<K>::one();
        for (const auto& b : bl) term = term * engine.cumulant(subword(w, b));
        out = out + term;
    });
    return out;
}

/// What that sum must equal: (c-1)N + a when the largest row index hits the
/// column, 1 when all rows sit strictly above the diagonal entry, 0 when
/// any row falls below it. Summing over the column gives cN regardless of
/// the rows, which is what makes the scaled model work.
inline Rational computation_lemma_expected(int N, const Rational& c, int a,
                                           const std::vector<int>& rows) {
    int mx = 0;
    for (int r : rows) mx = std::max(mx, r);
    if (mx > a) return Rational(0);
    if (mx == a) return (c - 1) * N + a;
    return Rational(1);
}

/// Conditional expectation of the scaled model x = y / sqrt(N): a single
/// matrix generator "x" whose (i, j) entry is the letter y_{ij} for i <= j,
/// evaluated entrywise with the 1/N^{n/2} factor restored per word length.
template <class K>
opval::MatrixMomentFunctional<K> matrix_functional(int N, const Rational& c, int max_order,
                                                   int half_order = 4) {
    EntryIndex ei(N);
    opval::EntryMatrixModel<K> model(N, {"x"}, entry_cumulants<K>(N, c, half_order), N);
    for (int i = 1; i <= N; ++i)
        for (int j = i; j <= N; ++j)
            model.add_entry(0, i, j, Word{Letter{ei.gen(i, j), false}}, scalar_traits<K>::one());
    return model.functional(max_order);
}

/// Entry cumulant kappa_n(z_{p_1 q_1}, ..., z_{p_n q_n}) of z = x x*, by
/// multilinearity over z_{pq} = (1/N) sum_a y_{pa} (y_{qa})* and the
/// product-cumulant formula on each summand.
template <class K>
K xxstar_entry_cumulant(freecum::MomentEngine<K>& engine, const EntryIndex& ei,
                        const std::vector<std::pair<int, int>>& entries) {
    const int n = static_cast<int>(entries.size());
    if (n == 0) throw invalid_input("xxstar_entry_cumulant: empty tuple");
    std::vector<int> groups(static_cast<std::size_t>(n), 2);
    std::vector<int> col(static_cast<std::size_t>(n), 1);
    K out = scalar_traits<K>::zero();
    while (true) {
        Word w;
        for (int k = 0; k < n; ++k) {
            w.push_back({ei.gen(entries[static_cast<std::size_t>(k)].first,
                                col[static_cast<std::size_t>(k)]),
                         false});
            w.push_back({ei.gen(entries[static_cast<std::size_t>(k)].second,
                                col[static_cast<std::size_t>(k)]),
                         true});
        }
        out = out + freecum::product_cumulant_ks(engine, groups, w);
        int k = n - 1;
        while (k >= 0 && col[static_cast<std::size_t>(k)] == ei.N) {
            col[static_cast<std::size_t>(k)] = 1;
            --k;
        }
        if (k < 0) break;
        ++col[static_cast<std::size_t>(k)];
    }
    BigInt den = 1;
    for (int k = 0; k < n; ++k) den *= ei.N;
    return scalar_traits<K>::from_rational(Rational(BigInt(1), den)) * out;
}

/// The same rule packaged for the constant-cyclic checker.
template <class K>
std::function<K(const std::vector<std::pair<int, int>>&)> xxstar_entry_rule(
    std::shared_ptr<freecum::MomentEngine<K>> engine, int N) {
    auto ei = std::make_shared<EntryIndex>(N);
    return [engine, ei](const std::vector<std::pair<int, int>>& t) {
        return xxstar_entry_cumulant(*engine, *ei, t);
    };
}

} // namespace freeprob::dhmodel
