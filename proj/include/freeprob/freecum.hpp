#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/ncpart.hpp"
#include "freeprob/rational.hpp"
#include "freeprob/words.hpp"

namespace freeprob::freecum {

inline constexpr int kUnbounded = -1;

/// A linear functional given by its action on words: w -> phi(w).
/// Extensional tables and generative rules share this shape; max_order
/// bounds the word lengths the rule is defined for (kUnbounded = any).
/// `tracial` declares invariance under cyclic rotation; engines verify it
/// lazily on the words they actually visit when `verify_tracial` is set.
template <class K>
struct MomentFunctional {
    Alphabet alphabet;
    std::function<K(const Word&)> eval;
    bool tracial = false;
    int max_order = kUnbounded;
    bool verify_tracial = false;
};

/// Same shape, but the rule gives free cumulants kappa(w) instead of
/// moments. Defined for nonempty words only.
template <class K>
struct CumulantFunctional {
    Alphabet alphabet;
    std::function<K(const Word&)> eval;
    int max_order = kUnbounded;
};

namespace detail {

template <class K>
class Memo {
public:
    std::optional<K> get(const std::string& key) const {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = map_.find(key);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void put(const std::string& key, const K& v) {
        std::lock_guard<std::mutex> lk(mu_);
        map_.emplace(key, v);
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, K> map_;
};

} // namespace detail

/// Product of base(w|_B) over the blocks of a noncrossing partition of
/// the positions 1..|w|. This is the multiplicative extension m_pi / kappa_pi
/// used throughout the moment-cumulant calculus.
template <class Base>
auto evaluate_compound(Base&& base, const ncpart::SetPartition& pi, const Word& w)
    -> std::invoke_result_t<Base&, const Word&> {
    using K = std::invoke_result_t<Base&, const Word&>;
    if (pi.ground() != ncpart::range_ground(static_cast<int>(w.size())))
        throw invalid_input("evaluate_compound: partition does not cover word positions");
    if (!ncpart::is_noncrossing(pi))
        throw invalid_input("evaluate_compound: partition must be noncrossing");
    K out = scalar_traits<K>::one();
    for (const auto& b : pi.blocks()) out = out * base(subword(w, b));
    return out;
}

/// Derives free cumulants from moments and back. Both directions are the
/// same triangular system over the noncrossing lattice:
///
///   phi(w) = sum over pi in NC(|w|) of prod_B kappa(w|_B)
///
/// solved inductively for kappa (every proper partition only involves
/// strictly shorter subwords). Values are memoized; the caches are
/// lock-protected so concurrent readers are safe.
template <class K>
class CumulantEngine {
public:
    explicit CumulantEngine(MomentFunctional<K> phi) : phi_(std::move(phi)) {
        if (!phi_.eval) throw invalid_input("CumulantEngine: functional has no rule");
    }

    const MomentFunctional<K>& functional() const { return phi_; }

    /// phi(w); the empty word evaluates to 1 (the state is unital).
    K moment(const Word& w) {
        if (w.empty()) return scalar_traits<K>::one();
        check(w);
        std::string key = word_key(w);
        if (auto hit = moments_.get(key)) return *hit;
        K v = phi_.eval(w);
        if (phi_.verify_tracial && phi_.tracial) {
            for (std::size_t k = 1; k < w.size(); ++k) {
                if (!(phi_.eval(rotate_left(w, k)) == v))
                    throw invalid_input("moment: functional declared tracial but phi(" +
                                        word_str(w, phi_.alphabet) +
                                        ") changes under rotation by " + std::to_string(k));
            }
        }
        moments_.put(key, v);
        return v;
    }

    /// Free cumulant kappa(w) of a nonempty word.
    K cumulant(const Word& w) {
        if (w.empty()) throw invalid_input("cumulant: empty word");
        check(w);
        std::string key = word_key(w);
        if (auto hit = cumulants_.get(key)) return *hit;
        K v = moment(w);
        const int n = static_cast<int>(w.size());
        if (n > 1) {
            ncpart::for_each_noncrossing(ncpart::range_ground(n), [&](const ncpart::BlockList& bl) {
                if (bl.size() == 1) return; // skip the full partition
                K term = scalar_traits<K>::one();
                for (const auto& b : bl) term = term * cumulant(subword(w, b));
                v = v - term;
            });
        }
        cumulants_.put(key, v);
        return v;
    }

    /// kappa_pi(w) for a noncrossing partition of 1..|w|.
    K cumulant_compound(const ncpart::SetPartition& pi, const Word& w) {
        return evaluate_compound([this](const Word& s) { return cumulant(s); }, pi, w);
    }

private:
    void check(const Word& w) {
        check_word(w, phi_.alphabet);
        if (phi_.max_order != kUnbounded && static_cast<int>(w.size()) > phi_.max_order)
            throw resource_limit("moment functional defined up to order " +
                                 std::to_string(phi_.max_order) + ", word has length " +
                                 std::to_string(w.size()));
    }

    MomentFunctional<K> phi_;
    detail::Memo<K> moments_;
    detail::Memo<K> cumulants_;
};

/// The forward direction: moments from a cumulant rule by summing
/// kappa_pi over all of NC(|w|).
template <class K>
class MomentEngine {
public:
    explicit MomentEngine(CumulantFunctional<K> kappa) : kappa_(std::move(kappa)) {
        if (!kappa_.eval) throw invalid_input("MomentEngine: functional has no rule");
    }

    const CumulantFunctional<K>& functional() const { return kappa_; }

    K cumulant(const Word& w) {
        if (w.empty()) throw invalid_input("cumulant: empty word");
        check(w);
        std::string key = word_key(w);
        if (auto hit = cumulants_.get(key)) return *hit;
        K v = kappa_.eval(w);
        cumulants_.put(key, v);
        return v;
    }

    K moment(const Word& w) {
        if (w.empty()) return scalar_traits<K>::one();
        check(w);
        std::string key = word_key(w);
        if (auto hit = moments_.get(key)) return *hit;
        K v = scalar_traits<K>::zero();
        ncpart::for_each_noncrossing(ncpart::range_ground(static_cast<int>(w.size())),
                                     [&](const ncpart::BlockList& bl) {
                                         K term = scalar_traits<K>::one();
                                         for (const auto& b : bl)
                                             term = term * cumulant(subword(w, b));
                                         v = v + term;
                                     });
        moments_.put(key, v);
        return v;
    }

    K cumulant_compound(const ncpart::SetPartition& pi, const Word& w) {
        return evaluate_compound([this](const Word& s) { return cumulant(s); }, pi, w);
    }

    /// View this cumulant rule as a moment functional (for feeding back
    /// into a CumulantEngine or the checkers).
    MomentFunctional<K> as_moment_functional(bool tracial = false) {
        auto self = std::make_shared<MomentEngine<K>>(kappa_);
        return {kappa_.alphabet,
                [self](const Word& w) { return self->moment(w); },
                tracial,
                kappa_.max_order,
                false};
    }

private:
    void check(const Word& w) {
        check_word(w, kappa_.alphabet);
        if (kappa_.max_order != kUnbounded && static_cast<int>(w.size()) > kappa_.max_order)
            throw resource_limit("cumulant functional defined up to order " +
                                 std::to_string(kappa_.max_order) + ", word has length " +
                                 std::to_string(w.size()));
    }

    CumulantFunctional<K> kappa_;
    detail::Memo<K> moments_;
    detail::Memo<K> cumulants_;
};

/// Cumulants with products as arguments: for a grouping of w into
/// consecutive intervals of sizes (g_1,...,g_m),
///
///   kappa_m(W_1 (x) ... (x) W_m) = sum of kappa_pi(w) over those pi in
///   NC(|w|) whose join with the interval partition is the full partition.
template <class Engine>
auto product_cumulant_ks(Engine& engine, const std::vector<int>& group_sizes,
                         const Word& w) -> decltype(engine.cumulant(w)) {
    using K = std::decay_t<decltype(engine.cumulant(w))>;
    int total = 0;
    for (int g : group_sizes) {
        if (g < 1) throw invalid_input("product_cumulant_ks: group sizes must be positive");
        total += g;
    }
    if (total != static_cast<int>(w.size()))
        throw invalid_input("product_cumulant_ks: group sizes do not cover the word");
    const int n = total;
    ncpart::BlockList sigma_blocks;
    int at = 1;
    for (int g : group_sizes) {
        ncpart::Block b;
        for (int i = 0; i < g; ++i) b.push_back(at++);
        sigma_blocks.push_back(std::move(b));
    }
    ncpart::SetPartition sigma(sigma_blocks);
    ncpart::SetPartition full = ncpart::full_partition(ncpart::range_ground(n));
    K out = scalar_traits<K>::zero();
    ncpart::for_each_noncrossing(ncpart::range_ground(n), [&](const ncpart::BlockList& bl) {
        ncpart::SetPartition pi(bl);
        if (!(ncpart::nc_join(pi, sigma) == full)) return;
        K term = scalar_traits<K>::one();
        for (const auto& b : bl) term = term * engine.cumulant(subword(w, b));
        out = out + term;
    });
    return out;
}

/// Mixed cumulants across parts vanish; that is the whole rule. Letters are
/// remapped into each part's own alphabet for delegation.
template <class K>
CumulantFunctional<K> joint_free_functional(std::vector<CumulantFunctional<K>> parts) {
    Alphabet merged;
    std::vector<std::pair<int, int>> origin; // combined gen -> (part, local gen)
    for (std::size_t p = 0; p < parts.size(); ++p) {
        for (std::size_t g = 0; g < parts[p].alphabet.size(); ++g) {
            for (const auto& name : merged)
                if (name == parts[p].alphabet[g])
                    throw invalid_input("joint_free_functional: letter '" + name +
                                        "' appears in two parts");
            merged.push_back(parts[p].alphabet[g]);
            origin.emplace_back(static_cast<int>(p), static_cast<int>(g));
        }
    }
    // no global bound: a long mixed word is fine as long as every
    // single-part subword respects that part's own max_order, which the
    // delegated rules enforce themselves
    auto shared = std::make_shared<std::vector<CumulantFunctional<K>>>(std::move(parts));
    auto origin_shared = std::make_shared<std::vector<std::pair<int, int>>>(std::move(origin));
    return {merged,
            [shared, origin_shared](const Word& w) -> K {
                if (w.empty()) throw invalid_input("joint cumulant: empty word");
                int part = (*origin_shared)[static_cast<std::size_t>(w[0].gen)].first;
                Word local;
                local.reserve(w.size());
                for (const auto& l : w) {
                    const auto& o = (*origin_shared)[static_cast<std::size_t>(l.gen)];
                    if (o.first != part) return scalar_traits<K>::zero();
                    local.push_back({o.second, l.star});
                }
                return (*shared)[static_cast<std::size_t>(part)].eval(local);
            },
            kUnbounded};
}

/// One letter of an interleaved pattern: tagged with the family it comes
/// from (a = "moment side", b = "cumulant side").
struct PatternLetter {
    bool is_b = false;
    Letter letter;
};

/// Moment of an alternating pattern [a1] b1 a2 b2 ... bn [a_{n+1}] where the
/// a-family and b-family are free:
///
///   phi(pattern) = sum over pi in NC(b-positions) of
///                  m_{complement(pi)}(a letters) * kappa_pi(b letters)
///
/// with the complement taken relative to the a-positions inside the common
/// linear order.
template <class K>
K mixed_moment_free(CumulantEngine<K>& a_phi, MomentEngine<K>& b_kappa,
                    const std::vector<PatternLetter>& pattern) {
    const int L = static_cast<int>(pattern.size());
    if (L == 0) throw invalid_input("mixed_moment_free: empty pattern");
    std::vector<int> bpos, apos;
    for (int i = 0; i < L; ++i) (pattern[static_cast<std::size_t>(i)].is_b ? bpos : apos).push_back(i + 1);
    if (bpos.empty()) throw invalid_input("mixed_moment_free: pattern has no b letters");
    for (std::size_t i = 1; i < bpos.size(); ++i)
        if (bpos[i] - bpos[i - 1] != 2)
            throw invalid_input("mixed_moment_free: b letters must alternate with single a letters");
    if (bpos.front() > 2 || bpos.back() < L - 1)
        throw invalid_input("mixed_moment_free: at most one a letter at each boundary");

    Word aword, bword;
    for (const auto& pl : pattern) (pl.is_b ? bword : aword).push_back(pl.letter);
    auto a_at = [&](const std::vector<int>& positions) {
        Word sub;
        for (int p : positions) {
            // translate global position to index within the a-subword
            std::size_t idx = static_cast<std::size_t>(
                std::lower_bound(apos.begin(), apos.end(), p) - apos.begin());
            sub.push_back(aword[idx]);
        }
        return sub;
    };
    auto b_at = [&](const std::vector<int>& positions) {
        Word sub;
        for (int p : positions) {
            std::size_t idx = static_cast<std::size_t>(
                std::lower_bound(bpos.begin(), bpos.end(), p) - bpos.begin());
            sub.push_back(bword[idx]);
        }
        return sub;
    };

    K out = scalar_traits<K>::zero();
    ncpart::for_each_noncrossing(bpos, [&](const ncpart::BlockList& bl) {
        K term = scalar_traits<K>::one();
        for (const auto& b : bl) term = term * b_kappa.cumulant(b_at(b));
        ncpart::SetPartition pi(bl);
        ncpart::SetPartition comp = ncpart::kreweras_complement(pi, bpos, apos);
        for (const auto& c : comp.blocks()) term = term * a_phi.moment(a_at(c));
        out = out + term;
    });
    return out;
}

/// Balanced sign sequence: entries in {-1,+1}, total sum zero, every proper
/// partial sum <= 0. Stars count as -1.
inline bool is_balanced(const std::vector<int>& signs) {
    if (signs.empty()) return false;
    int sum = 0;
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (signs[i] != 1 && signs[i] != -1)
            throw invalid_input("is_balanced: entries must be +1 or -1");
        sum += signs[i];
        if (i + 1 < signs.size() && sum > 0) return false;
    }
    return sum == 0;
}

inline std::vector<int> signs_of(const Word& w) {
    std::vector<int> s;
    s.reserve(w.size());
    for (const auto& l : w) s.push_back(l.star ? -1 : 1);
    return s;
}

inline bool is_alternating(const Word& w) {
    if (w.size() < 2 || w.size() % 2 != 0) return false;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i].star == w[i - 1].star) return false;
    return true;
}

template <class K>
struct RdiagViolation {
    Word word;
    K value{};
};

template <class K>
struct RdiagReport {
    int order = 0;
    bool pass = false;
    std::vector<RdiagViolation<K>> violations;      // non-alternating, nonzero
    std::vector<std::pair<Word, K>> alternating;    // surviving alternating values
};

/// A single *-generator is R-diagonal when every cumulant of a
/// non-alternating star pattern vanishes. Checks all patterns up to the
/// given order; exact arithmetic, so "vanishes" means equals zero.
template <class K>
RdiagReport<K> check_r_diagonal(CumulantEngine<K>& engine, int order) {
    static_assert(scalar_traits<K>::is_exact, "check_r_diagonal is an exact-arithmetic check");
    if (engine.functional().alphabet.size() != 1)
        throw invalid_input("check_r_diagonal: functional must have a single generator");
    if (order < 1) throw invalid_input("check_r_diagonal: order must be >= 1");
    RdiagReport<K> rep;
    rep.order = order;
    rep.pass = true;
    for (int n = 1; n <= order; ++n) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
            Word w;
            for (int i = 0; i < n; ++i) w.push_back({0, (mask >> i & 1) != 0});
            K v = engine.cumulant(w);
            if (is_alternating(w)) {
                rep.alternating.emplace_back(w, v);
            } else if (!scalar_traits<K>::is_zero(v)) {
                rep.pass = false;
                rep.violations.push_back({w, v});
            }
        }
    }
    return rep;
}

struct WordFamily {
    std::string name;
    std::vector<Word> words;
};

template <class K>
struct FreenessViolation {
    std::vector<int> families;  // family index per factor
    std::vector<Word> factors;
    K value{};
};

template <class K>
struct FreenessReport {
    int order = 0;
    bool pass = false;
    double max_abs = 0.0;
    std::vector<FreenessViolation<K>> violations;
};

/// Freeness diagnostic: families are sets of words in a common functional;
/// the families are free exactly when every mixed cumulant with factors
/// drawn from them vanishes. Enumerates factor tuples (at least two
/// factors, at least two families represented) whose total letter count is
/// at most `order`, and evaluates each grouped cumulant.
template <class K>
FreenessReport<K> freeness_diagnostic_exact(CumulantEngine<K>& engine,
                                            const std::vector<WordFamily>& families, int order) {
    if (families.size() < 2)
        throw invalid_input("freeness_diagnostic_exact: need at least two families");
    for (const auto& fam : families) {
        if (fam.words.empty())
            throw invalid_input("freeness_diagnostic_exact: family '" + fam.name + "' is empty");
        for (const auto& w : fam.words)
            if (w.empty())
                throw invalid_input("freeness_diagnostic_exact: empty word in family '" +
                                    fam.name + "'");
    }
    FreenessReport<K> rep;
    rep.order = order;
    rep.pass = true;

    std::vector<int> fam_seq;
    std::vector<Word> factors;
    std::function<void(int)> rec = [&](int remaining) {
        if (factors.size() >= 2) {
            bool mixed = false;
            for (std::size_t i = 1; i < fam_seq.size(); ++i)
                if (fam_seq[i] != fam_seq[0]) mixed = true;
            if (mixed) {
                Word concat_w;
                std::vector<int> sizes;
                for (const auto& f : factors) {
                    concat_w = concat(concat_w, f);
                    sizes.push_back(static_cast<int>(f.size()));
                }
                K v = product_cumulant_ks(engine, sizes, concat_w);
                double a = scalar_traits<K>::abs_double(v);
                if (a > rep.max_abs) rep.max_abs = a;
                if (!scalar_traits<K>::is_zero(v)) {
                    rep.pass = false;
                    rep.violations.push_back({fam_seq, factors, v});
                }
            }
        }
        for (std::size_t fi = 0; fi < families.size(); ++fi) {
            for (const auto& w : families[fi].words) {
                if (static_cast<int>(w.size()) > remaining) continue;
                fam_seq.push_back(static_cast<int>(fi));
                factors.push_back(w);
                rec(remaining - static_cast<int>(w.size()));
                factors.pop_back();
                fam_seq.pop_back();
            }
        }
    };
    rec(order);
    return rep;
}

// ---------------------------------------------------------------------------
// stock functionals

/// phi(word in u, u*) = 1 when the exponent sum vanishes, else 0. This is
/// the unique tracial state making u a Haar unitary.
template <class K>
MomentFunctional<K> haar_unitary_functional(const std::string& name = "u") {
    return {{name},
            [](const Word& w) -> K {
                int s = 0;
                for (const auto& l : w) s += l.star ? -1 : 1;
                return s == 0 ? scalar_traits<K>::one() : scalar_traits<K>::zero();
            },
            true,
            kUnbounded,
            false};
}

/// All cumulants equal to c (self-adjoint generator; stars are ignored).
/// c = 1 gives the free Poisson / Marchenko-Pastur limit with moments the
/// Catalan numbers.
template <class K>
CumulantFunctional<K> constant_cumulant_functional(const K& c, const std::string& name = "a") {
    return {{name}, [c](const Word&) { return c; }, kUnbounded};
}

/// Standard semicircular: kappa_2 = 1, everything else 0 (self-adjoint).
template <class K>
CumulantFunctional<K> semicircular_cumulants(const std::string& name = "s") {
    return {{name},
            [](const Word& w) {
                return w.size() == 2 ? scalar_traits<K>::one() : scalar_traits<K>::zero();
            },
            kUnbounded};
}

/// Point mass at c: kappa_1 = c, higher cumulants vanish.
template <class K>
CumulantFunctional<K> point_mass_cumulants(const K& c, const std::string& name = "d") {
    return {{name},
            [c](const Word& w) { return w.size() == 1 ? c : scalar_traits<K>::zero(); },
            kUnbounded};
}

/// Circular generator: kappa(c (x) c*) = kappa(c* (x) c) = 1, all other
/// *-cumulants vanish.
template <class K>
CumulantFunctional<K> circular_cumulants(const std::string& name = "c") {
    return {{name},
            [](const Word& w) {
                if (w.size() == 2 && w[0].star != w[1].star) return scalar_traits<K>::one();
                return scalar_traits<K>::zero();
            },
            kUnbounded};
}

/// Extensional moment table. Word lengths present in the table fix
/// max_order; a word of admissible length missing from the table is an
/// error, not a zero.
template <class K>
MomentFunctional<K> table_moment_functional(Alphabet alphabet, std::map<std::string, K> table,
                                            bool tracial = false) {
    int max_order = 0;
    for (const auto& [key, _] : table) max_order = std::max<int>(max_order, static_cast<int>(key.size()));
    auto shared = std::make_shared<std::map<std::string, K>>(std::move(table));
    Alphabet ab = alphabet;
    return {std::move(alphabet),
            [shared, ab](const Word& w) -> K {
                auto it = shared->find(word_key(w));
                if (it == shared->end())
                    throw invalid_input("table functional: no entry for word '" +
                                        word_str(w, ab) + "'");
                return it->second;
            },
            tracial,
            max_order,
            false};
}

/// Moments of the measure with all free cumulants equal to c, orders 1..n.
template <class K>
std::vector<K> free_poisson_moments(const K& c, int n) {
    MomentEngine<K> eng(constant_cumulant_functional<K>(c));
    std::vector<K> out;
    for (int k = 1; k <= n; ++k) out.push_back(eng.moment(Word(static_cast<std::size_t>(k), Letter{0, false})));
    return out;
}

/// *-cumulants of an R-diagonal generator whose squared modulus x x* has
/// the given moments m_1..m_L: only alternating star patterns survive, and
/// the value alpha_k for length 2k is solved triangularly against
///
///   m_k = phi((x x*)^k) = sum over NC(2k) of kappa_pi .
///
/// The coefficient of alpha_k in that sum is 1 (only the full partition
/// reaches length 2k), so the system is triangular in k. Both alternating
/// phases share the value, matching traciality.
template <class K>
CumulantFunctional<K> rdiag_from_xxstar_moments(const std::vector<K>& xxstar_moments,
                                                const std::string& name = "x") {
    const int L = static_cast<int>(xxstar_moments.size());
    auto alpha = std::make_shared<std::vector<K>>(); // alpha[k-1] = value at length 2k
    auto make = [alpha, name](int max_order) {
        return CumulantFunctional<K>{
            {name},
            [alpha](const Word& w) -> K {
                if (!is_alternating(w)) return scalar_traits<K>::zero();
                std::size_t k = w.size() / 2;
                if (k > alpha->size())
                    throw resource_limit("rdiag cumulants: order beyond the supplied moments");
                return (*alpha)[k - 1];
            },
            max_order};
    };
    for (int k = 1; k <= L; ++k) {
        alpha->push_back(scalar_traits<K>::zero());
        MomentEngine<K> eng(make(2 * k));
        Word w;
        for (int i = 0; i < k; ++i) {
            w.push_back({0, false});
            w.push_back({0, true});
        }
        K partial = eng.moment(w);
        alpha->back() = xxstar_moments[static_cast<std::size_t>(k - 1)] - partial;
    }
    return make(2 * L);
}

} // namespace freeprob::freecum
