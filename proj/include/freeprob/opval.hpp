#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/freecum.hpp"
#include "freeprob/ncpart.hpp"
#include "freeprob/rational.hpp"
#include "freeprob/words.hpp"

namespace freeprob::opval {

using freecum::Alphabet;
using freecum::Letter;
using freecum::Word;

/// Dense square matrix over an exact (or floating) scalar. Small dimensions
/// only; this is the amalgamation algebra, not a numerics type.
template <class K>
class Matrix {
public:
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, scalar_traits<K>::zero()) {
        if (n < 1) throw invalid_input("Matrix: dimension must be positive");
    }
    static Matrix identity(int n) {
        Matrix m(n);
        for (int i = 0; i < n; ++i) m.at(i, i) = scalar_traits<K>::one();
        return m;
    }
    /// Matrix unit e_{ij}; i, j are 0-based here.
    static Matrix unit(int n, int i, int j) {
        Matrix m(n);
        m.at(i, j) = scalar_traits<K>::one();
        return m;
    }

    int dim() const { return n_; }
    K& at(int i, int j) {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) throw invalid_input("Matrix: index out of range");
        return a_[static_cast<std::size_t>(i) * n_ + j];
    }
    const K& at(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) throw invalid_input("Matrix: index out of range");
        return a_[static_cast<std::size_t>(i) * n_ + j];
    }

    friend Matrix operator+(const Matrix& x, const Matrix& y) {
        x.check_same(y);
        Matrix r(x.n_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = x.a_[k] + y.a_[k];
        return r;
    }
    friend Matrix operator-(const Matrix& x, const Matrix& y) {
        x.check_same(y);
        Matrix r(x.n_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = x.a_[k] - y.a_[k];
        return r;
    }
    friend Matrix operator*(const Matrix& x, const Matrix& y) {
        x.check_same(y);
        Matrix r(x.n_);
        for (int i = 0; i < x.n_; ++i)
            for (int l = 0; l < x.n_; ++l) {
                const K& v = x.at(i, l);
                if (scalar_traits<K>::is_zero(v)) continue;
                for (int j = 0; j < x.n_; ++j) r.at(i, j) = r.at(i, j) + v * y.at(l, j);
            }
        return r;
    }
    friend Matrix operator*(const K& s, const Matrix& x) {
        Matrix r(x.n_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = s * x.a_[k];
        return r;
    }
    Matrix adjoint() const {
        Matrix r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r.at(j, i) = scalar_traits<K>::conj(at(i, j));
        return r;
    }
    bool is_zero() const {
        for (const K& v : a_)
            if (!scalar_traits<K>::is_zero(v)) return false;
        return true;
    }
    friend bool operator==(const Matrix& x, const Matrix& y) {
        return x.n_ == y.n_ && x.a_ == y.a_;
    }
    friend bool operator!=(const Matrix& x, const Matrix& y) { return !(x == y); }

    std::string key() const {
        std::string s = "[";
        for (std::size_t k = 0; k < a_.size(); ++k) {
            if (k) s += ",";
            s += scalar_traits<K>::to_string(a_[k]);
        }
        s += "]";
        return s;
    }

private:
    void check_same(const Matrix& y) const {
        if (n_ != y.n_) throw invalid_input("Matrix: dimension mismatch");
    }
    int n_;
    std::vector<K> a_;
};

/// One letter of a decorated word: the constant matrix standing immediately
/// to the left of the algebra letter.
template <class K>
struct DecLetter {
    Matrix<K> left;
    Letter letter;
};

/// d_1 a^{s_1} d_2 a^{s_2} ... d_n a^{s_n} d_{n+1}; `right` is the trailing
/// constant d_{n+1}.
template <class K>
struct DecoratedWord {
    std::vector<DecLetter<K>> letters;
    Matrix<K> right;
};

template <class K>
DecoratedWord<K> plain_decorated(const Word& w, int N) {
    DecoratedWord<K> dw{{}, Matrix<K>::identity(N)};
    dw.letters.reserve(w.size());
    for (const Letter& l : w) dw.letters.push_back({Matrix<K>::identity(N), l});
    return dw;
}

template <class K>
std::string decorated_key(const DecoratedWord<K>& w) {
    std::string s;
    for (const auto& dl : w.letters) {
        s += dl.left.key();
        s += static_cast<char>(dl.letter.gen * 2 + (dl.letter.star ? 1 : 0) + 1);
    }
    s += "|";
    s += w.right.key();
    return s;
}

/// Conditional expectation onto the N x N constant matrices, evaluated on
/// decorated words. E must satisfy E(d) = d and E(d x d') = d E(x) d'.
template <class K>
struct MatrixMomentFunctional {
    int N = 1;
    Alphabet alphabet;
    std::function<Matrix<K>(const DecoratedWord<K>&)> eval;
    int max_order = freecum::kUnbounded;
};

/// Positive rational weights on the diagonal, summing to 1; defines the
/// scalar state phi = phi_0 o E with phi_0(e_ii) = t_i.
struct WeightedTrace {
    std::vector<Rational> t;

    explicit WeightedTrace(std::vector<Rational> weights) : t(std::move(weights)) {
        if (t.empty()) throw invalid_input("WeightedTrace: no weights");
        Rational sum = 0;
        for (const auto& w : t) {
            if (w <= 0) throw invalid_input("WeightedTrace: weights must be positive");
            sum += w;
        }
        if (sum != 1) throw invalid_input("WeightedTrace: weights must sum to 1");
    }
    static WeightedTrace uniform(int n) {
        return WeightedTrace(std::vector<Rational>(static_cast<std::size_t>(n), Rational(1, n)));
    }
    int dim() const { return static_cast<int>(t.size()); }
};

template <class K>
K apply_weighted_trace(const WeightedTrace& t, const Matrix<K>& m) {
    if (t.dim() != m.dim()) throw invalid_input("apply_weighted_trace: dimension mismatch");
    K out = scalar_traits<K>::zero();
    for (int i = 0; i < m.dim(); ++i)
        out = out + scalar_traits<K>::from_rational(t.t[static_cast<std::size_t>(i)]) * m.at(i, i);
    return out;
}

/// Compound evaluation kappa_pi via the nested product: the value of an
/// inner block left-multiplies the argument immediately following that
/// block inside its parent, e.g. pi={{1,3},{2}} gives base(a_1 (x) base(a_2) a_3).
/// Outermost blocks multiply left to right; the trailing constant is applied
/// at the end.
template <class K, class Base>
Matrix<K> evaluate_nested_compound(Base&& base, const ncpart::SetPartition& pi,
                                   const DecoratedWord<K>& w) {
    const int n = static_cast<int>(w.letters.size());
    if (n == 0) throw invalid_input("evaluate_nested_compound: empty word");
    if (!ncpart::is_noncrossing(pi))
        throw invalid_input("evaluate_nested_compound: crossing partition, nested product undefined");
    {
        std::vector<int> ground(pi.ground().begin(), pi.ground().end());
        if (static_cast<int>(ground.size()) != n || ground.front() != 1 || ground.back() != n)
            throw invalid_input("evaluate_nested_compound: partition does not match the word");
    }
    const auto& blocks = pi.blocks();
    const int nb = static_cast<int>(blocks.size());
    // tightest enclosing block; spans of noncrossing blocks nest or are disjoint
    std::vector<int> parent(static_cast<std::size_t>(nb), -1);
    for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nb; ++j) {
            if (i == j) continue;
            if (blocks[j].front() < blocks[i].front() && blocks[i].back() < blocks[j].back()) {
                if (parent[i] < 0 || blocks[j].front() > blocks[parent[i]].front()) parent[i] = j;
            }
        }
    }
    std::vector<std::vector<int>> children(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i)
        if (parent[i] >= 0) children[static_cast<std::size_t>(parent[i])].push_back(i);
    // blocks are ordered by least element, so each children list is span-ordered

    const int N = w.right.dim();
    auto value = [&](auto&& self, int bi) -> Matrix<K> {
        const auto& B = blocks[static_cast<std::size_t>(bi)];
        DecoratedWord<K> sub{{}, Matrix<K>::identity(N)};
        std::size_t next_child = 0;
        const auto& kids = children[static_cast<std::size_t>(bi)];
        for (std::size_t k = 0; k < B.size(); ++k) {
            Matrix<K> dec = w.letters[static_cast<std::size_t>(B[k] - 1)].left;
            if (k > 0) {
                Matrix<K> prod = Matrix<K>::identity(N);
                bool any = false;
                while (next_child < kids.size() &&
                       blocks[static_cast<std::size_t>(kids[next_child])].back() < B[k]) {
                    prod = prod * self(self, kids[next_child]);
                    ++next_child;
                    any = true;
                }
                if (any) dec = prod * dec;
            }
            sub.letters.push_back({std::move(dec), w.letters[static_cast<std::size_t>(B[k] - 1)].letter});
        }
        return base(sub);
    };

    Matrix<K> out = Matrix<K>::identity(N);
    for (int i = 0; i < nb; ++i)
        if (parent[i] < 0) out = out * value(value, i);
    return out * w.right;
}

namespace detail {

template <class K>
class MatMemo {
public:
    bool get(const std::string& k, Matrix<K>& out) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(k);
        if (it == map_.end()) return false;
        out = it->second;
        return true;
    }
    void put(const std::string& k, const Matrix<K>& v) {
        std::lock_guard<std::mutex> lock(mu_);
        map_.emplace(k, v);
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, Matrix<K>> map_;
};

} // namespace detail

/// Operator-valued cumulants from a conditional expectation, by the moment
/// relation E(w) = sum over NC partitions of the nested compounds.
template <class K>
class MatrixCumulantEngine {
public:
    explicit MatrixCumulantEngine(MatrixMomentFunctional<K> E) : E_(std::move(E)) {
        if (E_.N < 1) throw invalid_input("MatrixCumulantEngine: bad dimension");
        if (!E_.eval) throw invalid_input("MatrixCumulantEngine: missing eval");
    }

    int dim() const { return E_.N; }
    const MatrixMomentFunctional<K>& functional() const { return E_; }

    Matrix<K> moment(const DecoratedWord<K>& w) {
        check(w);
        if (w.letters.empty()) return w.right;
        std::string k = "m" + decorated_key(w);
        Matrix<K> out(E_.N);
        if (memo_.get(k, out)) return out;
        out = E_.eval(w);
        if (out.dim() != E_.N) throw invalid_input("MatrixCumulantEngine: eval returned wrong dimension");
        memo_.put(k, out);
        return out;
    }

    Matrix<K> cumulant(const DecoratedWord<K>& w) {
        check(w);
        const int n = static_cast<int>(w.letters.size());
        if (n == 0) throw invalid_input("MatrixCumulantEngine: cumulant of the empty word");
        if (n == 1) return moment(w);
        std::string k = "k" + decorated_key(w);
        Matrix<K> out(E_.N);
        if (memo_.get(k, out)) return out;
        out = moment(w);
        auto self = [this](const DecoratedWord<K>& sub) { return cumulant(sub); };
        ncpart::for_each_noncrossing(ncpart::range_ground(n), [&](const ncpart::BlockList& bl) {
            if (bl.size() == 1) return;
            out = out - evaluate_nested_compound(self, ncpart::SetPartition(bl), w);
        });
        memo_.put(k, out);
        return out;
    }

    Matrix<K> cumulant_compound(const ncpart::SetPartition& pi, const DecoratedWord<K>& w) {
        check(w);
        auto self = [this](const DecoratedWord<K>& sub) { return cumulant(sub); };
        return evaluate_nested_compound(self, pi, w);
    }

private:
    void check(const DecoratedWord<K>& w) const {
        if (E_.max_order != freecum::kUnbounded &&
            static_cast<int>(w.letters.size()) > E_.max_order)
            throw invalid_input("MatrixCumulantEngine: word longer than max_order");
        if (w.right.dim() != E_.N)
            throw invalid_input("MatrixCumulantEngine: trailing decoration has wrong dimension");
        for (const auto& dl : w.letters) {
            if (dl.left.dim() != E_.N)
                throw invalid_input("MatrixCumulantEngine: decoration has wrong dimension");
            if (dl.letter.gen < 0 || dl.letter.gen >= static_cast<int>(E_.alphabet.size()))
                throw invalid_input("MatrixCumulantEngine: letter outside the alphabet");
        }
    }

    MatrixMomentFunctional<K> E_;
    detail::MatMemo<K> memo_;
};

template <class K>
Matrix<K> matrix_cumulant(MatrixCumulantEngine<K>& engine, const DecoratedWord<K>& w) {
    return engine.cumulant(w);
}

/// phi(w) = phi_0[E(w)] on undecorated words; the compatible scalar state.
template <class K>
K weighted_trace(const MatrixMomentFunctional<K>& E, const WeightedTrace& t,
                 const DecoratedWord<K>& w) {
    if (t.dim() != E.N) throw invalid_input("weighted_trace: weight/dimension mismatch");
    return apply_weighted_trace(t, E.eval(w));
}

/// The compatible scalar moment functional on the matrix algebra's own
/// generators (identity decorations).
template <class K>
freecum::MomentFunctional<K> scalar_functional(MatrixMomentFunctional<K> E, WeightedTrace t) {
    if (t.dim() != E.N) throw invalid_input("scalar_functional: weight/dimension mismatch");
    auto shared = std::make_shared<MatrixMomentFunctional<K>>(std::move(E));
    auto wt = std::make_shared<WeightedTrace>(std::move(t));
    return freecum::MomentFunctional<K>{
        shared->alphabet,
        [shared, wt](const Word& w) {
            return apply_weighted_trace(*wt, shared->eval(plain_decorated<K>(w, shared->N)));
        },
        false,
        shared->max_order,
        false};
}

/// Scalar functional on words over the matrix generators together with the
/// N^2 matrix units e_ij (appended to the alphabet as "e11", "e12", ...).
/// Runs of unit letters fold into the decorations; e_ij* = e_ji.
template <class K>
freecum::MomentFunctional<K> scalar_with_units(MatrixMomentFunctional<K> E, WeightedTrace t) {
    if (t.dim() != E.N) throw invalid_input("scalar_with_units: weight/dimension mismatch");
    if (E.N > 9) throw invalid_input("scalar_with_units: unit naming supports N <= 9");
    auto shared = std::make_shared<MatrixMomentFunctional<K>>(std::move(E));
    auto wt = std::make_shared<WeightedTrace>(std::move(t));
    const int base_gens = static_cast<int>(shared->alphabet.size());
    const int N = shared->N;
    Alphabet alphabet = shared->alphabet;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j)
            alphabet.push_back("e" + std::to_string(i) + std::to_string(j));
    return freecum::MomentFunctional<K>{
        alphabet,
        [shared, wt, base_gens, N](const Word& w) {
            DecoratedWord<K> dw{{}, Matrix<K>::identity(N)};
            Matrix<K> pending = Matrix<K>::identity(N);
            for (const Letter& l : w) {
                if (l.gen < base_gens) {
                    dw.letters.push_back({pending, l});
                    pending = Matrix<K>::identity(N);
                } else {
                    int u = l.gen - base_gens;
                    int i = u / N, j = u % N;
                    if (l.star) std::swap(i, j);
                    pending = pending * Matrix<K>::unit(N, i, j);
                }
            }
            dw.right = pending;
            if (shared->max_order != freecum::kUnbounded &&
                static_cast<int>(dw.letters.size()) > shared->max_order)
                throw invalid_input("scalar_with_units: too many generator letters for max_order");
            if (dw.letters.empty()) return apply_weighted_trace(*wt, dw.right);
            return apply_weighted_trace(*wt, shared->eval(dw));
        },
        false,
        freecum::kUnbounded,
        false};
}

/// Entrywise lift of a scalar law: generator g is the matrix m_g carrying
/// the scalar generator z_g, so E(d_1 g_1 ... g_n d) = phi(z-word) *
/// d_1 m_1 d_2 m_2 ... m_n d, and the cumulants factor the same way.
template <class K>
struct LiftedGenerator {
    Matrix<K> m;
    int scalar_gen;
};

template <class K>
MatrixMomentFunctional<K> lift_entrywise(freecum::CumulantFunctional<K> scalar_kappa,
                                         Alphabet lifted_alphabet,
                                         std::vector<LiftedGenerator<K>> gens, int N) {
    if (lifted_alphabet.size() != gens.size())
        throw invalid_input("lift_entrywise: alphabet and generator list disagree");
    for (const auto& g : gens) {
        if (g.m.dim() != N) throw invalid_input("lift_entrywise: matrix dimension mismatch");
        if (g.scalar_gen < 0 || g.scalar_gen >= static_cast<int>(scalar_kappa.alphabet.size()))
            throw invalid_input("lift_entrywise: scalar generator out of range");
    }
    int max_order = scalar_kappa.max_order;
    auto eng = std::make_shared<freecum::MomentEngine<K>>(std::move(scalar_kappa));
    auto gs = std::make_shared<std::vector<LiftedGenerator<K>>>(std::move(gens));
    return MatrixMomentFunctional<K>{
        N, std::move(lifted_alphabet),
        [eng, gs, N](const DecoratedWord<K>& w) {
            Matrix<K> M = Matrix<K>::identity(N);
            Word zw;
            for (const auto& dl : w.letters) {
                const auto& g = (*gs)[static_cast<std::size_t>(dl.letter.gen)];
                M = M * dl.left * (dl.letter.star ? g.m.adjoint() : g.m);
                zw.push_back(Letter{g.scalar_gen, dl.letter.star});
            }
            M = M * w.right;
            return eng->moment(zw) * M;
        },
        max_order};
}

/// The closed-form cumulant of a lifted word, for cross-checking the
/// inductive engine: kappa(z-word) * d_1 m_1 d_2 m_2 ... m_n d.
template <class K>
Matrix<K> lifted_cumulant_closed_form(const std::function<K(const Word&)>& scalar_kappa,
                                      const std::vector<LiftedGenerator<K>>& gens, int N,
                                      const DecoratedWord<K>& w) {
    Matrix<K> M = Matrix<K>::identity(N);
    Word zw;
    for (const auto& dl : w.letters) {
        const auto& g = gens[static_cast<std::size_t>(dl.letter.gen)];
        M = M * dl.left * (dl.letter.star ? g.m.adjoint() : g.m);
        zw.push_back(Letter{g.scalar_gen, dl.letter.star});
    }
    M = M * w.right;
    return scalar_kappa(zw) * M;
}

/// Entry-cumulant test for freeness from the constant matrices: cyclic
/// index tuples (j_k = i_{k+1}, closing with j_n = i_1) must share one
/// value c_n per order and every other tuple must vanish. Tuples are
/// 1-based. When the test passes, the matrix itself has scalar cumulants
/// kappa_n = N^{n-1} c_n with respect to the compatible trace.
template <class K>
struct ConstantCyclicReport {
    int order = 0;
    bool pass = true;
    std::vector<K> c;              // common cyclic value per order (index n-1)
    std::vector<K> implied_scalar; // N^{n-1} c_n
    std::vector<std::string> violations;
};

template <class K>
ConstantCyclicReport<K> check_constant_cyclic(
    const std::function<K(const std::vector<std::pair<int, int>>&)>& kappa, int N, int order) {
    if (N < 1 || order < 1) throw invalid_input("check_constant_cyclic: bad parameters");
    ConstantCyclicReport<K> rep;
    rep.order = order;
    for (int n = 1; n <= order; ++n) {
        bool have_ref = false;
        K ref = scalar_traits<K>::zero();
        std::vector<std::pair<int, int>> tuple(static_cast<std::size_t>(n));
        auto describe = [&](const K& v) {
            std::string s;
            for (const auto& [i, j] : tuple)
                s += "(" + std::to_string(i) + "," + std::to_string(j) + ")";
            s += " = " + scalar_traits<K>::to_string(v);
            return s;
        };
        auto rec = [&](auto&& self, int pos) -> void {
            if (pos == n) {
                bool cyclic = true;
                for (int k = 0; k < n; ++k)
                    if (tuple[static_cast<std::size_t>(k)].second !=
                        tuple[static_cast<std::size_t>((k + 1) % n)].first) {
                        cyclic = false;
                        break;
                    }
                K v = kappa(tuple);
                if (cyclic) {
                    if (!have_ref) {
                        have_ref = true;
                        ref = v;
                    } else if (!scalar_traits<K>::is_zero(v - ref)) {
                        rep.pass = false;
                        rep.violations.push_back("cyclic value differs: " + describe(v));
                    }
                } else if (!scalar_traits<K>::is_zero(v)) {
                    rep.pass = false;
                    rep.violations.push_back("off-cycle cumulant: " + describe(v));
                }
                return;
            }
            for (int i = 1; i <= N; ++i)
                for (int j = 1; j <= N; ++j) {
                    tuple[static_cast<std::size_t>(pos)] = {i, j};
                    self(self, pos + 1);
                }
        };
        rec(rec, 0);
        rep.c.push_back(ref);
        K scale = scalar_traits<K>::one();
        for (int k = 1; k < n; ++k) scale = scale * scalar_traits<K>::from_rational(Rational(N));
        rep.implied_scalar.push_back(scale * ref);
    }
    return rep;
}

/// Amalgamated R-diagonality: kappa^D(d_1 a^{s_1} (x) ... (x) d_n a^{s_n})
/// must vanish whenever the sign pattern is not alternating, for all
/// decorations. By left-linearity d_1 = I suffices; the inner decorations
/// range over the matrix units.
struct AmalgRdiagReport {
    int order = 0;
    bool pass = true;
    long long checked = 0;
    std::vector<std::string> violations;
};

template <class K>
AmalgRdiagReport check_rdiag_amalgamated(MatrixCumulantEngine<K>& engine, int order) {
    static_assert(scalar_traits<K>::is_exact, "exact scalars required for a vanishing check");
    if (engine.functional().alphabet.size() != 1)
        throw invalid_input("check_rdiag_amalgamated: expects a single generator");
    const int N = engine.dim();
    AmalgRdiagReport rep;
    rep.order = order;
    std::vector<Matrix<K>> units;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) units.push_back(Matrix<K>::unit(N, i, j));
    for (int n = 1; n <= order; ++n) {
        for (int mask = 0; mask < (1 << n); ++mask) {
            Word pattern;
            for (int k = 0; k < n; ++k) pattern.push_back(Letter{0, ((mask >> k) & 1) != 0});
            if (freecum::is_alternating(pattern)) continue;
            // decorate positions 2..n with all unit combinations
            DecoratedWord<K> dw = plain_decorated<K>(pattern, N);
            auto rec = [&](auto&& self, int pos) -> void {
                if (pos == n) {
                    ++rep.checked;
                    Matrix<K> v = engine.cumulant(dw);
                    if (!v.is_zero()) {
                        rep.pass = false;
                        std::string s = "pattern=";
                        for (const Letter& l : pattern) s += l.star ? "a* " : "a ";
                        s += "decorations:";
                        for (int k = 1; k < n; ++k)
                            s += " " + dw.letters[static_cast<std::size_t>(k)].left.key();
                        rep.violations.push_back(s);
                    }
                    return;
                }
                for (const auto& u : units) {
                    dw.letters[static_cast<std::size_t>(pos)].left = u;
                    self(self, pos + 1);
                }
                dw.letters[static_cast<std::size_t>(pos)].left = Matrix<K>::identity(N);
            };
            rec(rec, 1);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// conditional expectation for a matrix with abstract entries
// ---------------------------------------------------------------------------

/// Polynomial in the entry algebra: serialized word -> (word, coefficient).
template <class K>
using Poly = std::map<std::string, std::pair<Word, K>>;

namespace detail {

template <class K>
void poly_add(Poly<K>& p, const Word& w, const K& coeff) {
    if (scalar_traits<K>::is_zero(coeff)) return;
    std::string k = word_key(w);
    auto it = p.find(k);
    if (it == p.end()) {
        p.emplace(std::move(k), std::make_pair(w, coeff));
    } else {
        it->second.second = it->second.second + coeff;
        if (scalar_traits<K>::is_zero(it->second.second)) p.erase(it);
    }
}

} // namespace detail

/// N x N matrix whose entries are polynomials in scalar-algebra letters;
/// E of a decorated word is the entrywise scalar moment of the product.
template <class K>
class EntryMatrixModel {
public:
    /// `letter_scale_denom` = s means every matrix letter carries a factor
    /// 1/sqrt(s); odd powers must then produce exactly zero.
    EntryMatrixModel(int N, Alphabet matrix_alphabet, freecum::CumulantFunctional<K> entry_cumulants,
                     int letter_scale_denom = 1)
        : N_(N),
          alphabet_(std::move(matrix_alphabet)),
          scale_denom_(letter_scale_denom),
          engine_(std::make_shared<freecum::MomentEngine<K>>(std::move(entry_cumulants))) {
        if (N < 1) throw invalid_input("EntryMatrixModel: bad dimension");
        if (letter_scale_denom < 1) throw invalid_input("EntryMatrixModel: bad scale");
        entries_.assign(alphabet_.size(),
                        std::vector<Poly<K>>(static_cast<std::size_t>(N) * N));
    }

    /// Adds coeff * word to entry (i, j) of generator g; i, j are 1-based.
    void add_entry(int gen, int i, int j, const Word& w, const K& coeff) {
        if (gen < 0 || gen >= static_cast<int>(alphabet_.size()))
            throw invalid_input("EntryMatrixModel: generator out of range");
        if (i < 1 || j < 1 || i > N_ || j > N_)
            throw invalid_input("EntryMatrixModel: entry index out of range");
        detail::poly_add(entries_[static_cast<std::size_t>(gen)]
                                 [static_cast<std::size_t>(i - 1) * N_ + (j - 1)],
                         w, coeff);
    }

    MatrixMomentFunctional<K> functional(int max_order) const {
        auto self = std::make_shared<EntryMatrixModel>(*this);
        return MatrixMomentFunctional<K>{
            N_, alphabet_,
            [self](const DecoratedWord<K>& w) { return self->expectation(w); },
            max_order};
    }

    Matrix<K> expectation(const DecoratedWord<K>& w) const {
        using PM = std::vector<Poly<K>>; // row-major N x N
        const int N = N_;
        PM acc = const_poly(w.letters.empty() ? w.right : w.letters.front().left);
        for (std::size_t k = 0; k < w.letters.size(); ++k) {
            if (k > 0) acc = mul_const(acc, w.letters[k].left);
            acc = mul_gen(acc, w.letters[k].letter);
        }
        if (!w.letters.empty()) acc = mul_const(acc, w.right);
        Matrix<K> out(N);
        const int n = static_cast<int>(w.letters.size());
        bool odd = (n % 2) != 0;
        K scale = scalar_traits<K>::one();
        if (!odd && scale_denom_ > 1) {
            BigInt den = 1;
            for (int k = 0; k < n / 2; ++k) den *= scale_denom_;
            scale = scalar_traits<K>::from_rational(Rational(BigInt(1), den));
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                K v = scalar_traits<K>::zero();
                for (const auto& [key, term] : acc[static_cast<std::size_t>(i) * N + j])
                    v = v + term.second * engine_->moment(term.first);
                if (odd && scale_denom_ > 1 && !scalar_traits<K>::is_zero(v))
                    throw numeric_failure(
                        "EntryMatrixModel: odd-order expectation is nonzero, scale is irrational");
                out.at(i, j) = scale * v;
            }
        return out;
    }

    const Alphabet& alphabet() const { return alphabet_; }
    int dim() const { return N_; }

private:
    std::vector<Poly<K>> const_poly(const Matrix<K>& m) const {
        std::vector<Poly<K>> p(static_cast<std::size_t>(N_) * N_);
        for (int i = 0; i < N_; ++i)
            for (int j = 0; j < N_; ++j)
                detail::poly_add(p[static_cast<std::size_t>(i) * N_ + j], Word{}, m.at(i, j));
        return p;
    }
    std::vector<Poly<K>> mul_const(const std::vector<Poly<K>>& p, const Matrix<K>& m) const {
        std::vector<Poly<K>> out(static_cast<std::size_t>(N_) * N_);
        for (int i = 0; i < N_; ++i)
            for (int l = 0; l < N_; ++l) {
                const auto& cell = p[static_cast<std::size_t>(i) * N_ + l];
                if (cell.empty()) continue;
                for (int j = 0; j < N_; ++j) {
                    const K& c = m.at(l, j);
                    if (scalar_traits<K>::is_zero(c)) continue;
                    for (const auto& [key, term] : cell) {
                        K prod = term.second * c;
                        detail::poly_add(out[static_cast<std::size_t>(i) * N_ + j], term.first,
                                         prod);
                    }
                }
            }
        return out;
    }
    std::vector<Poly<K>> mul_gen(const std::vector<Poly<K>>& p, const Letter& l) const {
        const auto& G = entries_[static_cast<std::size_t>(l.gen)];
        std::vector<Poly<K>> out(static_cast<std::size_t>(N_) * N_);
        for (int i = 0; i < N_; ++i)
            for (int m = 0; m < N_; ++m) {
                const auto& cell = p[static_cast<std::size_t>(i) * N_ + m];
                if (cell.empty()) continue;
                for (int j = 0; j < N_; ++j) {
                    // entry (m, j) of the generator, adjointed if starred:
                    // (G*)_{mj} = (G_{jm})* with the word reversed and flipped
                    const Poly<K>& g = l.star ? G[static_cast<std::size_t>(j) * N_ + m]
                                              : G[static_cast<std::size_t>(m) * N_ + j];
                    if (g.empty()) continue;
                    for (const auto& [k1, t1] : cell)
                        for (const auto& [k2, t2] : g) {
                            Word w2 = l.star ? adjoint(t2.first) : t2.first;
                            K c2 = l.star ? scalar_traits<K>::conj(t2.second) : t2.second;
                            Word combined = t1.first;
                            combined.insert(combined.end(), w2.begin(), w2.end());
                            K prod = t1.second * c2;
                            detail::poly_add(out[static_cast<std::size_t>(i) * N_ + j], combined,
                                             prod);
                        }
                }
            }
        return out;
    }

    int N_;
    Alphabet alphabet_;
    int scale_denom_;
    std::shared_ptr<freecum::MomentEngine<K>> engine_;
    std::vector<std::vector<Poly<K>>> entries_; // per generator, row-major
};

} // namespace freeprob::opval
