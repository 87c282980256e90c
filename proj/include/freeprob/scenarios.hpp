#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "freeprob/config.hpp"
#include "freeprob/dhmodel.hpp"
#include "freeprob/io.hpp"
#include "freeprob/ncpart.hpp"
#include "freeprob/opval.hpp"
#include "freeprob/randmat.hpp"
#include "freeprob/rng.hpp"
#include "freeprob/series.hpp"
#include "freeprob/transforms.hpp"
#include "freeprob/trimodel.hpp"

namespace freeprob::cli {

/// Seed and tolerance sources outside the config file. The seed chain is
/// flag > config > FREEPROB_SEED; a scenario that draws random data and
/// reaches the end of the chain empty-handed is a config error.
struct RunOptions {
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::string> seed_env;
    std::optional<double> tolerance_scale;
};

struct CriterionRow {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation; // "le" or "lt", value vs threshold
    bool pass = false;
};

/// Accumulates the pass/fail rows of a report. Every row is reproducible
/// from its value, threshold, and relation alone.
class Criteria {
public:
    bool le(const std::string& name, double value, double threshold) {
        return push(name, value, threshold, "le", value <= threshold);
    }
    bool lt(const std::string& name, double value, double threshold) {
        return push(name, value, threshold, "lt", value < threshold);
    }
    bool all_pass() const { return all_; }

    json to_json() const {
        json arr = json::array();
        for (const auto& r : rows_) {
            json row;
            row["name"] = r.name;
            row["value"] = r.value;
            row["threshold"] = r.threshold;
            row["relation"] = r.relation;
            row["pass"] = r.pass;
            arr.push_back(std::move(row));
        }
        return arr;
    }

private:
    bool push(const std::string& name, double value, double threshold, const char* rel,
              bool pass) {
        rows_.push_back({name, value, threshold, rel, pass});
        all_ = all_ && pass;
        return pass;
    }

    std::vector<CriterionRow> rows_;
    bool all_ = true;
};

struct ScenarioResult {
    json report;
    std::vector<std::pair<std::string, std::string>> artifacts; // filename -> bytes
    bool pass = false;
    std::string out_hint; // config "out", empty when absent
};

namespace detail {

using freecum::Alphabet;
using freecum::CumulantEngine;
using freecum::CumulantFunctional;
using freecum::Letter;
using freecum::MomentEngine;
using freecum::MomentFunctional;
using freecum::Word;

struct Ctx {
    ConfigReader& cfg;
    std::optional<std::uint64_t> seed;
    double tol = 1.0;
    json inputs;
    json metrics;
    Criteria criteria;
    std::vector<std::pair<std::string, std::string>> artifacts;

    std::uint64_t require_seed() {
        if (!seed)
            throw config_error("/seed",
                               "this scenario draws random samples; supply --seed, a config "
                               "key \"seed\", or FREEPROB_SEED");
        return *seed;
    }
};

inline json rationals_str(const std::vector<Rational>& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back(x.str());
    return out;
}

inline json rationals_dbl(const std::vector<Rational>& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back(static_cast<double>(x));
    return out;
}

inline json doubles_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(x);
    return out;
}

inline Word plain_word(int n) { return Word(static_cast<std::size_t>(n), Letter{0, false}); }

inline Word mask_word(int n, std::uint64_t mask) {
    Word w;
    for (int i = 0; i < n; ++i) w.push_back({0, (mask >> i & 1) != 0});
    return w;
}

inline Rational random_rational(std::mt19937_64& g) {
    std::uniform_int_distribution<int> num(-9, 9);
    std::uniform_int_distribution<int> den(1, 7);
    return Rational(num(g), den(g));
}

/// Random extensional single-generator functional on plain words.
inline MomentFunctional<Rational> random_plain_functional(std::mt19937_64& g, int n) {
    std::map<std::string, Rational> table;
    for (int k = 1; k <= n; ++k) table[freecum::word_key(plain_word(k))] = random_rational(g);
    return freecum::table_moment_functional<Rational>({"a"}, std::move(table));
}

inline MomentFunctional<Rational> random_star_functional(std::mt19937_64& g, int n) {
    std::map<std::string, Rational> table;
    for (int k = 1; k <= n; ++k)
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << k); ++mask)
            table[freecum::word_key(mask_word(k, mask))] = random_rational(g);
    return freecum::table_moment_functional<Rational>({"a"}, std::move(table));
}

inline transforms::DiscreteMeasure two_atom_half() {
    return transforms::DiscreteMeasure({Rational(1), Rational(2)},
                                       {Rational(1, 2), Rational(1, 2)});
}

// ---------------------------------------------------------------------------
// nc
// ---------------------------------------------------------------------------

inline void run_nc(Ctx& c) {
    const int n = static_cast<int>(c.cfg.require_int("n", 1, 14));
    c.inputs["n"] = n;

    json counts = json::array(), cats = json::array();
    long long mismatches = 0;
    for (int k = 1; k <= n; ++k) {
        long long count = 0;
        ncpart::for_each_noncrossing(ncpart::range_ground(k),
                                     [&](const ncpart::BlockList&) { ++count; });
        long long cat = ncpart::catalan(k).convert_to<long long>();
        counts.push_back(count);
        cats.push_back(cat);
        if (count != cat) ++mismatches;
    }
    c.metrics["count"] = counts.back();
    c.metrics["counts"] = std::move(counts);
    c.metrics["catalan"] = std::move(cats);
    c.criteria.le("counts-match-catalan", static_cast<double>(mismatches), 0.0);
}

// ---------------------------------------------------------------------------
// cumulants
// ---------------------------------------------------------------------------

inline void cumulants_free_poisson(Ctx& c) {
    Rational rate = c.cfg.opt_rational("c", Rational(1));
    if (rate <= 0) throw config_error(c.cfg.pointer("c"), "rate must be positive");
    const int order = static_cast<int>(c.cfg.opt_int("order", 4, 1, 12));
    c.inputs["c"] = rate.str();
    c.inputs["order"] = order;

    std::vector<Rational> m = freecum::free_poisson_moments<Rational>(rate, order);
    std::vector<Rational> kap = transforms::cumulants_from_moments(m);
    long long mismatches = 0;
    for (const auto& k : kap)
        if (k != rate) ++mismatches;

    c.metrics["moments"] = rationals_str(m);
    c.metrics["moments_double"] = rationals_dbl(m);
    c.metrics["cumulants"] = rationals_str(kap);
    c.criteria.le("constant-cumulants-recovered", static_cast<double>(mismatches), 0.0);
}

inline void cumulants_roundtrip(Ctx& c) {
    const int count = static_cast<int>(c.cfg.opt_int("count", 100, 1, 10000));
    const int order = static_cast<int>(c.cfg.opt_int("order", 8, 1, 10));
    const std::uint64_t seed = c.require_seed();
    c.inputs["count"] = count;
    c.inputs["order"] = order;
    c.inputs["seed"] = seed;

    std::mt19937_64 g(seed);
    long long mismatches = 0, compared = 0;
    for (int rep = 0; rep < count; ++rep) {
        MomentFunctional<Rational> phi = random_plain_functional(g, order);
        auto down = std::make_shared<CumulantEngine<Rational>>(phi);
        MomentEngine<Rational> up(CumulantFunctional<Rational>{
            {"a"}, [down](const Word& w) { return down->cumulant(w); }, order});
        for (int k = 1; k <= order; ++k) {
            ++compared;
            if (up.moment(plain_word(k)) != down->moment(plain_word(k))) ++mismatches;
        }
    }
    c.metrics["functionals"] = count;
    c.metrics["moments_compared"] = compared;
    c.criteria.le("roundtrip-exact", static_cast<double>(mismatches), 0.0);
}

inline void cumulants_cyclicity(Ctx& c) {
    const int order = static_cast<int>(c.cfg.opt_int("order", 6, 2, 8));
    const std::uint64_t seed = c.seed.value_or(23);
    c.inputs["order"] = order;
    c.inputs["seed"] = seed;

    long long mismatches = 0, rotations = 0;

    // random values assigned per rotation class make the table tracial by
    // construction; the engine still verifies that lazily
    std::mt19937_64 g(seed);
    std::map<std::string, Rational> table;
    for (int k = 1; k <= order; ++k)
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << k); ++mask) {
            Word w = mask_word(k, mask);
            if (table.count(freecum::word_key(w))) continue;
            Rational v = random_rational(g);
            for (std::size_t r = 0; r < w.size(); ++r)
                table[freecum::word_key(freecum::rotate_left(w, r))] = v;
        }
    auto phi = freecum::table_moment_functional<Rational>({"a"}, std::move(table));
    phi.tracial = true;
    phi.verify_tracial = true;
    CumulantEngine<Rational> random_eng(phi);
    CumulantEngine<Rational> haar_eng(freecum::haar_unitary_functional<Rational>());

    auto sweep = [&](CumulantEngine<Rational>& eng) {
        for (int k = 2; k <= order; ++k)
            for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << k); ++mask) {
                Word w = mask_word(k, mask);
                Rational base = eng.cumulant(w);
                for (std::size_t r = 1; r < w.size(); ++r) {
                    ++rotations;
                    if (eng.cumulant(freecum::rotate_left(w, r)) != base) ++mismatches;
                }
            }
    };
    sweep(random_eng);
    sweep(haar_eng);

    c.metrics["rotations_checked"] = rotations;
    c.criteria.le("cyclic-rotation-invariance", static_cast<double>(mismatches), 0.0);
}

inline void cumulants_products(Ctx& c) {
    const int count = static_cast<int>(c.cfg.opt_int("count", 50, 1, 2000));
    const int order = static_cast<int>(c.cfg.opt_int("order", 6, 2, 8));
    const std::uint64_t seed = c.require_seed();
    c.inputs["count"] = count;
    c.inputs["order"] = order;
    c.inputs["seed"] = seed;

    std::mt19937_64 g(seed);
    long long mismatches = 0;
    for (int rep = 0; rep < count; ++rep) {
        std::uniform_int_distribution<int> nd(2, order);
        const int n = nd(g);
        MomentFunctional<Rational> phi = random_star_functional(g, n);
        CumulantEngine<Rational> eng(phi);

        std::vector<int> sizes;
        int left = n;
        while (left > 0) {
            std::uniform_int_distribution<int> gd(1, left);
            int gsz = gd(g);
            sizes.push_back(gsz);
            left -= gsz;
        }
        std::uniform_int_distribution<int> sd(0, 1);
        Word w;
        for (int i = 0; i < n; ++i) w.push_back({0, sd(g) == 1});

        // oracle: the functional of the grouped variables, cumulated directly
        const int groups_n = static_cast<int>(sizes.size());
        std::vector<Word> groups;
        int at = 0;
        for (int gsz : sizes) {
            groups.emplace_back(w.begin() + at, w.begin() + at + gsz);
            at += gsz;
        }
        Alphabet ab;
        for (int i = 0; i < groups_n; ++i) ab.push_back("G" + std::to_string(i));
        auto grouped_eval = [groups, phi](const Word& gw) {
            Word expanded;
            for (const auto& l : gw) {
                if (l.star) throw invalid_input("grouped oracle: plain letters only");
                const Word& grp = groups[static_cast<std::size_t>(l.gen)];
                expanded.insert(expanded.end(), grp.begin(), grp.end());
            }
            return phi.eval(expanded);
        };
        CumulantEngine<Rational> grouped(
            MomentFunctional<Rational>{ab, grouped_eval, false, freecum::kUnbounded, false});
        Word top;
        for (int i = 0; i < groups_n; ++i) top.push_back({i, false});
        if (freecum::product_cumulant_ks(eng, sizes, w) != grouped.cumulant(top)) ++mismatches;
    }
    c.metrics["instances"] = count;
    c.criteria.le("grouped-cumulant-match", static_cast<double>(mismatches), 0.0);
}

inline void cumulants_rdiagonal(Ctx& c) {
    const int order = static_cast<int>(c.cfg.opt_int("order", 8, 2, 10));
    c.inputs["order"] = order;

    CumulantEngine<Rational> haar(freecum::haar_unitary_functional<Rational>());
    auto haar_rep = freecum::check_r_diagonal(haar, order);
    c.criteria.le("haar-nonalternating-vanish", static_cast<double>(haar_rep.violations.size()),
                  0.0);

    MomentEngine<Rational> circ_up(freecum::circular_cumulants<Rational>());
    auto circ_phi = circ_up.as_moment_functional(true);
    CumulantEngine<Rational> circ(circ_phi);
    auto circ_rep = freecum::check_r_diagonal(circ, std::min(order, 8));
    c.criteria.le("circular-nonalternating-vanish",
                  static_cast<double>(circ_rep.violations.size()), 0.0);

    // words in u + 1 expand binomially into haar moments; the order-1
    // cumulant is the mean 1, so R-diagonality must fail immediately
    MomentFunctional<Rational> shifted{
        {"a"},
        [](const Word& w) {
            const int n = static_cast<int>(w.size());
            Rational total = 0;
            for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
                int expsum = 0;
                for (int i = 0; i < n; ++i)
                    if (mask >> i & 1) expsum += w[static_cast<std::size_t>(i)].star ? -1 : 1;
                if (expsum == 0) total += 1;
            }
            return total;
        },
        true,
        freecum::kUnbounded,
        false};
    CumulantEngine<Rational> shift_eng(shifted);
    auto shift_rep = freecum::check_r_diagonal(shift_eng, 2);
    bool flagged = !shift_rep.pass && !shift_rep.violations.empty() &&
                   shift_rep.violations.front().word.size() == 1;
    c.criteria.le("shifted-haar-flagged-at-order-1", flagged ? 0.0 : 1.0, 0.0);

    json alt;
    for (const auto& [w, v] : haar_rep.alternating)
        if (!w.empty() && !w.front().star)
            alt["length_" + std::to_string(w.size())] = v.str();
    c.metrics["haar_alternating_cumulants"] = std::move(alt);
}

inline void cumulants_balanced_freeness(Ctx& c) {
    const int order = static_cast<int>(c.cfg.opt_int("order", 6, 2, 8));
    const int word_max = static_cast<int>(c.cfg.opt_int("word_length_max", 4, 2, 6));
    c.inputs["order"] = order;
    c.inputs["word_length_max"] = word_max;

    std::vector<Word> balanced;
    for (int n = 2; n <= word_max; n += 2)
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
            Word w = mask_word(n, mask);
            if (freecum::is_balanced(freecum::signs_of(w))) balanced.push_back(w);
        }
    std::vector<freecum::WordFamily> fams{
        {"aa*", {Word{{0, false}, {0, true}}}},
        {"balanced", balanced},
    };

    CumulantEngine<Rational> haar(freecum::haar_unitary_functional<Rational>());
    auto haar_rep = freecum::freeness_diagnostic_exact(haar, fams, order);
    c.criteria.le("haar-mixed-cumulants-vanish", static_cast<double>(haar_rep.violations.size()),
                  0.0);

    MomentEngine<Rational> circ_up(freecum::circular_cumulants<Rational>());
    auto circ_phi = circ_up.as_moment_functional(true);
    CumulantEngine<Rational> circ(circ_phi);
    auto circ_rep = freecum::freeness_diagnostic_exact(circ, fams, order);
    c.criteria.le("circular-mixed-cumulants-vanish",
                  static_cast<double>(circ_rep.violations.size()), 0.0);

    c.metrics["balanced_words"] = static_cast<long long>(balanced.size());
}

inline Rational lift_toy_kappa(const Word& w) {
    long long num = 5;
    for (const auto& l : w) num += (l.gen + 2) * (l.star ? 3 : 1);
    return Rational(num, 1 + static_cast<long long>(w.size()));
}

inline void cumulants_matrix_lift(Ctx& c) {
    const int N = static_cast<int>(c.cfg.opt_int("N", 2, 1, 3));
    const int order = static_cast<int>(c.cfg.opt_int("order", 3, 1, 4));
    const int count = static_cast<int>(c.cfg.opt_int("count", 20, 1, 500));
    const std::uint64_t seed = c.require_seed();
    c.inputs["N"] = N;
    c.inputs["order"] = order;
    c.inputs["count"] = count;
    c.inputs["seed"] = seed;

    using Mat = opval::Matrix<Rational>;
    using DW = opval::DecoratedWord<Rational>;
    std::mt19937_64 g(seed);
    auto random_mat = [&g](int n) {
        std::uniform_int_distribution<int> num(-4, 4);
        std::uniform_int_distribution<int> den(1, 3);
        Mat m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m.at(i, j) = Rational(num(g), den(g));
        return m;
    };

    std::vector<opval::LiftedGenerator<Rational>> gens;
    for (int gi = 0; gi < 3; ++gi) gens.push_back({random_mat(N), gi % 2});
    CumulantFunctional<Rational> kap{{"z0", "z1"}, lift_toy_kappa, freecum::kUnbounded};
    opval::MatrixCumulantEngine<Rational> eng(
        opval::lift_entrywise<Rational>(kap, {"g0", "g1", "g2"}, gens, N));

    std::uniform_int_distribution<int> len(1, order), pick(0, 2), coin(0, 1);
    long long mismatches = 0;
    for (int rep = 0; rep < count; ++rep) {
        DW w{{}, random_mat(N)};
        const int n = len(g);
        for (int k = 0; k < n; ++k)
            w.letters.push_back({random_mat(N), Letter{pick(g), coin(g) == 1}});
        Mat lhs = eng.cumulant(w);
        Mat rhs = opval::lifted_cumulant_closed_form<Rational>(lift_toy_kappa, gens, N, w);
        if (!(lhs == rhs)) ++mismatches;
    }
    c.metrics["instances"] = count;
    c.criteria.le("closed-form-matches-induction", static_cast<double>(mismatches), 0.0);
}

inline void run_cumulants(Ctx& c) {
    std::string check = c.cfg.opt_str("check", "free-poisson");
    c.inputs["check"] = check;
    if (check == "free-poisson")
        cumulants_free_poisson(c);
    else if (check == "roundtrip")
        cumulants_roundtrip(c);
    else if (check == "cyclicity")
        cumulants_cyclicity(c);
    else if (check == "products")
        cumulants_products(c);
    else if (check == "rdiagonal")
        cumulants_rdiagonal(c);
    else if (check == "balanced-freeness")
        cumulants_balanced_freeness(c);
    else if (check == "matrix-lift")
        cumulants_matrix_lift(c);
    else
        throw config_error(c.cfg.pointer("check"),
                           "unknown check '" + check +
                               "' (free-poisson, roundtrip, cyclicity, products, rdiagonal, "
                               "balanced-freeness, matrix-lift)");
}

// ---------------------------------------------------------------------------
// transforms
// ---------------------------------------------------------------------------

inline void transforms_rs_identity(Ctx& c) {
    const int order = static_cast<int>(c.cfg.opt_int("order", 8, 2, 12));
    c.inputs["order"] = order;

    std::vector<std::pair<std::string, std::vector<Rational>>> laws;
    if (c.cfg.has("xx")) {
        LawSpec law = parse_law(c.cfg, "xx");
        c.inputs["xx"] = law.echo();
        laws.emplace_back("custom", law.moments(order));
    } else {
        laws.emplace_back("free-poisson-1",
                          freecum::free_poisson_moments<Rational>(Rational(1), order));
        laws.emplace_back("free-poisson-2",
                          freecum::free_poisson_moments<Rational>(Rational(2), order));
        laws.emplace_back("two-atom-half", two_atom_half().moments(order));
    }

    for (const auto& [label, m] : laws) {
        if (m[0] == 0)
            throw config_error(c.cfg.pointer("xx"), "law must have nonzero mean");
        auto zr = transforms::shift_up(transforms::r_series(m));
        auto zs = transforms::shift_up(transforms::s_series(m));
        auto rev = zr.revert();
        long long mismatches = 0;
        if (rev.coefficients().size() != zs.coefficients().size())
            mismatches = static_cast<long long>(zs.coefficients().size());
        else
            for (std::size_t k = 0; k < zs.coefficients().size(); ++k)
                if (rev.coefficients()[k] != zs.coefficients()[k]) ++mismatches;
        c.criteria.le("zs-inverts-zr-" + label, static_cast<double>(mismatches), 0.0);
    }
}

inline void transforms_s_at_minus_one(Ctx& c) {
    auto check_one = [&c](const std::string& label, const transforms::DiscreteMeasure& mu) {
        transforms::ExtendedRational mi = transforms::mean_inverse(mu);
        double limit = transforms::s_at_minus_one_limit(mu);
        json entry;
        entry["measure"] = mu.str();
        if (mi.finite) {
            entry["mean_inverse"] = mi.value.str();
            entry["limit"] = limit;
            c.criteria.le("limit-matches-mean-inverse-" + label,
                          std::fabs(limit - mi.as_double()), 1e-8 * c.tol);
        } else {
            entry["mean_inverse"] = "infinity";
            entry["limit"] = std::isinf(limit) ? "infinity" : std::to_string(limit);
            c.criteria.le("limit-infinite-" + label, std::isinf(limit) ? 0.0 : 1.0, 0.0);
        }
        c.metrics[label] = std::move(entry);
    };

    if (c.cfg.has("law")) {
        LawSpec law = parse_law(c.cfg, "law");
        if (law.free_poisson)
            throw config_error(c.cfg.pointer("law"), "this check needs a discrete law");
        c.inputs["law"] = law.echo();
        check_one("custom", *law.mu);
        return;
    }
    check_one("two-atom-half", two_atom_half());
    check_one("atom-at-zero",
              transforms::DiscreteMeasure({Rational(0), Rational(1)},
                                          {Rational(1, 4), Rational(3, 4)}));
}

inline void transforms_inverse_symmetry(Ctx& c) {
    std::vector<double> grid;
    if (c.cfg.has("s_values")) {
        const json& arr = c.cfg.require_any("s_values");
        if (!arr.is_array() || arr.empty())
            throw config_error(c.cfg.pointer("s_values"), "expected a nonempty array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            grid.push_back(ConfigReader::as_num(
                arr[i], c.cfg.pointer("s_values") + "/" + std::to_string(i), 0.01, 0.99));
    } else {
        for (int i = 1; i <= 9; ++i) grid.push_back(0.1 * i);
    }
    c.inputs["s_values"] = doubles_json(grid);

    std::vector<std::pair<std::string, transforms::DiscreteMeasure>> laws;
    if (c.cfg.has("law")) {
        LawSpec law = parse_law(c.cfg, "law");
        if (law.free_poisson)
            throw config_error(c.cfg.pointer("law"), "this check needs a discrete law");
        c.inputs["law"] = law.echo();
        laws.emplace_back("custom", *law.mu);
    } else {
        laws.emplace_back("two-atom-half", two_atom_half());
        laws.emplace_back("two-atom-skew",
                          transforms::DiscreteMeasure({Rational(1, 2), Rational(3)},
                                                      {Rational(1, 3), Rational(2, 3)}));
    }

    for (const auto& [label, mu] : laws) {
        if (mu.has_atom_at_zero())
            throw config_error(c.cfg.pointer("law"), "atoms must be strictly positive");
        transforms::DiscreteMeasure inv = mu.inverse_measure();
        double psi_err = 0.0, s_err = 0.0;
        for (double s : grid) {
            // psi_{1/a}(t) + psi_a(1/t) = -1 at t = -s
            double e1 = std::fabs(transforms::psi_eval(inv, -s) +
                                  transforms::psi_eval(mu, -1.0 / s) + 1.0);
            double e2 = std::fabs(transforms::s_eval_negative(mu, -s) *
                                      transforms::s_eval_negative(inv, s - 1.0) -
                                  1.0);
            psi_err = std::max(psi_err, e1);
            s_err = std::max(s_err, e2);
        }
        c.metrics["max_psi_error_" + label] = psi_err;
        c.metrics["max_s_error_" + label] = s_err;
        c.criteria.le("psi-inverse-identity-" + label, psi_err, 1e-8 * c.tol);
        c.criteria.le("s-reciprocal-identity-" + label, s_err, 1e-8 * c.tol);
    }
}

inline void run_transforms(Ctx& c) {
    std::string check = c.cfg.opt_str("check", "rs-identity");
    c.inputs["check"] = check;
    if (check == "rs-identity")
        transforms_rs_identity(c);
    else if (check == "s-at-minus-one")
        transforms_s_at_minus_one(c);
    else if (check == "inverse-symmetry")
        transforms_inverse_symmetry(c);
    else
        throw config_error(c.cfg.pointer("check"),
                           "unknown check '" + check +
                               "' (rs-identity, s-at-minus-one, inverse-symmetry)");
}

// ---------------------------------------------------------------------------
// brown-predict and simulate
// ---------------------------------------------------------------------------

inline void run_brown_predict(Ctx& c) {
    LawSpec law = parse_law(c.cfg, "xx");
    const int grid = static_cast<int>(c.cfg.opt_int("grid", 11, 2, 100001));
    c.inputs["xx"] = law.echo();
    c.inputs["grid"] = grid;

    brown::RadialLaw radial = law.radial();
    std::vector<double> ts, rs;
    for (int i = 0; i < grid; ++i) {
        double t = static_cast<double>(i) / (grid - 1);
        ts.push_back(t);
        rs.push_back(radial.quantile(t));
    }
    long long violations = 0;
    for (std::size_t i = 1; i < rs.size(); ++i)
        if (rs[i] < rs[i - 1] - 1e-12) ++violations;

    c.metrics["inner_radius"] = rs.front();
    c.metrics["outer_radius"] = rs.back();
    c.criteria.le("quantile-monotone", static_cast<double>(violations), 0.0);

    if (c.cfg.has("weights")) {
        std::vector<Rational> w = normalize_weights(c.cfg.require_rational_array("weights", 1),
                                                    c.cfg.pointer("weights"));
        c.inputs["weights"] = rationals_str(w);
        std::vector<double> radii = brown::annuli_radii(radial, w);
        c.metrics["annuli_radii"] = doubles_json(radii);
        long long disorder = 0;
        for (std::size_t i = 1; i < radii.size(); ++i)
            if (radii[i] < radii[i - 1] - 1e-12) ++disorder;
        c.criteria.le("annuli-radii-ordered", static_cast<double>(disorder), 0.0);
    }

    c.artifacts.emplace_back("radial_quantiles.csv", io::radial_table_csv(ts, rs));
}

inline void run_simulate(Ctx& c) {
    LawSpec law = parse_law(c.cfg, "xx");
    const int count = static_cast<int>(c.cfg.opt_int("count", 1000, 0, 10000000));
    const std::uint64_t seed = c.require_seed();
    c.inputs["xx"] = law.echo();
    c.inputs["count"] = count;
    c.inputs["seed"] = seed;

    brown::RadialLaw radial = law.radial();
    rng::RngStream gen(seed, 0);
    std::vector<std::complex<double>> pts = brown::sample_brown(radial, count, gen);

    const double lo = radial.quantile(0.0), hi = radial.quantile(1.0);
    long long outside = 0;
    double mean_mod = 0.0, max_mod = 0.0;
    for (const auto& z : pts) {
        double r = std::abs(z);
        mean_mod += r;
        max_mod = std::max(max_mod, r);
        if (r < lo - 1e-9 || r > hi + 1e-9) ++outside;
    }
    if (count > 0) mean_mod /= count;

    c.metrics["count"] = count;
    c.metrics["support"] = doubles_json({lo, hi});
    c.metrics["mean_modulus"] = mean_mod;
    c.metrics["max_modulus"] = max_mod;
    c.criteria.le("radii-inside-predicted-support", static_cast<double>(outside), 0.0);
    c.artifacts.emplace_back("samples.csv", io::samples_csv(pts));
}

// ---------------------------------------------------------------------------
// verify-dh
// ---------------------------------------------------------------------------

inline void dh_moments(Ctx& c) {
    const double rate = c.cfg.opt_num("c", 1.0, 1.0, 64.0);
    const int N = static_cast<int>(c.cfg.opt_int("N", 2, 1, 16));
    const int m = static_cast<int>(c.cfg.opt_int("m", 64, 1, 4096));
    const int trials = static_cast<int>(c.cfg.opt_int("trials", 20, 2, 10000));
    const double z = c.cfg.opt_num("z_threshold", 3.0, 0.1, 100.0) * c.tol;
    const std::uint64_t seed = c.require_seed();
    c.inputs["c"] = rate;
    c.inputs["N"] = N;
    c.inputs["m"] = m;
    c.inputs["trials"] = trials;
    c.inputs["seed"] = seed;
    c.inputs["z_threshold"] = z;

    trimodel::DhVerifyReport rep = trimodel::dh_verify(rate, N, m, trials, seed);
    for (std::size_t k = 0; k < rep.empirical.size(); ++k)
        c.criteria.le("trace-moment-" + std::to_string(k + 1),
                      std::fabs(rep.empirical[k] - rep.target[k]), z * rep.se[k]);
    if (rep.lemma_checked)
        c.criteria.le("entry-cumulant-rule", rep.lemma_pass ? 0.0 : 1.0, 0.0);

    c.metrics["dimension"] = N * m;
    c.metrics["empirical"] = doubles_json(rep.empirical);
    c.metrics["standard_error"] = doubles_json(rep.se);
    c.metrics["target"] = doubles_json(rep.target);
    c.metrics["entry_rule_checked"] = rep.lemma_checked;
}

inline void dh_entry_rule(Ctx& c) {
    const int N_max = static_cast<int>(c.cfg.opt_int("N_max", 3, 1, 4));
    const int n_max = static_cast<int>(c.cfg.opt_int("n_max", 3, 1, 4));
    std::vector<Rational> cs{Rational(1), Rational(2)};
    if (c.cfg.has("c_values")) cs = c.cfg.require_rational_array("c_values", 1);
    for (const auto& cv : cs)
        if (cv <= 0) throw config_error(c.cfg.pointer("c_values"), "rates must be positive");
    c.inputs["N_max"] = N_max;
    c.inputs["n_max"] = n_max;
    c.inputs["c_values"] = rationals_str(cs);

    long long cases = 0, mismatches = 0;
    for (int N = 1; N <= N_max; ++N) {
        dhmodel::EntryIndex ei(N);
        for (const auto& cv : cs) {
            MomentEngine<Rational> eng(dhmodel::entry_cumulants<Rational>(N, cv, n_max + 1));
            for (int a = 1; a <= N; ++a) {
                std::vector<int> rows;
                std::function<void(int)> sweep = [&](int depth) {
                    if (!rows.empty()) {
                        ++cases;
                        Rational want = dhmodel::computation_lemma_expected(N, cv, a, rows);
                        if (dhmodel::computation_lemma_sum(eng, ei, a, rows) != want)
                            ++mismatches;
                    }
                    if (depth == 0) return;
                    for (int r = 1; r <= N; ++r) {
                        rows.push_back(r);
                        sweep(depth - 1);
                        rows.pop_back();
                    }
                };
                sweep(n_max);
            }
        }
    }
    c.metrics["cases"] = cases;
    c.criteria.le("trichotomy-exact", static_cast<double>(mismatches), 0.0);
}

inline void dh_tri_sqrt(Ctx& c) {
    const int count = static_cast<int>(c.cfg.opt_int("count", 50, 1, 2000));
    const std::uint64_t seed = c.require_seed();
    std::vector<std::vector<int>> shapes{{1, 1}, {2, 2, 2}, {3, 1, 2}};
    if (c.cfg.has("shapes")) {
        const json& arr = c.cfg.require_any("shapes");
        if (!arr.is_array() || arr.empty())
            throw config_error(c.cfg.pointer("shapes"), "expected a nonempty array of arrays");
        shapes.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            std::string ptr = c.cfg.pointer("shapes") + "/" + std::to_string(i);
            if (!arr[i].is_array() || arr[i].empty())
                throw config_error(ptr, "expected a nonempty array of block sizes");
            std::vector<int> shape;
            int total = 0;
            for (std::size_t j = 0; j < arr[i].size(); ++j) {
                int b = static_cast<int>(
                    ConfigReader::as_int(arr[i][j], ptr + "/" + std::to_string(j), 1, 8));
                shape.push_back(b);
                total += b;
            }
            if (total > 24) throw config_error(ptr, "total dimension above 24");
            shapes.push_back(std::move(shape));
        }
    }
    c.inputs["count"] = count;
    c.inputs["seed"] = seed;
    {
        json shp = json::array();
        for (const auto& s : shapes) {
            json one = json::array();
            for (int b : s) one.push_back(b);
            shp.push_back(std::move(one));
        }
        c.inputs["shapes"] = std::move(shp);
    }

    using randmat::CMat;
    rng::RngStream gen(seed, 0);
    double max_rel = 0.0;
    long long below_nonzero = 0, instances = 0;
    for (int rep = 0; rep < count; ++rep) {
        for (const auto& shape : shapes) {
            trimodel::BlockSpec blocks(shape);
            const int n = blocks.total();
            CMat g(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) g(i, j) = gen.complex_gauss();
            CMat y = g * g.adjoint() + 0.1 * CMat::Identity(n, n);
            y = (y + CMat(y.adjoint())) / 2.0;

            CMat x = trimodel::upper_triangular_sqrt(y, blocks);
            max_rel = std::max(max_rel, (x * x.adjoint() - y).norm() / y.norm());
            std::vector<int> block_of(static_cast<std::size_t>(n));
            for (int bi = 0; bi < blocks.count(); ++bi)
                for (int i = blocks.offset(bi);
                     i < blocks.offset(bi) + blocks.sizes[static_cast<std::size_t>(bi)]; ++i)
                    block_of[static_cast<std::size_t>(i)] = bi;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (block_of[static_cast<std::size_t>(i)] > block_of[static_cast<std::size_t>(j)] &&
                        x(i, j) != std::complex<double>(0.0, 0.0))
                        ++below_nonzero;
            ++instances;
        }
    }

    // worked instance with integer entries
    CMat y2(2, 2);
    y2 << 2.0, 1.0, 1.0, 1.0;
    CMat x2 = trimodel::upper_triangular_sqrt(y2, trimodel::BlockSpec({1, 1}));
    CMat expect(2, 2);
    expect << 1.0, 1.0, 0.0, 1.0;
    double hand_dev = (x2 - expect).cwiseAbs().maxCoeff();
    if (x2(1, 0) != std::complex<double>(0.0, 0.0)) hand_dev = std::max(hand_dev, 1.0);

    c.metrics["instances"] = instances;
    c.metrics["max_relative_residual"] = max_rel;
    c.criteria.le("reconstruction-residual", max_rel, 1e-10 * c.tol);
    c.criteria.le("structural-zeros-exact", static_cast<double>(below_nonzero), 0.0);
    c.criteria.le("hand-case-2x2", hand_dev, 1e-12 * c.tol);
}

inline void run_verify_dh(Ctx& c) {
    std::string check = c.cfg.opt_str("check", "moments");
    c.inputs["check"] = check;
    if (check == "moments")
        dh_moments(c);
    else if (check == "entry-rule")
        dh_entry_rule(c);
    else if (check == "tri-sqrt")
        dh_tri_sqrt(c);
    else
        throw config_error(c.cfg.pointer("check"),
                           "unknown check '" + check + "' (moments, entry-rule, tri-sqrt)");
}

// ---------------------------------------------------------------------------
// verify-annuli
// ---------------------------------------------------------------------------

inline Rational discrete_quantile(const transforms::DiscreteMeasure& mu, const Rational& u) {
    Rational acc = 0;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        acc += mu.weights[i];
        if (u <= acc) return mu.atoms[i];
    }
    return mu.atoms.back();
}

inline void run_verify_annuli(Ctx& c) {
    const std::string ensemble = c.cfg.require_str("ensemble");
    const int m = static_cast<int>(c.cfg.opt_int("m", 512, 2, 4096));
    const int trials = static_cast<int>(c.cfg.opt_int("trials", 20, 1, 10000));
    const std::uint64_t seed = c.require_seed();
    const bool projection = c.cfg.opt_bool("projection", false);
    const double ks_threshold = c.cfg.opt_num("ks_threshold", 0.05, 0.0, 1.0) * c.tol;
    const double radii_tol = c.cfg.opt_num("radii_tolerance", 0.05, 0.0, 10.0) * c.tol;
    const double stray_threshold = c.cfg.opt_num("stray_threshold", 0.02, 0.0, 1.0) * c.tol;
    const double rank_tol = c.cfg.opt_num("rank_tolerance", 0.05, 0.0, 1.0) * c.tol;

    LawSpec law;
    int N = 1;
    double dh_rate = 1.0;
    if (ensemble == "ginibre") {
        law.free_poisson = true;
        law.c = 1;
    } else if (ensemble == "haar") {
        law.mu = transforms::DiscreteMeasure::point(Rational(1));
    } else if (ensemble == "biinvariant") {
        law = parse_law(c.cfg, "xx");
        if (law.free_poisson && law.c < 1)
            throw config_error(c.cfg.pointer("xx"),
                               "free-poisson rate below 1 has no matrix sampler here");
    } else if (ensemble == "dh") {
        Rational cr = c.cfg.require_rational("c");
        if (cr < 1) throw config_error(c.cfg.pointer("c"), "rate must be >= 1");
        dh_rate = static_cast<double>(cr);
        N = static_cast<int>(c.cfg.require_int("N", 1, 16));
        law.free_poisson = true;
        law.c = cr;
    } else {
        throw config_error(c.cfg.pointer("ensemble"),
                           "unknown ensemble '" + ensemble +
                               "' (ginibre, haar, biinvariant, dh)");
    }

    std::vector<Rational> weights{Rational(1, 2), Rational(1, 2)};
    if (c.cfg.has("weights"))
        weights = normalize_weights(c.cfg.require_rational_array("weights", 1),
                                    c.cfg.pointer("weights"));

    c.inputs["ensemble"] = ensemble;
    if (ensemble == "biinvariant") c.inputs["xx"] = law.echo();
    if (ensemble == "dh") {
        c.inputs["c"] = law.c.str();
        c.inputs["N"] = N;
    }
    c.inputs["m"] = m;
    c.inputs["trials"] = trials;
    c.inputs["seed"] = seed;
    c.inputs["weights"] = rationals_str(weights);
    c.inputs["projection"] = projection;

    brown::RadialLaw radial = law.radial();
    std::vector<double> radii = brown::annuli_radii(radial, weights);
    const double r_in = radii.front(), r_out = radii.back(), r_cut = radii[1];
    double w1 = static_cast<double>(weights.front());

    // a single-circle prediction turns the KS statistic into a coin flip on
    // rounding noise, so the concentration check replaces it there
    const bool degenerate = (r_out - r_in) <= 1e-9;

    using randmat::CMat;
    randmat::CMat diag_d; // deterministic biinvariant factor, shared by trials
    if (ensemble == "biinvariant" && !law.free_poisson) {
        diag_d = CMat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            Rational u(2 * i + 1, 2 * m);
            diag_d(i, i) = std::sqrt(static_cast<double>(discrete_quantile(*law.mu, u)));
        }
    }

    std::vector<std::complex<double>> pooled;
    double inner_sum = 0.0, outer_sum = 0.0, rank_sum = 0.0;
    long long strays = 0;
    for (int t = 0; t < trials; ++t) {
        rng::RngStream gen(seed, static_cast<std::uint64_t>(t));
        CMat x;
        if (ensemble == "ginibre")
            x = randmat::ginibre(m, gen);
        else if (ensemble == "haar")
            x = randmat::haar_unitary(m, gen);
        else if (ensemble == "dh")
            x = trimodel::dh_model_sample(dh_rate, N, m, gen);
        else if (law.free_poisson)
            x = trimodel::circular_free_poisson_sample(static_cast<double>(law.c), m, gen);
        else
            x = randmat::biinvariant_sample(diag_d, gen);

        std::vector<std::complex<double>> eigs = randmat::eigenvalues(x);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& z : eigs) {
            double r = std::abs(z);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            if (r < r_in || r > r_out) ++strays;
        }
        inner_sum += lo;
        outer_sum += hi;
        pooled.insert(pooled.end(), eigs.begin(), eigs.end());

        if (projection) {
            randmat::SpectralProjection sp = randmat::spectral_subspace_projection(x, r_cut);
            rank_sum += static_cast<double>(sp.rank) / static_cast<double>(x.rows());
        }
    }

    const double inner = inner_sum / trials, outer = outer_sum / trials;
    const double stray_frac = static_cast<double>(strays) / static_cast<double>(pooled.size());
    randmat::EmpiricalRadialCdf emp = randmat::empirical_radial_cdf(pooled);

    c.metrics["dimension"] = (ensemble == "dh") ? N * m : m;
    c.metrics["eigenvalues"] = static_cast<long long>(pooled.size());
    c.metrics["predicted_radii"] = doubles_json(radii);
    c.metrics["inner_radius"] = inner;
    c.metrics["outer_radius"] = outer;
    c.metrics["stray_fraction"] = stray_frac;

    if (degenerate) {
        double max_dev = 0.0;
        for (double r : emp.radii) max_dev = std::max(max_dev, std::fabs(r - r_in));
        c.metrics["max_modulus_deviation"] = max_dev;
        c.criteria.le("modulus-concentration", max_dev, 1e-8 * c.tol);
    } else {
        double ks = randmat::ks_distance(emp, radial);
        c.metrics["ks_distance"] = ks;
        c.criteria.le("radial-ks", ks, ks_threshold);
        c.criteria.le("inner-radius", std::fabs(inner - r_in), radii_tol);
        c.criteria.le("outer-radius", std::fabs(outer - r_out), radii_tol);
        c.criteria.le("stray-fraction", stray_frac, stray_threshold);
    }
    if (projection) {
        const double rank_frac = rank_sum / trials;
        c.metrics["rank_fraction"] = rank_frac;
        c.metrics["rank_target"] = w1;
        c.criteria.le("rank-fraction-at-first-cut", std::fabs(rank_frac - w1), rank_tol);
    }

    std::string cdf_csv = "radius,cdf\n";
    const std::size_t n_pool = emp.radii.size();
    for (std::size_t i = 0; i < n_pool; ++i)
        cdf_csv += io::fmt12(emp.radii[i]) + "," +
                   io::fmt12(static_cast<double>(i + 1) / static_cast<double>(n_pool)) + "\n";
    c.artifacts.emplace_back("radial_cdf.csv", std::move(cdf_csv));
}

// ---------------------------------------------------------------------------
// verify-smult
// ---------------------------------------------------------------------------

inline void run_verify_smult(Ctx& c) {
    const json& av = c.cfg.require_any("a");
    const json& bv = c.cfg.require_any("b");
    if (!av.is_object()) throw config_error(c.cfg.pointer("a"), "expected a law object");
    if (!bv.is_object()) throw config_error(c.cfg.pointer("b"), "expected a law object");
    LawSpec a = law_from_object(av, c.cfg.pointer("a"));
    LawSpec b = law_from_object(bv, c.cfg.pointer("b"));
    const int order = static_cast<int>(c.cfg.opt_int("order", 6, 1, 6));
    c.inputs["a"] = a.echo();
    c.inputs["b"] = b.echo();
    c.inputs["order"] = order;

    std::vector<Rational> ma = a.moments(order), mb = b.moments(order);
    if (ma[0] == 0)
        throw config_error(c.cfg.pointer("a"), "law must have nonzero mean for the S-transform");
    if (mb[0] == 0)
        throw config_error(c.cfg.pointer("b"), "law must have nonzero mean for the S-transform");

    std::vector<Rational> prod = transforms::free_mult_convolution(ma, mb, order);

    // oracle: x, y free with these cumulants; phi((xy)^k) via the joint rule
    MomentEngine<Rational> joint(freecum::joint_free_functional<Rational>(
        {a.cumulants(order, "x"), b.cumulants(order, "y")}));
    long long mismatches = 0;
    json oracle = json::array();
    for (int k = 1; k <= order; ++k) {
        Word w;
        for (int i = 0; i < k; ++i) {
            w.push_back({0, false});
            w.push_back({1, false});
        }
        Rational direct = joint.moment(w);
        oracle.push_back(direct.str());
        if (direct != prod[static_cast<std::size_t>(k - 1)]) ++mismatches;
    }

    c.metrics["a_moments"] = rationals_str(ma);
    c.metrics["b_moments"] = rationals_str(mb);
    c.metrics["product_moments"] = rationals_str(prod);
    c.metrics["product_moments_double"] = rationals_dbl(prod);
    c.metrics["oracle_moments"] = std::move(oracle);
    c.criteria.le("product-moments-match-free-oracle", static_cast<double>(mismatches), 0.0);
}

// ---------------------------------------------------------------------------
// freeness-mc
// ---------------------------------------------------------------------------

inline void run_freeness_mc(Ctx& c) {
    Rational cr = c.cfg.opt_rational("c", Rational(2));
    if (cr < 1) throw config_error(c.cfg.pointer("c"), "rate must be >= 1");
    const int m1 = static_cast<int>(c.cfg.opt_int("m", 64, 2, 2048));
    const int m2 = static_cast<int>(c.cfg.opt_int("m2", 2 * m1, 2, 4096));
    if (m2 <= m1) throw config_error(c.cfg.pointer("m2"), "m2 must exceed m");
    const int trials = static_cast<int>(c.cfg.opt_int("trials", 20, 2, 500));
    const int order = static_cast<int>(c.cfg.opt_int("order", 3, 2, 6));
    const int bootstrap = static_cast<int>(c.cfg.opt_int("bootstrap", 200, 0, 10000));
    const std::uint64_t seed = c.require_seed();

    std::vector<Rational> weights{Rational(1, 2), Rational(1, 2)};
    if (c.cfg.has("weights"))
        weights = normalize_weights(c.cfg.require_rational_array("weights", 1),
                                    c.cfg.pointer("weights"));
    brown::RadialLaw radial = brown::free_poisson_radial_law(cr);
    const double r_cut = brown::annuli_radii(radial, weights)[1];

    c.inputs["c"] = cr.str();
    c.inputs["m"] = m1;
    c.inputs["m2"] = m2;
    c.inputs["trials"] = trials;
    c.inputs["order"] = order;
    c.inputs["bootstrap"] = bootstrap;
    c.inputs["seed"] = seed;
    c.inputs["weights"] = rationals_str(weights);

    const double rate = static_cast<double>(cr);
    auto diagnose = [&](int dim, std::uint64_t stream_base, std::uint64_t boot_stream) {
        std::vector<randmat::CMat> projections, squares;
        for (int t = 0; t < trials; ++t) {
            rng::RngStream gen(seed, stream_base + static_cast<std::uint64_t>(t));
            randmat::CMat x = trimodel::circular_free_poisson_sample(rate, dim, gen);
            projections.push_back(randmat::spectral_subspace_projection(x, r_cut).p);
            squares.push_back(x * x.adjoint());
        }
        rng::RngStream boot(seed, boot_stream);
        return randmat::freeness_diagnostic_mc(projections, squares, order, boot, bootstrap);
    };

    randmat::McFreenessReport rep1 = diagnose(m1, 0, 2000000);
    randmat::McFreenessReport rep2 = diagnose(m2, 1000000, 2000001);

    auto largest = [](const randmat::McFreenessReport& rep) {
        std::string label;
        double best = -1.0;
        for (const auto& [w, v] : rep.mixed_cumulants)
            if (std::abs(v) > best) {
                best = std::abs(v);
                label = w;
            }
        return label;
    };
    json sizes = json::array();
    for (const auto* rep : {&rep1, &rep2}) {
        json one;
        one["m"] = (rep == &rep1) ? m1 : m2;
        one["max_abs_mixed_cumulant"] = rep->max_abs_mixed_cumulant;
        one["bootstrap_se"] = rep->bootstrap_se;
        one["largest_word"] = largest(*rep);
        sizes.push_back(std::move(one));
    }
    c.metrics["cut_radius"] = r_cut;
    c.metrics["diagnostics"] = std::move(sizes);
    c.criteria.lt("diagnostic-decreases",
                  rep2.max_abs_mixed_cumulant - rep1.max_abs_mixed_cumulant, 0.0);
}

} // namespace detail

/// Runs one scenario against a parsed config. Throws config_error for
/// schema problems; computational failures surface as the library's own
/// exception types. File writing is the caller's concern.
inline ScenarioResult run_scenario(const json& config, const RunOptions& opts) {
    ConfigReader cfg(config, "");
    const std::string scenario = cfg.require_str("scenario");

    double tol = 1.0;
    if (opts.tolerance_scale) {
        tol = *opts.tolerance_scale;
        cfg.claim("tolerance_scale");
    } else {
        tol = cfg.opt_num("tolerance_scale", 1.0, 1e-6, 1e6);
    }
    if (!(tol > 0)) throw config_error("/tolerance_scale", "must be positive");

    std::string out_hint = cfg.opt_str("out", "");

    std::optional<std::uint64_t> seed;
    if (opts.seed_flag) {
        seed = *opts.seed_flag;
        cfg.claim("seed");
    } else if (cfg.has("seed")) {
        seed = static_cast<std::uint64_t>(
            cfg.require_int("seed", 0, std::numeric_limits<std::int64_t>::max()));
    } else if (opts.seed_env) {
        const std::string& s = *opts.seed_env;
        char* end = nullptr;
        unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || end == nullptr || *end != '\0')
            throw config_error("/seed", "FREEPROB_SEED is not an unsigned integer: '" + s + "'");
        seed = static_cast<std::uint64_t>(v);
    }

    detail::Ctx ctx{cfg, seed, tol, json::object(), json::object(), Criteria{}, {}};
    if (scenario == "nc")
        detail::run_nc(ctx);
    else if (scenario == "cumulants")
        detail::run_cumulants(ctx);
    else if (scenario == "transforms")
        detail::run_transforms(ctx);
    else if (scenario == "brown-predict")
        detail::run_brown_predict(ctx);
    else if (scenario == "simulate")
        detail::run_simulate(ctx);
    else if (scenario == "verify-dh")
        detail::run_verify_dh(ctx);
    else if (scenario == "verify-annuli")
        detail::run_verify_annuli(ctx);
    else if (scenario == "verify-smult")
        detail::run_verify_smult(ctx);
    else if (scenario == "freeness-mc")
        detail::run_freeness_mc(ctx);
    else
        throw config_error("/scenario",
                           "unknown scenario '" + scenario +
                               "' (nc, cumulants, transforms, brown-predict, simulate, "
                               "verify-dh, verify-annuli, verify-smult, freeness-mc)");
    cfg.finish();

    ctx.inputs["tolerance_scale"] = tol;

    ScenarioResult out;
    out.report["scenario"] = scenario;
    out.report["inputs"] = std::move(ctx.inputs);
    out.report["metrics"] = std::move(ctx.metrics);
    out.report["criteria"] = ctx.criteria.to_json();
    out.report["pass"] = ctx.criteria.all_pass();
    if (!ctx.artifacts.empty()) {
        json names = json::array();
        for (const auto& [name, _] : ctx.artifacts) names.push_back(name);
        out.report["artifacts"] = std::move(names);
    }
    out.artifacts = std::move(ctx.artifacts);
    out.pass = ctx.criteria.all_pass();
    out.out_hint = std::move(out_hint);
    return out;
}

} // namespace freeprob::cli
