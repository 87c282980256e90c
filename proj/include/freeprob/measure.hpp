#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/rational.hpp"

namespace freeprob::transforms {

/// Finitely supported probability measure on the real line with exact
/// rational atoms and weights. Weights must be positive and sum to 1.
struct DiscreteMeasure {
    std::vector<Rational> atoms;
    std::vector<Rational> weights;

    DiscreteMeasure(std::vector<Rational> a, std::vector<Rational> w)
        : atoms(std::move(a)), weights(std::move(w)) {
        if (atoms.empty() || atoms.size() != weights.size())
            throw invalid_input("DiscreteMeasure: atoms and weights must be nonempty and equal length");
        // merge duplicate atoms, sort by position
        std::map<Rational, Rational> acc;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (weights[i] <= 0)
                throw invalid_input("DiscreteMeasure: weights must be positive");
            acc[atoms[i]] += weights[i];
        }
        Rational total = 0;
        atoms.clear();
        weights.clear();
        for (const auto& [x, w2] : acc) {
            atoms.push_back(x);
            weights.push_back(w2);
            total += w2;
        }
        if (total != 1)
            throw invalid_input("DiscreteMeasure: weights must sum to 1");
    }

    static DiscreteMeasure point(const Rational& x) { return DiscreteMeasure({x}, {Rational(1)}); }

    std::size_t support_size() const { return atoms.size(); }

    /// k-th moment, exact.
    Rational moment(int k) const {
        if (k < 0) throw invalid_input("DiscreteMeasure::moment: negative order");
        Rational s = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            Rational p = 1;
            for (int j = 0; j < k; ++j) p *= atoms[i];
            s += p * weights[i];
        }
        return s;
    }

    std::vector<Rational> moments(int order) const {
        std::vector<Rational> m;
        m.reserve(static_cast<std::size_t>(order));
        for (int k = 1; k <= order; ++k) m.push_back(moment(k));
        return m;
    }

    bool has_atom_at_zero() const {
        return std::any_of(atoms.begin(), atoms.end(), [](const Rational& x) { return x == 0; });
    }

    /// Push-forward under t -> 1/t. All atoms must be nonzero.
    DiscreteMeasure inverse_measure() const {
        if (has_atom_at_zero())
            throw invalid_input("DiscreteMeasure::inverse_measure: atom at 0");
        std::vector<Rational> a;
        a.reserve(atoms.size());
        for (const auto& x : atoms) a.push_back(Rational(1) / x);
        return DiscreteMeasure(std::move(a), weights);
    }

    std::string str() const {
        std::string out = "{";
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i) out += ", ";
            out += atoms[i].str() + ": " + weights[i].str();
        }
        out += "}";
        return out;
    }
};

} // namespace freeprob::transforms
