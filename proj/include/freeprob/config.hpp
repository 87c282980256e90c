#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeprob/brown.hpp"
#include "freeprob/freecum.hpp"
#include "freeprob/measure.hpp"
#include "freeprob/rational.hpp"

namespace freeprob::cli {

using json = nlohmann::ordered_json;

/// Schema violation in a scenario config. `pointer` is the JSON-pointer
/// path of the offending key, "/seed" for a missing-but-required seed.
struct config_error : std::runtime_error {
    std::string pointer;

    config_error(std::string ptr, const std::string& what)
        : std::runtime_error("config error at " + (ptr.empty() ? "/" : ptr) + ": " + what),
          pointer(std::move(ptr)) {}
};

/// Exact rational from a JSON value: integers directly, floats as the
/// dyadic rational they already are, strings through parse_rational.
inline Rational rational_from_json(const json& v, const std::string& ptr) {
    if (v.is_string()) {
        try {
            return parse_rational(v.get<std::string>());
        } catch (const std::exception& e) {
            throw config_error(ptr, e.what());
        }
    }
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return Rational(v.get<std::uint64_t>());
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (!std::isfinite(d)) throw config_error(ptr, "number must be finite");
        return Rational(d);
    }
    throw config_error(ptr, "expected a number or a rational string like \"1/2\"");
}

/// Typed accessor over one JSON object. Every read marks its key; finish()
/// rejects whatever was never consumed, so unknown keys cannot pass
/// silently. `path` is the JSON-pointer prefix for error messages.
class ConfigReader {
public:
    ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(path_, "expected an object");
    }

    const json& raw() const { return j_; }
    std::string pointer(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    /// Marks a key handled without interpreting it here.
    void claim(const std::string& key) { used_.insert(key); }

    const json& require_any(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) throw config_error(pointer(key), "required key is missing");
        used_.insert(key);
        return *it;
    }

    std::int64_t require_int(const std::string& key, std::int64_t lo, std::int64_t hi) {
        return as_int(require_any(key), pointer(key), lo, hi);
    }

    std::int64_t opt_int(const std::string& key, std::int64_t def, std::int64_t lo,
                         std::int64_t hi) {
        if (!has(key)) return def;
        return require_int(key, lo, hi);
    }

    double require_num(const std::string& key, double lo, double hi) {
        return as_num(require_any(key), pointer(key), lo, hi);
    }

    double opt_num(const std::string& key, double def, double lo, double hi) {
        if (!has(key)) return def;
        return require_num(key, lo, hi);
    }

    std::string require_str(const std::string& key) {
        const json& v = require_any(key);
        if (!v.is_string()) throw config_error(pointer(key), "expected a string");
        return v.get<std::string>();
    }

    std::string opt_str(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        return require_str(key);
    }

    bool opt_bool(const std::string& key, bool def) {
        if (!has(key)) return def;
        const json& v = require_any(key);
        if (!v.is_boolean()) throw config_error(pointer(key), "expected true or false");
        return v.get<bool>();
    }

    Rational require_rational(const std::string& key) {
        return rational_from_json(require_any(key), pointer(key));
    }

    Rational opt_rational(const std::string& key, const Rational& def) {
        if (!has(key)) return def;
        return require_rational(key);
    }

    std::vector<Rational> require_rational_array(const std::string& key, std::size_t min_len) {
        const json& v = require_any(key);
        if (!v.is_array() || v.size() < min_len)
            throw config_error(pointer(key), "expected an array of at least " +
                                                 std::to_string(min_len) + " numbers");
        std::vector<Rational> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(rational_from_json(v[i], pointer(key) + "/" + std::to_string(i)));
        return out;
    }

    /// All keys must have been consumed by now.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw config_error(path_ + "/" + it.key(), "unknown key");
    }

    static std::int64_t as_int(const json& v, const std::string& ptr, std::int64_t lo,
                               std::int64_t hi) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw config_error(ptr, "expected an integer");
        std::int64_t x = v.get<std::int64_t>();
        if (x < lo || x > hi)
            throw config_error(ptr, "value " + std::to_string(x) + " outside [" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }

    static double as_num(const json& v, const std::string& ptr, double lo, double hi) {
        if (!v.is_number()) throw config_error(ptr, "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x) || x < lo || x > hi)
            throw config_error(ptr, "value outside [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
        return x;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

/// A positive law usable as the distribution of x x*: either free Poisson
/// with exact rate c, or a discrete measure with nonnegative atoms.
struct LawSpec {
    bool free_poisson = false;
    Rational c{0};
    std::optional<transforms::DiscreteMeasure> mu;

    std::vector<Rational> moments(int order) const {
        if (free_poisson) return freecum::free_poisson_moments<Rational>(c, order);
        return mu->moments(order);
    }

    brown::RadialLaw radial() const {
        if (free_poisson) return brown::free_poisson_radial_law(c);
        return brown::radial_law(*mu);
    }

    /// Single-generator cumulant functional with this law's free cumulants.
    freecum::CumulantFunctional<Rational> cumulants(int order, const std::string& name) const {
        auto kap = std::make_shared<std::vector<Rational>>(
            transforms::cumulants_from_moments(moments(order)));
        return {{name},
                [kap](const freecum::Word& w) -> Rational {
                    for (const auto& l : w)
                        if (l.star) throw invalid_input("law cumulants: plain letters only");
                    if (w.empty() || w.size() > kap->size())
                        throw resource_limit("law cumulants: order beyond the truncation");
                    return (*kap)[w.size() - 1];
                },
                order};
    }

    std::string describe() const {
        if (free_poisson) return "free-poisson(" + c.str() + ")";
        return mu->str();
    }

    json echo() const {
        json out;
        if (free_poisson) {
            out["law"] = "free-poisson";
            out["c"] = c.str();
        } else {
            out["law"] = "discrete";
            json atoms = json::array(), weights = json::array();
            for (const auto& a : mu->atoms) atoms.push_back(a.str());
            for (const auto& w : mu->weights) weights.push_back(w.str());
            out["atoms"] = std::move(atoms);
            out["weights"] = std::move(weights);
        }
        return out;
    }
};

/// Normalizes raw positive weights to total mass one, exactly.
inline std::vector<Rational> normalize_weights(std::vector<Rational> w, const std::string& ptr) {
    Rational total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0)
            throw config_error(ptr + "/" + std::to_string(i), "weights must be positive");
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

inline LawSpec law_from_object(const json& v, const std::string& ptr) {
    ConfigReader r(v, ptr);
    std::string kind = r.require_str("law");
    LawSpec out;
    if (kind == "free-poisson") {
        out.free_poisson = true;
        out.c = r.require_rational("c");
        if (out.c <= 0) throw config_error(ptr + "/c", "rate must be positive");
    } else if (kind == "delta") {
        Rational at = r.require_rational("at");
        if (at < 0) throw config_error(ptr + "/at", "atom must be nonnegative");
        out.mu = transforms::DiscreteMeasure::point(at);
    } else if (kind == "discrete") {
        std::vector<Rational> atoms = r.require_rational_array("atoms", 1);
        std::vector<Rational> weights =
            normalize_weights(r.require_rational_array("weights", 1), ptr + "/weights");
        if (atoms.size() != weights.size())
            throw config_error(ptr + "/weights", "atoms and weights must have equal length");
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] < 0)
                throw config_error(ptr + "/atoms/" + std::to_string(i),
                                   "atoms must be nonnegative");
        try {
            out.mu = transforms::DiscreteMeasure(std::move(atoms), std::move(weights));
        } catch (const invalid_input& e) {
            throw config_error(ptr, e.what());
        }
    } else {
        throw config_error(ptr + "/law",
                           "unknown law '" + kind + "' (free-poisson, delta, discrete)");
    }
    r.finish();
    return out;
}

/// Law under `key`: either an object {"law": ...} or the shorthand string
/// "free-poisson" with the rate in a sibling key "c".
inline LawSpec parse_law(ConfigReader& cfg, const std::string& key) {
    const json& v = cfg.require_any(key);
    if (v.is_string()) {
        std::string kind = v.get<std::string>();
        if (kind != "free-poisson")
            throw config_error(cfg.pointer(key),
                               "string form supports only \"free-poisson\" (rate in key \"c\")");
        LawSpec out;
        out.free_poisson = true;
        out.c = cfg.require_rational("c");
        if (out.c <= 0) throw config_error(cfg.pointer("c"), "rate must be positive");
        return out;
    }
    if (v.is_object()) return law_from_object(v, cfg.pointer(key));
    throw config_error(cfg.pointer(key), "expected a law object or \"free-poisson\"");
}

} // namespace freeprob::cli
