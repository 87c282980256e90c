#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/measure.hpp"
#include "freeprob/rational.hpp"
#include "freeprob/rng.hpp"
#include "freeprob/transforms.hpp"

namespace freeprob::brown {

/// Radial quantile function of a rotation-invariant planar law: quantile(t)
/// is the radius below which mass t of the eigenvalue distribution sits,
/// for t in [0, 1]. For an R-diagonal element x the prediction is
///
///   quantile(t) = S_{xx*}(t - 1)^{-1/2},
///
/// with quantile(0) = mean_inverse(xx*)^{-1/2} (0 when that mean diverges,
/// in particular when xx* has an atom at 0) and quantile(1) = sqrt(m_1).
/// The corresponding planar measure is the push-forward of dt x uniform
/// angle under (t, theta) -> quantile(t) e^{i theta}.
struct RadialLaw {
    std::function<double(double)> quantile;
    std::string tag;
};

/// Quantile at t for xx* given as a discrete measure, evaluated through the
/// analytic S-transform machinery. Throws outside [0, 1].
inline double radial_quantile(const transforms::DiscreteMeasure& mu, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw invalid_input("radial_quantile: t must lie in [0, 1]");
    if (t >= 1.0) return std::sqrt(static_cast<double>(mu.moment(1)));
    if (t <= 0.0) {
        transforms::ExtendedRational mi = transforms::mean_inverse(mu);
        if (!mi.finite) return 0.0;
        return 1.0 / std::sqrt(mi.as_double());
    }
    // mass t below the quantile cannot exceed the mass of the kernel of x,
    // so the quantile stays 0 across the atom of xx* at 0
    const double w0 = transforms::weight_at_zero(mu);
    if (t <= w0) return 0.0;
    return 1.0 / std::sqrt(transforms::s_eval_negative(mu, t - 1.0));
}

inline RadialLaw radial_law(transforms::DiscreteMeasure mu, std::string tag = "") {
    auto held = std::make_shared<transforms::DiscreteMeasure>(std::move(mu));
    if (tag.empty()) tag = "xx* = " + held->str();
    return RadialLaw{[held](double t) { return radial_quantile(*held, t); }, std::move(tag)};
}

/// Closed-form radial law when xx* is free Poisson with rate c > 0:
/// S(z) = 1/(z + c) gives quantile(t) = sqrt(c - 1 + t), cut off at 0
/// across the atom of mass 1 - c when c < 1.
inline RadialLaw free_poisson_radial_law(const Rational& c) {
    if (c <= 0) throw invalid_input("free_poisson_radial_law: rate must be positive");
    const double cd = static_cast<double>(c);
    std::string tag = "xx* = free-poisson(" + c.str() + ")";
    auto q = [cd](double t) {
        if (!(t >= 0.0 && t <= 1.0))
            throw invalid_input("radial quantile: t must lie in [0, 1]");
        const double v = cd - 1.0 + t;
        return v <= 0.0 ? 0.0 : std::sqrt(v);
    };
    return RadialLaw{std::move(q), std::move(tag)};
}

/// Concentric radii R_0 <= R_1 <= ... <= R_k splitting the planar law into
/// annuli of the prescribed masses: R_0 = quantile(0), then one radius per
/// cumulative weight. Weights must be positive rationals summing to 1; the
/// cumulative points are formed exactly before conversion to double.
inline std::vector<double> annuli_radii(const RadialLaw& law, const std::vector<Rational>& weights) {
    if (weights.empty()) throw invalid_input("annuli_radii: need at least one weight");
    Rational total = 0;
    for (const Rational& w : weights) {
        if (w <= 0) throw invalid_input("annuli_radii: weights must be positive");
        total += w;
    }
    if (total != 1) throw invalid_input("annuli_radii: weights must sum to 1");
    std::vector<double> out;
    out.reserve(weights.size() + 1);
    out.push_back(law.quantile(0.0));
    Rational acc = 0;
    for (const Rational& w : weights) {
        acc += w;
        double t = static_cast<double>(acc);
        if (t > 1.0) t = 1.0;
        out.push_back(law.quantile(t));
    }
    return out;
}

inline std::vector<double> annuli_radii(const transforms::DiscreteMeasure& mu,
                                        const std::vector<Rational>& weights) {
    return annuli_radii(radial_law(mu), weights);
}

/// Draw `count` points of the planar law: radius quantile(U), independent
/// uniform angle. Each point consumes exactly two uniforms, radius first.
inline std::vector<std::complex<double>> sample_brown(const RadialLaw& law, int count,
                                                      rng::RngStream& gen) {
    if (count < 0) throw invalid_input("sample_brown: count must be >= 0");
    constexpr double kTwoPi = 6.283185307179586476925;
    std::vector<std::complex<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double r = law.quantile(gen.uniform());
        const double a = kTwoPi * gen.uniform();
        out.push_back(std::polar(r, a));
    }
    return out;
}

} // namespace freeprob::brown
