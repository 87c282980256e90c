#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "freeprob/freecum.hpp"
#include "freeprob/transforms.hpp"

using namespace freeprob;
using namespace freeprob::transforms;
using freecum::CumulantEngine;
using freecum::CumulantFunctional;
using freecum::Letter;
using freecum::MomentEngine;
using freecum::MomentFunctional;
using freecum::Word;

namespace {

using RSeries = TruncatedSeries<Rational>;

RSeries make(std::initializer_list<Rational> cs) { return RSeries(std::vector<Rational>(cs)); }

bool coeffs_equal(const RSeries& a, const std::vector<Rational>& expected) {
    if (a.coefficients().size() != expected.size()) return false;
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (a.coefficients()[i] != expected[i]) return false;
    return true;
}

RSeries identity_series(int order) {
    RSeries z = RSeries::zero(order);
    z.at(1) = 1;
    return z;
}

/// Lagrange inversion: for f = u + f_2 u^2 + ..., the compositional inverse
/// has g_n = [u^{n-1}] (1/n) (u/f(u))^n.
RSeries lagrange_revert(const RSeries& f) {
    const int n = f.order();
    REQUIRE(f[0] == 0);
    REQUIRE(f[1] == 1);
    std::vector<Rational> fu(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) fu[static_cast<std::size_t>(k)] = f[k + 1];
    RSeries u_over_f = RSeries(std::move(fu)).inverse();
    RSeries g = RSeries::zero(n);
    RSeries pow = u_over_f;
    g.at(1) = pow[0];
    for (int m = 2; m <= n; ++m) {
        pow = pow * u_over_f;
        g.at(m) = pow[m - 1] / m;
    }
    return g;
}

Rational random_rational(std::mt19937_64& rng, bool nonzero = false) {
    std::uniform_int_distribution<int> num(-6, 6);
    std::uniform_int_distribution<int> den(1, 5);
    int a = num(rng);
    while (nonzero && a == 0) a = num(rng);
    return Rational(a, den(rng));
}

/// Free cumulant functional of the single-generator law with the given
/// moments; stars ignored (self-adjoint variable).
CumulantFunctional<Rational> law_cumulants(const std::string& name, std::vector<Rational> m) {
    auto eng = std::make_shared<CumulantEngine<Rational>>(MomentFunctional<Rational>{
        {name},
        [m](const Word& w) { return m.at(w.size() - 1); },
        false,
        static_cast<int>(m.size()),
        false});
    return CumulantFunctional<Rational>{
        {name}, [eng](const Word& w) { return eng->cumulant(w); }, static_cast<int>(m.size())};
}

/// phi((xy)^n) for free x ~ mu, y ~ nu: the moments of the multiplicative
/// convolution, computed by the noncrossing mixed-moment expansion with no
/// S-transform involved.
std::vector<Rational> mult_moments_oracle(const std::vector<Rational>& mu,
                                          const std::vector<Rational>& nu, int order) {
    auto joint = freecum::joint_free_functional<Rational>({law_cumulants("x", mu), law_cumulants("y", nu)});
    MomentEngine<Rational> eng(joint);
    int xg = -1, yg = -1;
    for (std::size_t i = 0; i < joint.alphabet.size(); ++i) {
        if (joint.alphabet[i] == "x") xg = static_cast<int>(i);
        if (joint.alphabet[i] == "y") yg = static_cast<int>(i);
    }
    REQUIRE(xg >= 0);
    REQUIRE(yg >= 0);
    std::vector<Rational> out;
    for (int n = 1; n <= order; ++n) {
        Word w;
        for (int i = 0; i < n; ++i) {
            w.push_back(Letter{xg, false});
            w.push_back(Letter{yg, false});
        }
        out.push_back(eng.moment(w));
    }
    return out;
}

std::vector<Rational> point_mass_moments(const Rational& c, int order) {
    std::vector<Rational> m(static_cast<std::size_t>(order));
    Rational p = 1;
    for (int k = 0; k < order; ++k) {
        p *= c;
        m[static_cast<std::size_t>(k)] = p;
    }
    return m;
}

DiscreteMeasure two_atom_half() { return DiscreteMeasure({1, 2}, {Rational(1, 2), Rational(1, 2)}); }

} // namespace

TEST_CASE("truncated series arithmetic and truncation") {
    RSeries a = make({1, 2, 3});
    RSeries b = make({Rational(1, 2), 0, -1, 5});
    RSeries s = a + b;
    CHECK(coeffs_equal(s, {Rational(3, 2), 2, 2}));
    RSeries p = a * b;
    // (1 + 2z + 3z^2)(1/2 - z^2 + ...) truncated at z^2
    CHECK(coeffs_equal(p, {Rational(1, 2), 1, Rational(1, 2)}));
    CHECK(coeffs_equal(a - a, {0, 0, 0}));
    CHECK(coeffs_equal(Rational(2) * a, {2, 4, 6}));
    CHECK(coeffs_equal(a.truncated(1), {1, 2}));
    CHECK(coeffs_equal(a.truncated(4), {1, 2, 3, 0, 0}));
    CHECK_THROWS_AS(RSeries(std::vector<Rational>{}), invalid_input);
    CHECK_THROWS_AS(a[3], invalid_input);
}

TEST_CASE("series inverse against direct product") {
    RSeries a = make({2, -1, Rational(1, 3), 0, 4, -2});
    RSeries inv = a.inverse();
    RSeries prod = a * inv;
    CHECK(prod[0] == 1);
    for (int k = 1; k <= prod.order(); ++k) CHECK(prod[k] == 0);
    CHECK_THROWS_AS(make({0, 1}).inverse(), invalid_input);

    // geometric series: 1/(1 - z)
    RSeries geom = make({1, -1, 0, 0, 0, 0}).inverse();
    CHECK(coeffs_equal(geom, {1, 1, 1, 1, 1, 1}));
}

TEST_CASE("series composition basics") {
    // f(z) = 1/(1-z), g(z) = z + z^2:  f(g) = 1 + (z+z^2) + (z+z^2)^2 + ...
    RSeries f = make({1, 1, 1, 1, 1});
    RSeries g = make({0, 1, 1, 0, 0});
    RSeries h = f.compose(g);
    // coefficients: 1, 1, 2, 3, 5 (Fibonacci, since f(g) = 1/(1-z-z^2))
    CHECK(coeffs_equal(h, {1, 1, 2, 3, 5}));
    CHECK_THROWS_AS(f.compose(make({1, 1})), invalid_input);
}

TEST_CASE("series reversion frozen cases") {
    CHECK(coeffs_equal(identity_series(5).revert(), {0, 1, 0, 0, 0, 0}));

    // z/(1-z) -> z/(1+z)
    RSeries f = make({0, 1, 1, 1, 1, 1, 1});
    CHECK(coeffs_equal(f.revert(), {0, 1, -1, 1, -1, 1, -1}));

    // z + z^2 -> alternating signed Catalan coefficients
    RSeries p = make({0, 1, 1, 0, 0, 0, 0, 0});
    CHECK(coeffs_equal(p.revert(), {0, 1, -1, 2, -5, 14, -42, 132}));

    CHECK_THROWS_AS(make({1, 1}).revert(), invalid_input);
    CHECK_THROWS_AS(make({0, 0, 1}).revert(), invalid_input);
}

TEST_CASE("series reversion equals Lagrange inversion on random inputs") {
    std::mt19937_64 rng(411);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Rational> cs{0, 1};
        for (int k = 2; k <= 8; ++k) cs.push_back(random_rational(rng));
        RSeries f(cs);
        CHECK(coeffs_equal(f.revert(), lagrange_revert(f).coefficients()));
    }
}

TEST_CASE("series reversion compose-and-check with general linear term") {
    std::mt19937_64 rng(412);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Rational> cs{0, random_rational(rng, true)};
        for (int k = 2; k <= 7; ++k) cs.push_back(random_rational(rng));
        RSeries f(cs);
        RSeries g = f.revert();
        RSeries fg = f.compose(g);
        RSeries gf = g.compose(f);
        for (int k = 0; k <= 7; ++k) {
            CHECK(fg[k] == (k == 1 ? 1 : 0));
            CHECK(gf[k] == (k == 1 ? 1 : 0));
        }
    }
}

TEST_CASE("r_series frozen laws") {
    // semicircular: R(z) = z
    std::vector<Rational> semi{0, 1, 0, 2, 0, 5, 0, 14};
    CHECK(coeffs_equal(r_series(semi), {0, 1, 0, 0, 0, 0, 0, 0}));

    // free Poisson c: all cumulants equal c
    for (Rational c : {Rational(1), Rational(2), Rational(5, 3)}) {
        auto m = freecum::free_poisson_moments<Rational>(c, 7);
        CHECK(coeffs_equal(r_series(m), {c, c, c, c, c, c, c}));
    }

    // point mass: R(z) = lambda
    CHECK(coeffs_equal(r_series(point_mass_moments(Rational(-3, 2), 6)),
                       {Rational(-3, 2), 0, 0, 0, 0, 0}));
}

TEST_CASE("r_series matches the partition-sum cumulants") {
    std::mt19937_64 rng(413);
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<Rational> m;
        for (int k = 1; k <= 8; ++k) m.push_back(random_rational(rng));
        CumulantFunctional<Rational> kf = law_cumulants("a", m);
        RSeries r = r_series(m);
        for (int k = 1; k <= 8; ++k) {
            Word w(static_cast<std::size_t>(k), Letter{0, false});
            CHECK(kf.eval(w) == r[k - 1]);
        }
    }
}

TEST_CASE("s_series frozen laws") {
    // point mass: S identically 1/lambda
    CHECK(coeffs_equal(s_series(point_mass_moments(Rational(4), 6)),
                       {Rational(1, 4), 0, 0, 0, 0, 0}));

    // free Poisson c: S(z) = 1/(z+c)
    for (Rational c : {Rational(1), Rational(2)}) {
        auto m = freecum::free_poisson_moments<Rational>(c, 8);
        RSeries s = s_series(m);
        Rational sign = 1;
        Rational cp = c;
        for (int k = 0; k <= 7; ++k) {
            CHECK(s[k] == sign / cp);
            sign = -sign;
            cp *= c;
        }
    }

    // S(0) = 1/m1 always
    std::mt19937_64 rng(414);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Rational> m{random_rational(rng, true)};
        for (int k = 2; k <= 5; ++k) m.push_back(random_rational(rng));
        CHECK(s_series(m)[0] == 1 / m[0]);
    }
    CHECK_THROWS_AS(s_series(std::vector<Rational>{0, 1}), invalid_input);
}

TEST_CASE("zS(z) is the compositional inverse of zR(z)") {
    std::vector<std::vector<Rational>> laws{
        freecum::free_poisson_moments<Rational>(Rational(1), 8),
        freecum::free_poisson_moments<Rational>(Rational(2), 8),
        two_atom_half().moments(8),
    };
    for (const auto& m : laws) {
        RSeries zr = shift_up(r_series(m));
        RSeries zs = shift_up(s_series(m));
        RSeries comp = zr.compose(zs);
        for (int k = 0; k <= 8; ++k) CHECK(comp[k] == (k == 1 ? 1 : 0));
        CHECK(coeffs_equal(zr.revert(), zs.coefficients()));
    }
}

TEST_CASE("moments_from_s inverts s_series") {
    std::vector<std::vector<Rational>> laws{
        freecum::free_poisson_moments<Rational>(Rational(2), 6),
        two_atom_half().moments(6),
        point_mass_moments(Rational(3, 2), 6),
    };
    for (const auto& m : laws) {
        auto back = moments_from_s(s_series(m));
        CHECK(back == m);
    }
}

TEST_CASE("free multiplicative convolution of point masses and identity element") {
    auto d2 = point_mass_moments(Rational(2), 6);
    auto d3 = point_mass_moments(Rational(3), 6);
    auto prod = free_mult_convolution(d2, d3, 3);
    CHECK(prod == std::vector<Rational>{6, 36, 216});

    auto fp2 = freecum::free_poisson_moments<Rational>(Rational(2), 6);
    auto with_one = free_mult_convolution(fp2, point_mass_moments(Rational(1), 6), 6);
    CHECK(with_one == fp2);
}

TEST_CASE("free multiplicative convolution matches the mixed-moment oracle") {
    auto mp1 = freecum::free_poisson_moments<Rational>(Rational(1), 6);
    auto via_s = free_mult_convolution(mp1, mp1, 6);
    CHECK(via_s[0] == 1);
    CHECK(via_s[1] == 3);
    CHECK(via_s == mult_moments_oracle(mp1, mp1, 6));

    auto two = two_atom_half().moments(6);
    CHECK(free_mult_convolution(two, two, 6) == mult_moments_oracle(two, two, 6));

    auto d2 = point_mass_moments(Rational(2), 6);
    CHECK(free_mult_convolution(two, d2, 6) == mult_moments_oracle(two, d2, 6));
}

TEST_CASE("discrete measure validation and exact moments") {
    DiscreteMeasure mu = two_atom_half();
    CHECK(mu.moment(0) == 1);
    CHECK(mu.moment(1) == Rational(3, 2));
    CHECK(mu.moment(2) == Rational(5, 2));
    CHECK(mu.moment(3) == Rational(9, 2));
    CHECK(mu.moments(2) == std::vector<Rational>{Rational(3, 2), Rational(5, 2)});

    // duplicates merge, atoms sort
    DiscreteMeasure dup({2, 1, 2}, {Rational(1, 4), Rational(1, 2), Rational(1, 4)});
    CHECK(dup.support_size() == 2);
    CHECK(dup.atoms == std::vector<Rational>{1, 2});
    CHECK(dup.weights == std::vector<Rational>{Rational(1, 2), Rational(1, 2)});

    CHECK_THROWS_AS(DiscreteMeasure({1}, {Rational(1, 2)}), invalid_input);
    CHECK_THROWS_AS(DiscreteMeasure({1, 2}, {Rational(3, 2), Rational(-1, 2)}), invalid_input);
    CHECK_THROWS_AS(DiscreteMeasure({}, {}), invalid_input);

    DiscreteMeasure inv = mu.inverse_measure();
    CHECK(inv.atoms == std::vector<Rational>{Rational(1, 2), 1});
    CHECK(inv.weights == std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
    DiscreteMeasure with_zero({0, 1}, {Rational(1, 4), Rational(3, 4)});
    CHECK(with_zero.has_atom_at_zero());
    CHECK_THROWS_AS(with_zero.inverse_measure(), invalid_input);
}

TEST_CASE("psi evaluation") {
    DiscreteMeasure da = DiscreteMeasure::point(Rational(3));
    CHECK(psi_eval(da, 0.0) == 0.0);
    CHECK(psi_eval(da, -1.0) == Catch::Approx(-3.0 / 4.0).epsilon(1e-14));
    // psi(u) -> -1 as u -> -inf when there is no atom at 0
    DiscreteMeasure mu = two_atom_half();
    CHECK(psi_eval(mu, -1e9) == Catch::Approx(-1.0).margin(1e-8));
    CHECK_THROWS_AS(psi_eval(da, 1.0 / 3.0), invalid_input);
    // atom at 0 contributes nothing: range floor rises to w0 - 1
    DiscreteMeasure z({0, 2}, {Rational(1, 4), Rational(3, 4)});
    CHECK(psi_eval(z, -1e9) == Catch::Approx(-0.75).margin(1e-8));
}

TEST_CASE("psi inversion round trip and domain guards") {
    DiscreteMeasure mu = two_atom_half();
    for (double w : {-0.99, -0.9, -0.5, -0.1, -0.01, -1e-4}) {
        double t = psi_inverse(mu, w);
        CHECK(t < 0.0);
        CHECK(psi_eval(mu, t) == Catch::Approx(w).margin(2e-12));
    }
    CHECK(psi_inverse(mu, 0.0) == 0.0);
    CHECK_THROWS_AS(psi_inverse(mu, -1.0), invalid_input);
    CHECK_THROWS_AS(psi_inverse(mu, 0.5), invalid_input);
    DiscreteMeasure z({0, 2}, {Rational(1, 4), Rational(3, 4)});
    CHECK_THROWS_AS(psi_inverse(z, -0.8), invalid_input);
    CHECK(psi_eval(z, psi_inverse(z, -0.7)) == Catch::Approx(-0.7).margin(2e-12));
}

TEST_CASE("numeric S on point masses and near zero") {
    DiscreteMeasure da = DiscreteMeasure::point(Rational(5, 2));
    for (double z : {-0.9, -0.5, -0.2, -0.05})
        CHECK(s_eval_negative(da, z) == Catch::Approx(0.4).epsilon(1e-10));

    // S(0-) -> 1/m1 = 2/3
    DiscreteMeasure mu = two_atom_half();
    CHECK(s_eval_negative(mu, -1e-6) == Catch::Approx(2.0 / 3.0).margin(1e-5));
    CHECK_THROWS_AS(s_eval_negative(mu, 0.0), invalid_input);
    CHECK_THROWS_AS(s_eval_negative(mu, -1.0), invalid_input);
}

TEST_CASE("numeric S agrees with the series expansion at small arguments") {
    DiscreteMeasure mu = two_atom_half();
    RSeries s = s_series(mu.moments(8));
    for (double z : {-0.05, -0.1}) {
        double series_val = 0.0, zp = 1.0;
        for (int k = 0; k <= s.order(); ++k) {
            series_val += static_cast<double>(s[k]) * zp;
            zp *= z;
        }
        CHECK(s_eval_negative(mu, z) == Catch::Approx(series_val).margin(1e-6));
    }
}

TEST_CASE("mean of the inverse measure and the S(-1) limit") {
    DiscreteMeasure mu = two_atom_half();
    ExtendedRational mi = mean_inverse(mu);
    REQUIRE(mi.finite);
    CHECK(mi.value == Rational(3, 4));
    CHECK(s_at_minus_one_limit(mu) == Catch::Approx(0.75).margin(1e-8));

    DiscreteMeasure da = DiscreteMeasure::point(Rational(4));
    CHECK(mean_inverse(da).value == Rational(1, 4));
    CHECK(s_at_minus_one_limit(da) == Catch::Approx(0.25).margin(1e-10));

    DiscreteMeasure z({0, 2}, {Rational(1, 4), Rational(3, 4)});
    ExtendedRational inf = mean_inverse(z);
    CHECK_FALSE(inf.finite);
    CHECK(std::isinf(inf.as_double()));
    CHECK(std::isinf(s_at_minus_one_limit(z)));

    // the numeric limit also matches on a lopsided measure
    DiscreteMeasure nu({Rational(1, 2), 3, 5}, {Rational(1, 5), Rational(2, 5), Rational(2, 5)});
    CHECK(s_at_minus_one_limit(nu) ==
          Catch::Approx(static_cast<double>(mean_inverse(nu).value)).margin(1e-8));
}

TEST_CASE("inversion identities for strictly positive measures") {
    std::vector<DiscreteMeasure> measures{
        two_atom_half(),
        DiscreteMeasure({Rational(1, 2), Rational(3, 2)}, {Rational(1, 3), Rational(2, 3)}),
        DiscreteMeasure({Rational(1, 4), 1, 5}, {Rational(1, 5), Rational(2, 5), Rational(2, 5)}),
    };
    for (const auto& mu : measures) {
        DiscreteMeasure inv = mu.inverse_measure();
        for (double t : {-0.1, -0.7, -2.0, -13.5}) {
            CHECK(psi_eval(inv, t) + psi_eval(mu, 1.0 / t) == Catch::Approx(-1.0).margin(1e-10));
        }
        for (int i = 1; i <= 9; ++i) {
            double s = 0.1 * i;
            double lhs = s_eval_negative(mu, -s) * s_eval_negative(inv, s - 1.0);
            CHECK(lhs == Catch::Approx(1.0).margin(1e-8));
        }
    }
}

TEST_CASE("S compression by scaling the argument") {
    auto fp2 = freecum::free_poisson_moments<Rational>(Rational(2), 6);
    RSeries s = s_series(fp2);
    CHECK(coeffs_equal(compress_s(s, Rational(1)), s.coefficients()));

    // free Poisson c compressed by 1/2: 1/(z/2 + c)
    RSeries half = compress_s(s, Rational(1, 2));
    Rational sign = 1, cp = 2, pw = 1;
    for (int k = 0; k <= 5; ++k) {
        CHECK(half[k] == sign * pw / cp);
        sign = -sign;
        cp *= 2;
        pw /= 2;
    }

    // consistency: scaling cumulants kappa_n by s^{n-1} compresses S the same way
    Rational sc(1, 3);
    CumulantFunctional<Rational> scaled{
        {"a"},
        [sc](const Word& w) {
            Rational p = 2;
            for (std::size_t i = 1; i < w.size(); ++i) p *= sc;
            return p;
        },
        6};
    MomentEngine<Rational> eng(scaled);
    std::vector<Rational> m;
    for (int k = 1; k <= 6; ++k) m.push_back(eng.moment(Word(static_cast<std::size_t>(k), Letter{0, false})));
    CHECK(coeffs_equal(compress_s(s, sc), s_series(m).coefficients()));

    // evaluator form
    DiscreteMeasure mu = two_atom_half();
    auto base = [&mu](double z) { return s_eval_negative(mu, z); };
    auto compressed = compress_s(std::function<double(double)>(base), 0.5);
    CHECK(compressed(-0.6) == Catch::Approx(s_eval_negative(mu, -0.3)).epsilon(1e-12));
    CHECK_THROWS_AS(compress_s(std::function<double(double)>(base), 1.5), invalid_input);
    CHECK_THROWS_AS(compress_s(std::function<double(double)>(base), 0.0), invalid_input);
}

TEST_CASE("numeric S of a quadrature surrogate tracks the closed form") {
    // Gauss nodes/weights matched to the first 12 moments of the free
    // Poisson(1) law (Catalan numbers), via the Hankel Jacobi construction.
    const int k = 6;
    std::vector<double> mom{1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786};
    Eigen::MatrixXd H(k, k), Hs(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            H(i, j) = mom[static_cast<std::size_t>(i + j)];
            Hs(i, j) = mom[static_cast<std::size_t>(i + j + 1)];
        }
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    REQUIRE(llt.info() == Eigen::Success);
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd J = L.triangularView<Eigen::Lower>().solve(Hs);
    J = L.triangularView<Eigen::Lower>().solve(J.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (J + J.transpose()));
    REQUIRE(es.info() == Eigen::Success);

    std::vector<Rational> atoms, weights;
    Rational acc = 0;
    const BigInt scale = 1000000000000LL;
    for (int i = 0; i < k; ++i) {
        double a = es.eigenvalues()(i);
        double w = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
        REQUIRE(a > 0.0);
        atoms.push_back(Rational(BigInt(std::llround(a * 1e12)), scale));
        if (i + 1 < k) {
            Rational wr(BigInt(std::llround(w * 1e12)), scale);
            weights.push_back(wr);
            acc += wr;
        } else {
            weights.push_back(1 - acc);
        }
    }
    DiscreteMeasure surrogate(atoms, weights);

    // check the moment match actually happened
    for (int n = 1; n <= 2 * k - 1; ++n)
        CHECK(static_cast<double>(surrogate.moment(n)) ==
              Catch::Approx(mom[static_cast<std::size_t>(n)]).epsilon(1e-6));

    // S of free Poisson(1) is 1/(1+z); the surrogate should track it closely
    // away from the endpoints, and more closely the nearer to 0 we look
    std::vector<double> errs;
    for (double z : {-0.5, -0.3, -0.1}) {
        double err = std::fabs(s_eval_negative(surrogate, z) - 1.0 / (1.0 + z));
        CHECK(err <= 5e-3);
        errs.push_back(err);
    }
    CHECK(errs[2] < errs[0]);
}
