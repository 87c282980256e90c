#include <cmath>
#include <complex>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "freeprob/randmat.hpp"
#include "freeprob/trimodel.hpp"

using freeprob::invalid_input;
using freeprob::rng::RngStream;
using namespace freeprob::trimodel;

namespace {

CMat random_pd(int n, RngStream& gen) {
    CMat g = freeprob::randmat::ginibre(n, gen);
    CMat y = g * g.adjoint() + 0.1 * CMat::Identity(n, n);
    return (y + CMat(y.adjoint())) / 2.0;
}

/// Largest modulus over the entries strictly below the block diagonal.
double below_block_max(const CMat& x, const BlockSpec& blocks) {
    double mx = 0.0;
    for (int bi = 0; bi < blocks.count(); ++bi) {
        const int r0 = blocks.offset(bi);
        const int rows = blocks.sizes[static_cast<std::size_t>(bi)];
        for (int r = r0; r < r0 + rows; ++r)
            for (int c = 0; c < r0; ++c) mx = std::max(mx, std::abs(x(r, c)));
    }
    return mx;
}

} // namespace

TEST_CASE("block spec validates and exposes offsets") {
    BlockSpec b({3, 1, 2});
    REQUIRE(b.count() == 3);
    REQUIRE(b.total() == 6);
    REQUIRE(b.offset(0) == 0);
    REQUIRE(b.offset(1) == 3);
    REQUIRE(b.offset(2) == 4);
    REQUIRE_THROWS_AS(BlockSpec({}), invalid_input);
    REQUIRE_THROWS_AS(BlockSpec({2, 0}), invalid_input);
}

TEST_CASE("hermitian psd square root") {
    CMat d = CMat::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    CMat r = hermitian_psd_sqrt(d);
    REQUIRE(std::abs(r(0, 0) - 2.0) < 1e-12);
    REQUIRE(std::abs(r(1, 1) - 3.0) < 1e-12);
    REQUIRE(std::abs(r(0, 1)) < 1e-12);

    REQUIRE((hermitian_psd_sqrt(CMat::Identity(5, 5)) - CMat::Identity(5, 5)).norm() < 1e-12);

    RngStream gen(51, 0);
    for (int it = 0; it < 20; ++it) {
        const int n = 2 + static_cast<int>(gen.next_u64() % 5);
        CMat g = freeprob::randmat::ginibre(n, gen);
        CMat y = g * g.adjoint();
        y = (y + CMat(y.adjoint())) / 2.0;
        CMat s = hermitian_psd_sqrt(y);
        REQUIRE((s - CMat(s.adjoint())).norm() < 1e-12);
        REQUIRE((s * s - y).norm() <= 1e-10 * std::max(1.0, y.norm()));
    }

    CMat bad = CMat::Zero(2, 2);
    bad(0, 1) = 1.0;
    REQUIRE_THROWS_AS(hermitian_psd_sqrt(bad), invalid_input);
    CMat neg = CMat::Zero(2, 2);
    neg(0, 0) = 1.0;
    neg(1, 1) = -1.0;
    REQUIRE_THROWS_AS(hermitian_psd_sqrt(neg), invalid_input);
}

TEST_CASE("triangular square root reproduces the hand case") {
    CMat y = CMat::Zero(2, 2);
    y(0, 0) = 2.0;
    y(0, 1) = 1.0;
    y(1, 0) = 1.0;
    y(1, 1) = 1.0;
    CMat x = upper_triangular_sqrt(y, BlockSpec({1, 1}));
    REQUIRE(std::abs(x(0, 0) - 1.0) < 1e-12);
    REQUIRE(std::abs(x(0, 1) - 1.0) < 1e-12);
    REQUIRE(std::abs(x(1, 1) - 1.0) < 1e-12);
    REQUIRE(x(1, 0) == std::complex<double>(0.0, 0.0));

    REQUIRE((upper_triangular_sqrt(CMat::Identity(4, 4), BlockSpec({2, 2})) -
             CMat::Identity(4, 4))
                .norm() < 1e-12);
}

TEST_CASE("block diagonal input gives block diagonal hermitian roots") {
    RngStream gen(52, 0);
    CMat a = random_pd(2, gen);
    CMat b = random_pd(3, gen);
    CMat y = CMat::Zero(5, 5);
    y.topLeftCorner(2, 2) = a;
    y.bottomRightCorner(3, 3) = b;
    BlockSpec blocks({2, 3});
    CMat x = upper_triangular_sqrt(y, blocks);
    REQUIRE((x.topLeftCorner(2, 2) - hermitian_psd_sqrt(a)).norm() < 1e-10);
    REQUIRE((x.bottomRightCorner(3, 3) - hermitian_psd_sqrt(b)).norm() < 1e-10);
    REQUIRE(x.topRightCorner(2, 3).norm() < 1e-10);
    REQUIRE(below_block_max(x, blocks) == 0.0);
}

TEST_CASE("triangular square root across block shapes") {
    const std::vector<std::vector<int>> shapes = {{1, 1}, {2, 2, 2}, {3, 1, 2}};
    RngStream gen(53, 0);
    for (const auto& sizes : shapes) {
        BlockSpec blocks{sizes};
        for (int it = 0; it < 50; ++it) {
            CMat y = random_pd(blocks.total(), gen);
            CMat x = upper_triangular_sqrt(y, blocks);
            REQUIRE((x * x.adjoint() - y).norm() <= 1e-10 * y.norm());
            REQUIRE(below_block_max(x, blocks) == 0.0);
            // diagonal blocks are the hermitian psd roots of the recursion
            for (int bi = 0; bi < blocks.count(); ++bi) {
                const int o = blocks.offset(bi);
                const int k = blocks.sizes[static_cast<std::size_t>(bi)];
                CMat db = x.block(o, o, k, k);
                REQUIRE((db - CMat(db.adjoint())).norm() < 1e-10);
            }
        }
    }
}

TEST_CASE("triangular square root rejects bad input") {
    BlockSpec blocks({1, 1});
    CMat nh = CMat::Zero(2, 2);
    nh(0, 1) = 1.0;
    REQUIRE_THROWS_AS(upper_triangular_sqrt(nh, blocks), invalid_input);

    CMat sing = CMat::Zero(2, 2);
    sing(0, 0) = 1.0;
    sing(1, 1) = 1e-14;
    REQUIRE_THROWS_AS(upper_triangular_sqrt(sing, blocks), invalid_input);

    CMat neg = CMat::Zero(2, 2);
    neg(0, 0) = 1.0;
    neg(1, 1) = -2.0;
    REQUIRE_THROWS_AS(upper_triangular_sqrt(neg, blocks), invalid_input);

    REQUIRE_THROWS_AS(upper_triangular_sqrt(CMat::Identity(3, 3), blocks), invalid_input);
}

TEST_CASE("circular free poisson samples have the right moments") {
    RngStream bad(54, 0);
    REQUIRE_THROWS_AS(circular_free_poisson_sample(0.99, 8, bad), invalid_input);

    const int m = 64, trials = 20;
    std::vector<double> m1_1, m2_1, m1_2;
    for (int t = 0; t < trials; ++t) {
        RngStream gen(55, static_cast<std::uint64_t>(t));
        CMat x = circular_free_poisson_sample(1.0, m, gen);
        m1_1.push_back(x.squaredNorm() / m);
        CMat z = x.adjoint() * x;
        m2_1.push_back(z.squaredNorm() / m);
        RngStream gen2(56, static_cast<std::uint64_t>(t));
        CMat x2 = circular_free_poisson_sample(2.0, m, gen2);
        m1_2.push_back(x2.squaredNorm() / m);
    }
    auto mean_se = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        return std::make_pair(mean, std::sqrt(var / static_cast<double>(v.size())));
    };
    auto [mu11, se11] = mean_se(m1_1);
    auto [mu21, se21] = mean_se(m2_1);
    auto [mu12, se12] = mean_se(m1_2);
    REQUIRE(std::fabs(mu11 - 1.0) <= 3.0 * se11 + 0.01);
    REQUIRE(std::fabs(mu21 - 2.0) <= 3.0 * se21 + 0.05);
    REQUIRE(std::fabs(mu12 - 2.0) <= 3.0 * se12 + 0.02);

    // moments of xx* are exactly invariant under a fixed left unitary
    RngStream gen(57, 0);
    CMat x = circular_free_poisson_sample(1.0, 16, gen);
    RngStream vg(57, 99);
    CMat v = freeprob::randmat::haar_unitary(16, vg);
    CMat vx = v * x;
    REQUIRE(std::fabs(vx.squaredNorm() - x.squaredNorm()) < 1e-8);
    CMat z1 = x.adjoint() * x;
    CMat z2 = vx.adjoint() * vx;
    REQUIRE(std::fabs(z1.squaredNorm() - z2.squaredNorm()) < 1e-8);
}

TEST_CASE("dh model block structure and degenerate case") {
    RngStream gen(58, 0);
    CMat x = dh_model_sample(1.0, 3, 4, gen);
    REQUIRE(x.rows() == 12);
    BlockSpec blocks({4, 4, 4});
    REQUIRE(below_block_max(x, blocks) == 0.0);
    double above = x.topRightCorner(4, 8).norm();
    REQUIRE(above > 0.0);

    RngStream g1(59, 0), g2(59, 0);
    CMat one = dh_model_sample(2.0, 1, 8, g1);
    CMat cfp = circular_free_poisson_sample(2.0, 8, g2);
    REQUIRE((one - cfp).norm() == 0.0);
}

TEST_CASE("dh verification report") {
    DhVerifyReport rep = dh_verify(1.0, 2, 64, 10, 7);
    REQUIRE(rep.trials == 10);
    REQUIRE(rep.lemma_checked);
    REQUIRE(rep.lemma_pass);
    REQUIRE(rep.moments_pass);
    REQUIRE(rep.pass);
    const double want1[] = {1.0, 2.0, 5.0, 14.0};
    for (int k = 0; k < 4; ++k) {
        REQUIRE(rep.target[static_cast<std::size_t>(k)] == want1[k]);
        REQUIRE(std::fabs(rep.empirical[static_cast<std::size_t>(k)] - want1[k]) < 1.0);
    }

    // identical seed reproduces the report bit for bit
    DhVerifyReport again = dh_verify(1.0, 2, 64, 10, 7);
    REQUIRE(again.empirical == rep.empirical);
    REQUIRE(again.se == rep.se);

    DhVerifyReport rep2 = dh_verify(2.0, 2, 48, 10, 7);
    const double want2[] = {2.0, 6.0, 22.0, 90.0};
    for (int k = 0; k < 4; ++k)
        REQUIRE(rep2.target[static_cast<std::size_t>(k)] == want2[k]);
    REQUIRE(rep2.pass);

    REQUIRE_THROWS_AS(dh_verify(1.0, 2, 8, 1, 7), invalid_input);
}

TEST_CASE("dh second moment error shrinks when m doubles") {
    // The estimator's per-trial error is fluctuation dominated (the mean of
    // tr (xx*)^2 carries no measurable finite-m bias for this ensemble), so
    // convergence shows up in the averaged absolute error, which halves per
    // doubling of m.
    auto mean_abs_err = [](int m) {
        const int trials = 20;
        double sum = 0.0;
        for (int t = 0; t < trials; ++t) {
            RngStream gen(11, static_cast<std::uint64_t>(t));
            CMat x = dh_model_sample(1.0, 2, m, gen);
            CMat z = x.adjoint() * x;
            sum += std::fabs(z.squaredNorm() / static_cast<double>(2 * m) - 2.0);
        }
        return sum / trials;
    };
    REQUIRE(mean_abs_err(256) < mean_abs_err(128));
}
