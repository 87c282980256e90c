#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "freeprob/ncpart.hpp"
#include "oracles.hpp"

using namespace freeprob;
using namespace freeprob::ncpart;

TEST_CASE("SetPartition canonicalizes and validates") {
    SetPartition p(BlockList{{3, 1}, {2}});
    REQUIRE(p.blocks() == BlockList{{1, 3}, {2}});
    REQUIRE(p.ground() == std::vector<int>{1, 2, 3});
    REQUIRE(p.num_blocks() == 2);
    REQUIRE(p.block_of(3) == 0);
    REQUIRE(p.block_of(7) == -1);

    REQUIRE_THROWS_AS(SetPartition(BlockList{{1}, {}}), invalid_input);
    REQUIRE_THROWS_AS(SetPartition(BlockList{{1, 2}, {2, 3}}), invalid_input);
    REQUIRE_THROWS_AS(SetPartition(BlockList{{1, 1}}), invalid_input);
}

TEST_CASE("crossing detection") {
    REQUIRE(is_noncrossing(SetPartition(BlockList{{1, 2}, {3, 4}})));
    REQUIRE(is_noncrossing(SetPartition(BlockList{{1, 4}, {2, 3}})));
    REQUIRE_FALSE(is_noncrossing(SetPartition(BlockList{{1, 3}, {2, 4}})));
    REQUIRE(is_noncrossing(SetPartition(BlockList{{1, 5, 6}, {2, 3, 4}})));
    REQUIRE_FALSE(is_noncrossing(SetPartition(BlockList{{1, 3, 5}, {2, 6}, {4}})));
    // non-contiguous ground sets work the same way
    REQUIRE_FALSE(is_noncrossing(SetPartition(BlockList{{10, 30}, {20, 40}})));
}

TEST_CASE("noncrossing counts are Catalan numbers") {
    const long expected[] = {1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796};
    for (int n = 0; n <= 10; ++n) {
        auto parts = enumerate_noncrossing(n);
        REQUIRE(parts.size() == static_cast<std::size_t>(expected[n]));
        REQUIRE(catalan(n) == BigInt(expected[n]));
    }
}

TEST_CASE("enumeration matches filtered set partitions up to n = 8") {
    for (int n = 0; n <= 8; ++n) {
        auto fast = enumerate_noncrossing(n);
        auto slow = oracle::nc_by_filter(range_ground(n));
        std::set<SetPartition> a(fast.begin(), fast.end());
        std::set<SetPartition> b(slow.begin(), slow.end());
        REQUIRE(a == b);
        REQUIRE(fast.size() == a.size()); // no duplicates from the generator
    }
}

TEST_CASE("enumeration is deterministic and cap-guarded") {
    auto first = enumerate_noncrossing(6);
    auto second = enumerate_noncrossing(6);
    REQUIRE(first == second);
    REQUIRE_THROWS_AS(enumerate_noncrossing(15), resource_limit);
    REQUIRE_THROWS_AS(enumerate_noncrossing(5, 4), resource_limit);
}

TEST_CASE("enumeration over arbitrary ground sets") {
    auto parts = enumerate_noncrossing(std::vector<int>{2, 5, 9});
    REQUIRE(parts.size() == 5);
    for (const auto& p : parts) REQUIRE(p.ground() == std::vector<int>{2, 5, 9});
}

TEST_CASE("refinement order") {
    SetPartition fine(BlockList{{1}, {2}, {3, 4}});
    SetPartition coarse(BlockList{{1, 2}, {3, 4}});
    REQUIRE(refines(fine, coarse));
    REQUIRE_FALSE(refines(coarse, fine));
    REQUIRE(refines(fine, fine));
    REQUIRE_THROWS_AS(refines(fine, SetPartition(BlockList{{1, 2, 3}})), invalid_input);
}

TEST_CASE("nc_join basics") {
    // {{1,2},{3},{4}} v {{2,3},{1},{4}} = {{1,2,3},{4}}
    SetPartition p(BlockList{{1, 2}, {3}, {4}});
    SetPartition q(BlockList{{2, 3}, {1}, {4}});
    REQUIRE(nc_join(p, q) == SetPartition(BlockList{{1, 2, 3}, {4}}));

    // blocks {1,3} and {2,4} would cross, so joining them forces one block
    SetPartition a(BlockList{{1, 3}, {2}, {4}});
    SetPartition b(BlockList{{2, 4}, {1}, {3}});
    REQUIRE(nc_join(a, b) == full_partition({1, 2, 3, 4}));

    REQUIRE(nc_join(p, p) == p);
    REQUIRE_THROWS_AS(nc_join(p, SetPartition(BlockList{{1, 2}, {3}})), invalid_input);
    REQUIRE_THROWS_AS(
        nc_join(SetPartition(BlockList{{1, 3}, {2, 4}}), singleton_partition({1, 2, 3, 4})),
        invalid_input);
}

TEST_CASE("nc_join agrees with least-upper-bound search, n <= 5") {
    for (int n = 1; n <= 5; ++n) {
        auto all = enumerate_noncrossing(n);
        for (const auto& p : all)
            for (const auto& q : all) {
                auto j = nc_join(p, q);
                REQUIRE(is_noncrossing(j));
                REQUIRE(j == oracle::nc_join_by_search(p, q));
            }
    }
}

TEST_CASE("nc_join is monotone in refinement, n = 4") {
    auto all = enumerate_noncrossing(4);
    for (const auto& p : all)
        for (const auto& p2 : all) {
            if (!refines(p, p2)) continue;
            for (const auto& q : all) REQUIRE(refines(nc_join(p, q), nc_join(p2, q)));
        }
}

TEST_CASE("kreweras complement on interleaved positions") {
    // single block on x1 forces singletons on x2
    SetPartition p(BlockList{{1, 3}});
    auto c = kreweras_complement(p, {1, 3}, {2, 4});
    REQUIRE(c == SetPartition(BlockList{{2}, {4}}));

    // singletons on x1 allow the full block on x2
    SetPartition s(BlockList{{1}, {3}});
    auto c2 = kreweras_complement(s, {1, 3}, {2, 4});
    REQUIRE(c2 == full_partition({2, 4}));

    REQUIRE_THROWS_AS(kreweras_complement(p, {1, 3}, {3, 4}), invalid_input);
    REQUIRE_THROWS_AS(kreweras_complement(p, {1, 4}, {2, 3}), invalid_input);
}

TEST_CASE("kreweras complement equals exhaustive maximum, sizes <= 4+4") {
    for (int n = 1; n <= 4; ++n) {
        std::vector<int> x1, x2;
        for (int i = 1; i <= n; ++i) {
            x1.push_back(2 * i - 1);
            x2.push_back(2 * i);
        }
        for (const auto& p : enumerate_noncrossing(x1)) {
            auto fast = kreweras_complement(p, x1, x2);
            auto slow = oracle::kreweras_by_search(p, x1, x2);
            REQUIRE(fast == slow);
            // the union must itself be noncrossing
            BlockList joint = p.blocks();
            for (const auto& b : fast.blocks()) joint.push_back(b);
            REQUIRE(is_noncrossing(SetPartition(joint)));
        }
    }
}

TEST_CASE("kreweras block-count identity |p| + |K(p)| = n + 1") {
    for (int n = 1; n <= 6; ++n) {
        for (const auto& p : enumerate_noncrossing(n)) {
            auto c = kreweras_complement(p);
            REQUIRE(p.num_blocks() + c.num_blocks() == static_cast<std::size_t>(n) + 1);
        }
    }
}

TEST_CASE("kreweras complement on asymmetric ground sets") {
    // x2 may sit anywhere relative to x1, not only interleaved
    SetPartition p(BlockList{{2, 6}});
    auto c = kreweras_complement(p, {2, 6}, {1, 4, 7});
    // 4 is separated from 1 and 7 by the block {2,6}
    REQUIRE(c == SetPartition(BlockList{{1, 7}, {4}}));
    REQUIRE(c == oracle::kreweras_by_search(p, {2, 6}, {1, 4, 7}));
}

TEST_CASE("streaming visitor covers NC(12) without materializing") {
    std::size_t count = 0;
    for_each_noncrossing(range_ground(12), [&](const BlockList&) { ++count; });
    REQUIRE(count == 208012);
}
