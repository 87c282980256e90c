#pragma once

// Test-only reference implementations, deliberately naive and independent of
// the library's algorithms. Each one recomputes a quantity the library gets
// by a faster or cleverer route.

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "freeprob/ncpart.hpp"

namespace oracle {

using freeprob::ncpart::Block;
using freeprob::ncpart::BlockList;
using freeprob::ncpart::SetPartition;

/// Every set partition of `ground`, via restricted growth strings.
inline std::vector<SetPartition> all_set_partitions(const std::vector<int>& ground) {
    std::vector<SetPartition> out;
    const std::size_t n = ground.size();
    std::vector<int> rgs(n, 0);
    auto emit = [&]() {
        int k = *std::max_element(rgs.begin(), rgs.end()) + 1;
        BlockList bl(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < n; ++i)
            bl[static_cast<std::size_t>(rgs[i])].push_back(ground[i]);
        out.emplace_back(bl);
    };
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int maxv) {
        if (i == n) {
            emit();
            return;
        }
        for (int v = 0; v <= maxv + 1; ++v) {
            rgs[i] = v;
            rec(i + 1, std::max(maxv, v));
        }
    };
    rec(1, 0); // rgs[0] = 0 fixed
    return out;
}

/// Noncrossing partitions by filtering the full list.
inline std::vector<SetPartition> nc_by_filter(const std::vector<int>& ground) {
    std::vector<SetPartition> out;
    for (auto& p : all_set_partitions(ground))
        if (freeprob::ncpart::is_noncrossing(p)) out.push_back(p);
    return out;
}

/// NC join as the unique minimal noncrossing partition coarser than both,
/// found by scanning the whole of NC(ground).
inline SetPartition nc_join_by_search(const SetPartition& p, const SetPartition& q) {
    using freeprob::ncpart::refines;
    std::vector<SetPartition> ubs;
    for (auto& r : nc_by_filter(p.ground()))
        if (refines(p, r) && refines(q, r)) ubs.push_back(r);
    // minimal = refines every other upper bound
    for (const auto& cand : ubs) {
        bool minimal = true;
        for (const auto& other : ubs)
            if (!refines(cand, other) && refines(other, cand) &&
                !(other == cand)) { /* other strictly below cand */
                minimal = false;
                break;
            }
        if (minimal) {
            // verify it lies below all upper bounds, i.e. is the least one
            bool least = true;
            for (const auto& other : ubs)
                if (!refines(cand, other)) least = false;
            if (least) return cand;
        }
    }
    throw std::logic_error("nc_join_by_search: no least upper bound found");
}

/// Kreweras complement by exhaustive search: the coarsest s in NC(x2) whose
/// union with p stays noncrossing on x1 ∪ x2. Verifies uniqueness.
inline SetPartition kreweras_by_search(const SetPartition& p, const std::vector<int>& x1,
                                       const std::vector<int>& x2) {
    using freeprob::ncpart::is_noncrossing;
    using freeprob::ncpart::refines;
    std::vector<SetPartition> good;
    for (auto& s : nc_by_filter(x2)) {
        BlockList joint = p.blocks();
        for (const auto& b : s.blocks()) joint.push_back(b);
        if (is_noncrossing(SetPartition(joint))) good.push_back(s);
    }
    SetPartition best;
    bool found = false;
    for (const auto& cand : good) {
        bool top = true;
        for (const auto& other : good)
            if (!refines(other, cand)) top = false;
        if (top) {
            if (found) throw std::logic_error("kreweras_by_search: maximum not unique");
            best = cand;
            found = true;
        }
    }
    if (!found && !x2.empty())
        throw std::logic_error("kreweras_by_search: no maximum");
    return best;
}

} // namespace oracle
