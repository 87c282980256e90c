#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/rational.hpp"

namespace freeprob::ncpart {

using Block = std::vector<int>;
using BlockList = std::vector<Block>;

/// Partition of a finite set of integers into disjoint nonempty blocks.
/// Canonical form: each block ascending, blocks ordered by least element.
/// Immutable after construction; construction canonicalizes and validates.
class SetPartition {
public:
    SetPartition() = default;

    explicit SetPartition(BlockList blocks) : blocks_(std::move(blocks)) {
        for (auto& b : blocks_) {
            if (b.empty()) throw invalid_input("SetPartition: empty block");
            std::sort(b.begin(), b.end());
            if (std::adjacent_find(b.begin(), b.end()) != b.end())
                throw invalid_input("SetPartition: repeated element within a block");
        }
        std::sort(blocks_.begin(), blocks_.end(),
                  [](const Block& a, const Block& b) { return a.front() < b.front(); });
        std::vector<int> all;
        for (const auto& b : blocks_) all.insert(all.end(), b.begin(), b.end());
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
            throw invalid_input("SetPartition: element appears in two blocks");
        ground_ = std::move(all);
    }

    const BlockList& blocks() const { return blocks_; }
    const std::vector<int>& ground() const { return ground_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    std::size_t size() const { return ground_.size(); }

    /// Index of the block containing x, or -1.
    int block_of(int x) const {
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (std::binary_search(blocks_[i].begin(), blocks_[i].end(), x))
                return static_cast<int>(i);
        return -1;
    }

    friend bool operator==(const SetPartition& a, const SetPartition& b) {
        return a.blocks_ == b.blocks_;
    }
    friend bool operator!=(const SetPartition& a, const SetPartition& b) { return !(a == b); }
    friend bool operator<(const SetPartition& a, const SetPartition& b) {
        return a.blocks_ < b.blocks_;
    }

    std::string str() const {
        std::string s = "{";
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            s += i ? ",{" : "{";
            for (std::size_t j = 0; j < blocks_[i].size(); ++j)
                s += (j ? "," : "") + std::to_string(blocks_[i][j]);
            s += "}";
        }
        return s + "}";
    }

private:
    BlockList blocks_;
    std::vector<int> ground_;
};

/// Full partition 1_X (single block) of a nonempty ground set.
inline SetPartition full_partition(std::vector<int> ground) {
    return SetPartition(BlockList{std::move(ground)});
}

/// Discrete partition 0_X (all singletons).
inline SetPartition singleton_partition(const std::vector<int>& ground) {
    BlockList bl;
    bl.reserve(ground.size());
    for (int x : ground) bl.push_back({x});
    return SetPartition(std::move(bl));
}

inline std::vector<int> range_ground(int n) {
    std::vector<int> g(static_cast<std::size_t>(n));
    std::iota(g.begin(), g.end(), 1);
    return g;
}

/// Two blocks cross when their elements interleave as a < b < c < d with
/// a,c in one block and b,d in the other.
inline bool blocks_cross(const Block& p, const Block& q) {
    // walk the merged sequence; three or more ownership alternations = crossing
    std::size_t i = 0, j = 0;
    int alternations = 0;
    int last = -1; // 0 = from p, 1 = from q
    while (i < p.size() && j < q.size()) {
        int take = p[i] < q[j] ? 0 : 1;
        if (take != last) {
            if (last != -1) ++alternations;
            last = take;
        }
        (take == 0 ? i : j)++;
    }
    if (i < p.size() && last == 1) ++alternations;
    if (j < q.size() && last == 0) ++alternations;
    return alternations >= 3;
}

inline bool is_noncrossing(const SetPartition& p) {
    const auto& bl = p.blocks();
    for (std::size_t i = 0; i < bl.size(); ++i)
        for (std::size_t j = i + 1; j < bl.size(); ++j)
            if (blocks_cross(bl[i], bl[j])) return false;
    return true;
}

/// p refines q: every block of p lies inside one block of q.
/// Both must partition the same ground set.
inline bool refines(const SetPartition& p, const SetPartition& q) {
    if (p.ground() != q.ground())
        throw invalid_input("refines: ground sets differ");
    for (const auto& b : p.blocks()) {
        int owner = q.block_of(b.front());
        for (int x : b)
            if (q.block_of(x) != owner) return false;
    }
    return true;
}

inline constexpr int kEnumerationCap = 14;

inline BigInt catalan(int n) {
    if (n < 0) throw invalid_input("catalan: negative index");
    BigInt num = 1, den = 1;
    for (int k = 2; k <= n; ++k) {
        num *= (n + k);
        den *= k;
    }
    return num / den;
}

namespace detail {

using Sink = std::function<void(BlockList&)>;

/// Streams the noncrossing partitions of `ground` (sorted ascending) by
/// recursive placement of the block containing the least element: the rest
/// of that block is a subset of the remaining elements, and the elements
/// falling between its consecutive members (or past its maximum) form
/// segments partitioned independently. Blocks accumulate in `acc`; `yield`
/// fires once per partition with acc holding exactly its blocks.
inline void nc_visit(const std::vector<int>& ground, BlockList& acc, const Sink& yield) {
    if (ground.empty()) {
        yield(acc);
        return;
    }
    const std::size_t r = ground.size() - 1;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << r); ++mask) {
        Block first = {ground[0]};
        std::vector<std::vector<int>> segments;
        std::vector<int> seg;
        for (std::size_t k = 0; k < r; ++k) {
            if (mask & (std::uint64_t(1) << k)) {
                first.push_back(ground[k + 1]);
                segments.push_back(std::move(seg));
                seg.clear();
            } else {
                seg.push_back(ground[k + 1]);
            }
        }
        segments.push_back(std::move(seg));
        acc.push_back(std::move(first));
        // cartesian product over segment partitions, rightmost varies fastest
        std::function<void(std::size_t)> product = [&](std::size_t idx) {
            if (idx == segments.size()) {
                yield(acc);
                return;
            }
            Sink collect = [&](BlockList&) { product(idx + 1); };
            // nc_visit appends the segment's blocks into acc before firing
            nc_visit(segments[idx], acc, collect);
        };
        product(0);
        acc.pop_back();
    }
}

} // namespace detail

/// Calls f(const BlockList&) once per noncrossing partition of `ground`,
/// blocks in canonical order. Deterministic; no materialization.
template <class F>
void for_each_noncrossing(std::vector<int> ground, F&& f, int cap = kEnumerationCap) {
    std::sort(ground.begin(), ground.end());
    if (std::adjacent_find(ground.begin(), ground.end()) != ground.end())
        throw invalid_input("for_each_noncrossing: repeated ground element");
    if (static_cast<int>(ground.size()) > cap)
        throw resource_limit("for_each_noncrossing: ground size " +
                             std::to_string(ground.size()) + " exceeds cap " +
                             std::to_string(cap));
    BlockList acc;
    BlockList canon;
    detail::Sink yield = [&](BlockList& built) {
        canon = built;
        std::sort(canon.begin(), canon.end(),
                  [](const Block& a, const Block& b) { return a.front() < b.front(); });
        const BlockList& view = canon;
        f(view);
    };
    detail::nc_visit(ground, acc, yield);
}

/// Materialized enumeration of NC(ground). Count equals the Catalan number
/// of |ground|. Capped (default 14) because Catalan growth is exponential.
inline std::vector<SetPartition> enumerate_noncrossing(const std::vector<int>& ground,
                                                       int cap = kEnumerationCap) {
    std::vector<SetPartition> out;
    for_each_noncrossing(
        std::vector<int>(ground), [&](const BlockList& bl) { out.emplace_back(bl); }, cap);
    return out;
}

inline std::vector<SetPartition> enumerate_noncrossing(int n, int cap = kEnumerationCap) {
    return enumerate_noncrossing(range_ground(n), cap);
}

/// Least upper bound of two noncrossing partitions inside the NC lattice:
/// union the blocks, then repeatedly merge any pair that overlaps or
/// crosses. Both merges are forced in any noncrossing coarsening, so the
/// fixed point is the NC join.
inline SetPartition nc_join(const SetPartition& p, const SetPartition& q) {
    if (p.ground() != q.ground())
        throw invalid_input("nc_join: ground sets differ");
    if (!is_noncrossing(p) || !is_noncrossing(q))
        throw invalid_input("nc_join: inputs must be noncrossing");
    BlockList work = p.blocks();
    for (const auto& b : q.blocks()) work.push_back(b);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < work.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < work.size() && !changed; ++j) {
                bool overlap = false;
                for (int x : work[j])
                    if (std::binary_search(work[i].begin(), work[i].end(), x)) {
                        overlap = true;
                        break;
                    }
                if (overlap || blocks_cross(work[i], work[j])) {
                    Block merged;
                    std::merge(work[i].begin(), work[i].end(), work[j].begin(), work[j].end(),
                               std::back_inserter(merged));
                    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
                    work[i] = std::move(merged);
                    work.erase(work.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                }
            }
        }
    }
    return SetPartition(std::move(work));
}

/// Kreweras complement of p in NC(x1) relative to a disjoint second set x2,
/// both viewed inside the common linear order on x1 ∪ x2: the unique
/// coarsest partition s of x2 such that p ∪ s is noncrossing on x1 ∪ x2.
///
/// Two x2 elements may share a block exactly when no block of p has an
/// element strictly between them and another outside their interval; the
/// transitive components of that relation are already noncrossing and give
/// the maximum.
inline SetPartition kreweras_complement(const SetPartition& p, const std::vector<int>& x1,
                                        const std::vector<int>& x2) {
    std::vector<int> s1 = x1, s2 = x2;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    if (std::adjacent_find(s2.begin(), s2.end()) != s2.end())
        throw invalid_input("kreweras_complement: repeated element in x2");
    std::vector<int> g = p.ground();
    if (g != s1) throw invalid_input("kreweras_complement: p does not partition x1");
    for (int x : s2)
        if (std::binary_search(s1.begin(), s1.end(), x))
            throw invalid_input("kreweras_complement: x1 and x2 intersect");
    if (!is_noncrossing(p))
        throw invalid_input("kreweras_complement: p must be noncrossing");

    const std::size_t m = s2.size();
    if (m == 0) return SetPartition();

    auto chord_ok = [&](int a, int b) {
        // no block of p may cross the chord (a, b), a < b
        for (const auto& blk : p.blocks()) {
            bool inside = false, outside = false;
            for (int x : blk) {
                if (x > a && x < b) inside = true;
                else outside = true;
            }
            if (inside && outside) return false;
        }
        return true;
    };

    // union-find over adjacent-compatible pairs; pairwise compatibility is
    // transitive along the order, so components are exactly the complement
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
        return v;
    };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (chord_ok(s2[i], s2[j])) {
                int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
                if (a != b) parent[static_cast<std::size_t>(b)] = a;
            }
    BlockList bl;
    std::vector<int> root_block(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        int r = find(static_cast<int>(i));
        if (root_block[static_cast<std::size_t>(r)] == -1) {
            root_block[static_cast<std::size_t>(r)] = static_cast<int>(bl.size());
            bl.emplace_back();
        }
        bl[static_cast<std::size_t>(root_block[static_cast<std::size_t>(r)])].push_back(s2[i]);
    }
    return SetPartition(std::move(bl));
}

/// Classic complement inside NC(n): p on odd positions 1,3,..,2n-1 against
/// the interleaved even positions 2,4,..,2n, relabelled back to 1..n.
inline SetPartition kreweras_complement(const SetPartition& p) {
    const int n = static_cast<int>(p.size());
    std::vector<int> x1, x2;
    BlockList odd;
    for (const auto& b : p.blocks()) {
        Block nb;
        for (int x : b) nb.push_back(2 * x - 1);
        odd.push_back(std::move(nb));
    }
    for (int i = 1; i <= n; ++i) {
        x1.push_back(2 * i - 1);
        x2.push_back(2 * i);
    }
    SetPartition c = kreweras_complement(SetPartition(std::move(odd)), x1, x2);
    BlockList back;
    for (const auto& b : c.blocks()) {
        Block nb;
        for (int x : b) nb.push_back(x / 2);
        back.push_back(std::move(nb));
    }
    return SetPartition(std::move(back));
}

} // namespace freeprob::ncpart
