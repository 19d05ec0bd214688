#pragma once

// Thread adjacency, the relation ~ it generates, and the neighbourhood base of
// the limit space. Everything here is certified to a finite depth only.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "asymgeo/sequence.hpp"

namespace asymgeo {

// u(1), ..., u(K) as vertex ids; index k-1 holds level k.
inline std::vector<VertexId> thread_trace(const Pattern& p, const ThreadSpec& t, int K) {
    if (K < 1) throw RangeError("depth must be at least 1");
    std::vector<VertexId> out(K);
    out[K - 1] = p.locate(K, t);
    for (int k = K - 1; k >= 1; --k) out[k - 1] = p.level(k + 1).parent(out[k]);
    return out;
}

inline bool traces_adjacent(const Pattern& p, const std::vector<VertexId>& a, const std::vector<VertexId>& b) {
    std::size_t K = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < K; ++i)
        if (!p.level(int(i) + 1).adjacent(a[i], b[i])) return false;
    return true;
}

// Adj(u(k), v(k)) for every k <= K. A false answer is final; true is depth-K evidence.
inline bool threads_adjacent(const Pattern& p, const ThreadSpec& u, const ThreadSpec& v, int K) {
    return traces_adjacent(p, thread_trace(p, u, K), thread_trace(p, v, K));
}

struct ThreadClass {
    std::vector<ThreadSpec> representatives;  // normalized, sorted as infinite words
    int depth_verified = 0;
    bool rational = false;
    bool complete = true;  // false when the member bound stopped the closure

    std::size_t size() const { return representatives.size(); }
    bool contains(const ThreadSpec& t) const {
        return std::find(representatives.begin(), representatives.end(), t) != representatives.end();
    }
};

struct ClassOptions {
    // Level whose neighbourhood seeds the candidate heads; 0 picks K - 2*max_cycle - 2.
    int pool_level = 0;
    // Longest candidate cycle; 0 means max(2, |u's cycle|).
    std::size_t max_cycle = 0;
    std::size_t max_members = 64;
};

namespace detail {

using ThreadKey = std::pair<std::vector<Symbol>, std::vector<Symbol>>;

inline ThreadKey thread_key(const ThreadSpec& t) { return {t.head.symbols(), t.cycle.symbols()}; }

inline void all_words(std::size_t alphabet, std::size_t len, std::vector<LabelPath>& out) {
    std::vector<Symbol> w(len, 0);
    while (true) {
        out.emplace_back(w);
        std::size_t i = len;
        while (i > 0 && w[i - 1] + 1u == alphabet) w[--i] = 0;
        if (i == 0) return;
        ++w[i - 1];
    }
}

}  // namespace detail

// Closure of depth-K adjacency over eventually periodic candidates. Candidates
// are label(w) followed by a short cycle, for w in the closed neighbourhood of
// a member's prefix at the pool level; every new member seeds more candidates.
inline ThreadClass equivalence_class(const Pattern& p, const ThreadSpec& u, int K, ClassOptions opt = {}) {
    const std::size_t L = opt.max_cycle ? opt.max_cycle : std::max<std::size_t>(2, u.normalized().cycle.size());
    const int h = opt.pool_level ? opt.pool_level : std::max(1, K - 2 * int(L) - 2);
    if (h > K) throw RangeError("pool level deeper than the verified depth");
    std::vector<LabelPath> cycles;
    for (std::size_t len = 1; len <= L; ++len) detail::all_words(p.alphabet().size(), len, cycles);

    struct Entry {
        ThreadSpec t;
        std::optional<std::vector<VertexId>> trace;  // empty when the thread leaves the pattern
        bool member = false;
    };
    std::map<detail::ThreadKey, std::size_t> index;
    std::vector<Entry> entries;
    auto intern = [&](const ThreadSpec& raw) {
        ThreadSpec t = raw.normalized();
        auto [it, fresh] = index.try_emplace(detail::thread_key(t), entries.size());
        if (fresh) {
            Entry e{t, std::nullopt, false};
            try {
                e.trace = thread_trace(p, t, K);
            } catch (const ThreadError&) {
            }
            entries.push_back(std::move(e));
        }
        return it->second;
    };

    ThreadClass out;
    out.depth_verified = K;
    std::size_t root = intern(u);
    if (!entries[root].trace) throw ThreadError(p.name() + ": thread leaves the pattern before depth " + std::to_string(K));
    entries[root].member = true;
    std::vector<std::size_t> members{root}, candidates;

    for (std::size_t m = 0; m < members.size(); ++m) {
        const ApproxGraph& g = p.level(h);
        VertexId x = (*entries[members[m]].trace)[h - 1];
        std::vector<VertexId> around{x};
        around.insert(around.end(), g.neighbors(x).begin(), g.neighbors(x).end());
        for (VertexId w : around)
            for (const LabelPath& c : cycles) {
                std::size_t before = entries.size();
                std::size_t i = intern(ThreadSpec(g.label_path(w), c));
                if (i == before && entries[i].trace) candidates.push_back(i);
            }
        // Test every non-member against the members found so far; repeat until stable.
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t& c : candidates) {
                if (c == SIZE_MAX || entries[c].member) continue;
                for (std::size_t mm : members)
                    if (traces_adjacent(p, *entries[mm].trace, *entries[c].trace)) {
                        entries[c].member = true;
                        members.push_back(c);
                        c = SIZE_MAX;
                        grew = true;
                        break;
                    }
            }
            if (members.size() > opt.max_members) {
                out.complete = false;
                break;
            }
        }
        if (!out.complete) break;
    }

    for (std::size_t m : members) out.representatives.push_back(entries[m].t);
    std::sort(out.representatives.begin(), out.representatives.end(),
              [](const ThreadSpec& a, const ThreadSpec& b) { return compare_threads(a, b) < 0; });
    out.rational = out.size() > 1;
    return out;
}

struct NeighborhoodAnswer {
    bool contains = false;
    bool complete = true;
};

// [candidate] in U^{[center]}_k: some representatives are adjacent at level k.
inline NeighborhoodAnswer neighborhood_contains(const Pattern& p, const ThreadClass& center,
                                                const ThreadClass& candidate, int k) {
    if (center.depth_verified < k || candidate.depth_verified < k)
        throw RangeError("classes must be verified to at least depth " + std::to_string(k));
    NeighborhoodAnswer a{false, center.complete && candidate.complete};
    const ApproxGraph& g = p.level(k);
    for (const ThreadSpec& v : center.representatives) {
        VertexId x = p.locate(k, v);
        for (const ThreadSpec& u : candidate.representatives)
            if (g.adjacent(x, p.locate(k, u))) {
                a.contains = true;
                return a;
            }
    }
    return a;
}

// Classes are closed at depth max(K, k); K = 0 picks max(k, 10) within the pattern's limit.
inline NeighborhoodAnswer neighborhood_contains(const Pattern& p, const ThreadSpec& center,
                                                const ThreadSpec& candidate, int k, int K = 0,
                                                ClassOptions opt = {}) {
    if (K == 0) K = std::max(k, std::min(10, p.max_level()));
    K = std::max(K, k);
    return neighborhood_contains(p, equivalence_class(p, center, K, opt), equivalence_class(p, candidate, K, opt), k);
}

}  // namespace asymgeo
