#pragma once

// Inverse sequences of level graphs, cross-level adjacency and the two
// regularity axioms (connectedness and consistency).

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "asymgeo/graph.hpp"
#include "asymgeo/labels.hpp"

namespace asymgeo {

enum class PatternKind { interval, circle, square, torus, klein, transformed };

inline const char* to_string(PatternKind k) {
    switch (k) {
        case PatternKind::interval: return "interval";
        case PatternKind::circle: return "circle";
        case PatternKind::square: return "square";
        case PatternKind::torus: return "torus";
        case PatternKind::klein: return "klein";
        case PatternKind::transformed: return "transformed";
    }
    return "?";
}

struct InverseStep {
    int from_level = 0;
    int to_level = 0;
    std::vector<VertexId> map;
};

// A generator of (G_k, phi_{k+1,k}). Levels are built on demand, in order,
// and cached; all accessors are safe to call from several threads.
class Pattern {
public:
    Pattern(std::string name, Alphabet alphabet, PatternKind kind)
        : name_(std::move(name)), alphabet_(std::move(alphabet)), kind_(kind) {}
    virtual ~Pattern() = default;
    Pattern(const Pattern&) = delete;
    Pattern& operator=(const Pattern&) = delete;

    const std::string& name() const { return name_; }
    const Alphabet& alphabet() const { return alphabet_; }
    PatternKind kind() const { return kind_; }
    // Whether level graphs carry faces (needed by the Euclidean metric).
    virtual bool has_faces() const { return false; }
    // Graphs whose level-1 coordinates live on a closed 1D curve or segment.
    virtual bool one_dimensional() const { return true; }
    // Largest level this pattern will materialise as an explicit graph.
    virtual int max_level() const { return 14; }

    const ApproxGraph& level(int k) const {
        if (k < 1) throw RangeError("levels start at 1");
        if (k > max_level())
            throw CapabilityError(name_ + ": level " + std::to_string(k) + " exceeds the materialisation limit " +
                                  std::to_string(max_level()));
        std::lock_guard lock(mu_);
        while (int(levels_.size()) < k) {
            int next = int(levels_.size()) + 1;
            const ApproxGraph* prev = levels_.empty() ? nullptr : levels_.back().get();
            auto g = std::make_unique<ApproxGraph>(make_level(next, prev));
            if (g->level() != next) throw StructuralError("builder produced the wrong level");
            if (prev) verify_step(*g, *prev);
            levels_.push_back(std::move(g));
        }
        return *levels_[k - 1];
    }

    InverseStep inverse_step(int from_level) const {
        if (from_level < 2) throw RangeError("inverse steps start at level 2");
        return {from_level, from_level - 1, level(from_level).parents()};
    }

    VertexId project(int k, VertexId y) const {
        if (k < 2) throw RangeError("cannot project below level 1");
        return level(k).parent(y);
    }

    // Level-i ancestor of a level-k vertex (the length-i prefix of its label).
    VertexId ancestor(int k, VertexId v, int i) const {
        if (i < 1 || i > k) throw RangeError("ancestor level out of range");
        for (int j = k; j > i; --j) v = level(j).parent(v);
        return v;
    }

    // Vertices of level k+1 that map onto x.
    std::span<const VertexId> children(int k, VertexId x) const {
        const ApproxGraph& hi = level(k + 1);
        const ApproxGraph& lo = level(k);
        std::lock_guard lock(mu_);
        if (int(child_index_.size()) < k) child_index_.resize(k);
        auto& ci = child_index_[k - 1];
        if (ci.off.empty()) {
            ci.off.assign(lo.vertex_count() + 1, 0);
            for (VertexId p : hi.parents()) ++ci.off[p + 1];
            for (std::size_t i = 0; i < lo.vertex_count(); ++i) ci.off[i + 1] += ci.off[i];
            ci.ids.resize(hi.vertex_count());
            std::vector<std::uint32_t> pos(ci.off.begin(), ci.off.end() - 1);
            for (VertexId y = 0; y < hi.vertex_count(); ++y) ci.ids[pos[hi.parent(y)]++] = y;
        }
        if (x >= lo.vertex_count()) throw LookupError("vertex not in level " + std::to_string(k));
        return std::span<const VertexId>(ci.ids).subspan(ci.off[x], ci.off[x + 1] - ci.off[x]);
    }

    // u(k): the level-k vertex the thread passes through.
    VertexId locate(int k, const ThreadSpec& t) const {
        const ApproxGraph& g1 = level(1);
        VertexId cur = kNoVertex;
        for (VertexId v = 0; v < g1.vertex_count(); ++v)
            if (matches(g1.label(v), t)) {
                cur = v;
                break;
            }
        if (cur == kNoVertex) throw ThreadError(name_ + ": thread has no level-1 vertex");
        for (int j = 1; j < k; ++j) {
            const ApproxGraph& hi = level(j + 1);
            VertexId next = kNoVertex;
            for (VertexId c : children(j, cur))
                if (matches(hi.label(c), t)) {
                    next = c;
                    break;
                }
            if (next == kNoVertex)
                throw ThreadError(name_ + ": thread leaves the pattern at level " + std::to_string(j + 1));
            cur = next;
        }
        return cur;
    }

protected:
    virtual ApproxGraph make_level(int k, const ApproxGraph* prev) const = 0;

    static bool matches(std::span<const Symbol> lab, const ThreadSpec& t) {
        for (std::size_t i = 0; i < lab.size(); ++i)
            if (lab[i] != t.at(i)) return false;
        return true;
    }

private:
    static void verify_step(const ApproxGraph& hi, const ApproxGraph& lo) {
        if (hi.parents().size() != hi.vertex_count())
            throw StructuralError("level " + std::to_string(hi.level()) + " lacks an inverse map");
        std::vector<char> hit(lo.vertex_count(), 0);
        for (VertexId p : hi.parents()) {
            if (p >= lo.vertex_count()) throw StructuralError("inverse map leaves the lower level");
            hit[p] = 1;
        }
        if (std::find(hit.begin(), hit.end(), 0) != hit.end())
            throw StructuralError("inverse map onto level " + std::to_string(lo.level()) + " is not surjective");
    }

    struct ChildIndex {
        std::vector<std::uint32_t> off;
        std::vector<VertexId> ids;
    };

    std::string name_;
    Alphabet alphabet_;
    PatternKind kind_;
    mutable std::recursive_mutex mu_;
    mutable std::vector<std::unique_ptr<ApproxGraph>> levels_;
    mutable std::vector<ChildIndex> child_index_;
};

// Adj(x@n, y@k): some level-k descendant of x is adjacent to y. Evaluated by
// walking the closed neighbourhood of the deeper vertex up to the shallower
// level, which is equivalent and avoids enumerating the descendant cone.
inline bool cross_level_adjacent(const Pattern& p, int n, VertexId x, int k, VertexId y) {
    if (n > k) return cross_level_adjacent(p, k, y, n, x);
    const ApproxGraph& gk = p.level(k);
    if (x >= p.level(n).vertex_count()) throw LookupError("vertex not in level " + std::to_string(n));
    if (n == k) return gk.adjacent(x, y);
    if (p.ancestor(k, y, n) == x) return true;
    for (VertexId w : gk.neighbors(y))
        if (p.ancestor(k, w, n) == x) return true;
    return false;
}

struct Counterexample {
    int level = 0;      // level of the pair that failed to refine or project
    std::string x, y;   // labels
    std::string what;
};

struct RegularityReport {
    bool connectedness_ok = true;
    bool consistency_ok = true;
    std::vector<Counterexample> counterexamples;
    bool ok() const { return connectedness_ok && consistency_ok; }
};

// Every edge x != y at level k < K has distinct adjacent children at level k+1.
inline RegularityReport check_connectedness(const Pattern& p, int K, std::size_t max_reports = 20) {
    RegularityReport r;
    for (int k = 1; k < K; ++k) {
        const ApproxGraph& g = p.level(k);
        const ApproxGraph& h = p.level(k + 1);
        for (VertexId x = 0; x < g.vertex_count(); ++x)
            for (VertexId y : g.neighbors(x)) {
                if (y < x) continue;
                bool found = false;
                for (VertexId cx : p.children(k, x)) {
                    for (VertexId cy : p.children(k, y))
                        if (cx != cy && h.adjacent(cx, cy)) {
                            found = true;
                            break;
                        }
                    if (found) break;
                }
                if (!found) {
                    r.connectedness_ok = false;
                    if (r.counterexamples.size() < max_reports)
                        r.counterexamples.push_back({k, format_label(g.label(x), p.alphabet()),
                                                     format_label(g.label(y), p.alphabet()),
                                                     "edge has no adjacent pair of successors"});
                }
            }
    }
    return r;
}

// For adjacent x', y at level K' <= K, all prefix pairs x'(i), y(j) are
// cross-level adjacent. Pairs at unequal levels reduce to this case, since a
// cross-level adjacency is witnessed by an equal-level one.
inline RegularityReport check_consistency(const Pattern& p, int K, std::size_t max_reports = 20) {
    RegularityReport r;
    for (int k = 2; k <= K; ++k) {
        const ApproxGraph& g = p.level(k);
        std::vector<VertexId> ax(k + 1), ay(k + 1);
        for (VertexId x = 0; x < g.vertex_count(); ++x) {
            ax[k] = x;
            for (int i = k - 1; i >= 1; --i) ax[i] = p.level(i + 1).parent(ax[i + 1]);
            auto visit = [&](VertexId y) {
                ay[k] = y;
                for (int j = k - 1; j >= 1; --j) ay[j] = p.level(j + 1).parent(ay[j + 1]);
                for (int i = 1; i <= k; ++i)
                    for (int j = 1; j <= k; ++j) {
                        if (i == k && j == k) continue;
                        if (cross_level_adjacent(p, i, ax[i], j, ay[j])) continue;
                        r.consistency_ok = false;
                        if (r.counterexamples.size() < max_reports)
                            r.counterexamples.push_back(
                                {k, format_label(g.label(x), p.alphabet()), format_label(g.label(y), p.alphabet()),
                                 "prefixes at levels " + std::to_string(i) + "," + std::to_string(j) +
                                     " are not adjacent"});
                        return;
                    }
            };
            visit(x);
            for (VertexId y : g.neighbors(x))
                if (y > x) visit(y);
        }
    }
    return r;
}

inline RegularityReport check_regularity(const Pattern& p, int K) {
    RegularityReport a = check_connectedness(p, K);
    RegularityReport b = check_consistency(p, K);
    a.consistency_ok = b.consistency_ok;
    a.counterexamples.insert(a.counterexamples.end(), b.counterexamples.begin(), b.counterexamples.end());
    return a;
}

}  // namespace asymgeo
