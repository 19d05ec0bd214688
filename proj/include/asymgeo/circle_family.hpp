#pragma once

// The flat circle/interval and its curvature transforms, stored as ordered
// runs of dyadic arcs. A level is a list of blocks; block (p, L) stands for
// all 2^(L-|p|) labels of length L extending p, in lexicographic order, so a
// level with astronomically many vertices (the extreme transform) still fits
// in memory. Levels small enough are materialised as ApproxGraph.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "asymgeo/sequence.hpp"

namespace asymgeo {

using BigInt = boost::multiprecision::cpp_int;

enum class TransformKind { none, elliptic, weak_hyperbolic, strong_hyperbolic, extreme_hyperbolic };

inline const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::none: return "none";
        case TransformKind::elliptic: return "elliptic";
        case TransformKind::weak_hyperbolic: return "weak_hyperbolic";
        case TransformKind::strong_hyperbolic: return "strong_hyperbolic";
        case TransformKind::extreme_hyperbolic: return "extreme_hyperbolic";
    }
    return "?";
}

// A point of curvature. The rule applies to the vertex it passes through at
// every level >= active_from, when building the next level.
struct MarkedThread {
    ThreadSpec thread;
    int active_from = 2;
};

struct TransformSpec {
    TransformKind kind = TransformKind::none;
    int parameter = 1;  // elliptic weight, alpha, or beta
    std::vector<MarkedThread> marked;
};

// Ratio num/den of big integers as a double, keeping ~60 significant bits.
inline double big_ratio(BigInt num, BigInt den) {
    if (den == 0) throw RangeError("division by zero");
    std::size_t bits = boost::multiprecision::msb(den);
    if (bits > 60) {
        num >>= bits - 60;
        den >>= bits - 60;
    }
    return num.convert_to<double>() / den.convert_to<double>();
}

// Sum of powers of two, added one at a time with amortised O(1) carries.
class PowerSum {
public:
    void add_pow2(std::size_t e) {
        std::size_t w = e / 64;
        if (limbs_.size() <= w + 1) limbs_.resize(w + 2, 0);
        std::uint64_t bit = std::uint64_t(1) << (e % 64);
        while (true) {
            std::uint64_t old = limbs_[w];
            limbs_[w] += bit;
            if (limbs_[w] >= old) break;
            bit = 1;
            if (++w == limbs_.size()) limbs_.push_back(0);
        }
    }
    BigInt value() const {
        BigInt r;
        if (!limbs_.empty())
            boost::multiprecision::import_bits(r, limbs_.rbegin(), limbs_.rend(), 64, true);
        return r;
    }

private:
    std::vector<std::uint64_t> limbs_;
};

class CircleFamily : public Pattern {
public:
    // A block prefix: the first anchor_len symbols of marked thread `anchor`
    // (none when anchor < 0) followed by an explicit tail.
    struct Prefix {
        int anchor = -1;
        std::size_t anchor_len = 0;
        std::vector<Symbol> tail;
        std::size_t size() const { return anchor_len + tail.size(); }
    };
    struct Block {
        Prefix prefix;
        std::size_t depth = 0;
        std::size_t free_bits() const { return depth - prefix.size(); }
    };

    static constexpr std::size_t kMaterialiseCap = std::size_t(1) << 21;

    CircleFamily(std::string name, bool closed, TransformSpec spec)
        : Pattern(std::move(name), Alphabet({"a", "b"}), spec.kind == TransformKind::none
                                                               ? (closed ? PatternKind::circle : PatternKind::interval)
                                                               : PatternKind::transformed),
          closed_(closed), spec_(std::move(spec)) {
        if (spec_.kind == TransformKind::elliptic && spec_.parameter < 2)
            throw InvalidTransform("elliptic weight must be >= 2");
        if (spec_.kind == TransformKind::weak_hyperbolic && spec_.parameter < 1)
            throw InvalidTransform("alpha must be >= 1");
        if (spec_.kind == TransformKind::strong_hyperbolic && spec_.parameter < 2)
            throw InvalidTransform("beta must be >= 2");
        for (auto& m : spec_.marked) {
            if (m.active_from < 1) throw InvalidTransform("activation level must be >= 1");
            for (std::size_t i = 0; i < m.thread.head.size(); ++i)
                if (m.thread.head[i] > 1) throw InvalidTransform("marked thread outside alphabet");
            for (std::size_t i = 0; i < m.thread.cycle.size(); ++i)
                if (m.thread.cycle[i] > 1) throw InvalidTransform("marked thread outside alphabet");
        }
        std::size_t n = spec_.marked.size();
        lcp_.assign(n * n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) lcp_[i * n + j] = common_prefix(spec_.marked[i].thread, spec_.marked[j].thread);
    }

    bool closed() const { return closed_; }
    const TransformSpec& transform() const { return spec_; }

    int max_level() const override {
        std::lock_guard lock(bmu_);
        if (max_level_ == 0) {
            int k = 1;
            while (k < 22 && count_locked(k + 1) <= kMaterialiseCap) ++k;
            max_level_ = k;
        }
        return max_level_;
    }

    const std::vector<Block>& blocks(int k) const {
        std::lock_guard lock(bmu_);
        return blocks_locked(k);
    }

    BigInt vertex_count(int k) const {
        std::lock_guard lock(bmu_);
        return count_locked(k);
    }

    Symbol prefix_symbol(const Prefix& p, std::size_t i) const {
        return i < p.anchor_len ? spec_.marked[p.anchor].thread.at(i) : p.tail[i - p.anchor_len];
    }

    // Is the block prefix an initial segment of marked thread m?
    bool prefix_of_marked(const Prefix& p, std::size_t m) const {
        if (p.anchor >= 0 && lcp_[std::size_t(p.anchor) * spec_.marked.size() + m] < p.anchor_len) return false;
        const ThreadSpec& t = spec_.marked[m].thread;
        for (std::size_t i = 0; i < p.tail.size(); ++i)
            if (p.tail[i] != t.at(p.anchor_len + i)) return false;
        return true;
    }

    bool prefix_of(const Prefix& p, const ThreadSpec& t) const {
        if (p.anchor >= 0) {
            std::size_t c = common_prefix(spec_.marked[p.anchor].thread, t);
            if (c < p.anchor_len) return false;
        }
        for (std::size_t i = 0; i < p.tail.size(); ++i)
            if (p.tail[i] != t.at(p.anchor_len + i)) return false;
        return true;
    }

    // Position of u(k) in circular order, and the total vertex count.
    std::pair<BigInt, BigInt> position(int k, const ThreadSpec& t) const {
        auto pos = positions(k, {&t});
        return {pos.first[0], pos.second};
    }

    // Label length of u(k).
    std::size_t thread_depth(int k, const ThreadSpec& t) const {
        for (const Block& b : blocks(k))
            if (prefix_of(b.prefix, t)) return b.depth;
        throw ThreadError("thread not found at level " + std::to_string(k));
    }

    // Normalised path distance d_k(u(k), v(k)) computed on the block form,
    // usable far beyond the materialisation limit.
    double path_distance(int k, const ThreadSpec& u, const ThreadSpec& v) const {
        auto [pos, n] = positions(k, {&u, &v});
        BigInt diff = pos[0] > pos[1] ? BigInt(pos[0] - pos[1]) : BigInt(pos[1] - pos[0]);
        if (n < 2) return 0.0;
        if (closed_) {
            BigInt other = n - diff;
            if (other < diff) diff = other;
            return big_ratio(diff, n / 2);
        }
        return big_ratio(diff, n - 1);
    }

protected:
    ApproxGraph make_level(int k, const ApproxGraph* prev) const override {
        const auto& bl = blocks(k);
        std::vector<Symbol> syms;
        std::vector<std::size_t> off{0};
        std::vector<Symbol> lab;
        for (const Block& b : bl) {
            lab.assign(b.depth, 0);
            for (std::size_t i = 0; i < b.prefix.size(); ++i) lab[i] = prefix_symbol(b.prefix, i);
            std::size_t fb = b.free_bits();
            for (std::uint64_t o = 0; o < (std::uint64_t(1) << fb); ++o) {
                for (std::size_t i = 0; i < fb; ++i) lab[b.prefix.size() + i] = Symbol((o >> (fb - 1 - i)) & 1);
                syms.insert(syms.end(), lab.begin(), lab.end());
                off.push_back(syms.size());
            }
        }
        const std::size_t n = off.size() - 1;
        auto label = [&](std::size_t v) { return std::span<const Symbol>(syms).subspan(off[v], off[v + 1] - off[v]); };

        GraphBuilder gb(k);
        for (std::size_t v = 0; v < n; ++v) gb.add_vertex(label(v));
        for (std::size_t i = 0; i + 1 < n; ++i) gb.add_edge(VertexId(i), VertexId(i + 1));
        if (closed_) {
            // On the two-vertex circle this doubles the only edge.
            gb.add_edge(VertexId(n - 1), VertexId(0));
            gb.set_diameter(int(n / 2));
        } else {
            gb.set_diameter(int(n - 1));
        }
        if (prev) {
            // Both levels are in lexicographic order and each label extends
            // its parent's label, so one merge pass finds every parent.
            std::vector<VertexId> parents(n);
            VertexId p = 0;
            for (std::size_t v = 0; v < n; ++v) {
                auto vl = label(v);
                while (p < prev->vertex_count()) {
                    auto pl = prev->label(p);
                    if (pl.size() <= vl.size() && std::equal(pl.begin(), pl.end(), vl.begin())) break;
                    ++p;
                }
                if (p == prev->vertex_count()) throw StructuralError("vertex without parent at level " + std::to_string(k));
                parents[v] = p;
            }
            gb.set_parents(std::move(parents));
        }
        return gb.finish();
    }

private:
    const std::vector<Block>& blocks_locked(int k) const {
        if (k < 1) throw RangeError("levels start at 1");
        if (levels_.empty()) levels_.push_back({Block{Prefix{}, 1}});
        while (int(levels_.size()) < k) levels_.push_back(next_level(levels_.back(), int(levels_.size()) + 1));
        return levels_[k - 1];
    }

    BigInt count_locked(int k) const {
        PowerSum s;
        for (const Block& b : blocks_locked(k)) s.add_pow2(b.free_bits());
        return s.value();
    }

    std::pair<std::vector<BigInt>, BigInt> positions(int k, std::vector<const ThreadSpec*> ts) const {
        const auto& bl = blocks(k);
        std::vector<BigInt> pos(ts.size());
        std::vector<char> done(ts.size(), 0);
        PowerSum before;
        for (const Block& b : bl) {
            for (std::size_t i = 0; i < ts.size(); ++i) {
                if (done[i] || !prefix_of(b.prefix, *ts[i])) continue;
                BigInt off = 0;
                std::size_t fb = b.free_bits();
                for (std::size_t j = 0; j < fb; ++j)
                    if (ts[i]->at(b.prefix.size() + j)) boost::multiprecision::bit_set(off, unsigned(fb - 1 - j));
                pos[i] = before.value() + off;
                done[i] = 1;
            }
            before.add_pow2(b.free_bits());
        }
        for (char d : done)
            if (!d) throw ThreadError("thread not found at level " + std::to_string(k));
        return {std::move(pos), before.value()};
    }

    // New label length for a marked vertex of length m, building level j.
    std::size_t marked_depth(std::size_t m, int j, int active_from) const {
        switch (spec_.kind) {
            case TransformKind::none: return m + 1;
            case TransformKind::elliptic: return (j - active_from) % spec_.parameter == 0 ? m + 1 : m;
            case TransformKind::weak_hyperbolic: return m + std::size_t(spec_.parameter);
            case TransformKind::strong_hyperbolic: return m * std::size_t(spec_.parameter);
            case TransformKind::extreme_hyperbolic: {
                if (j - 1 >= 63) throw CapabilityError("extreme transform beyond level 63");
                return std::max(m + 1, std::size_t(1) << (j - 1));
            }
        }
        return m + 1;
    }

    std::vector<Block> next_level(const std::vector<Block>& cur, int j) const {
        std::vector<std::size_t> active;
        for (std::size_t m = 0; m < spec_.marked.size(); ++m)
            if (j - 1 >= spec_.marked[m].active_from) active.push_back(m);

        std::vector<Block> out;
        out.reserve(cur.size() + 8);
        struct Frame {
            Prefix p;
            std::size_t depth;
            std::vector<std::size_t> cand;
        };
        std::vector<Frame> stack;
        for (const Block& b : cur) {
            std::vector<std::size_t> cand;
            if (spec_.kind != TransformKind::none)
                for (std::size_t m : active)
                    if (prefix_of_marked(b.prefix, m)) cand.push_back(m);
            if (cand.empty()) {
                out.push_back({b.prefix, b.depth + 1});
                continue;
            }
            stack.push_back({b.prefix, b.depth, std::move(cand)});
            while (!stack.empty()) {
                Frame f = std::move(stack.back());
                stack.pop_back();
                if (f.cand.empty()) {
                    out.push_back({std::move(f.p), f.depth + 1});
                    continue;
                }
                std::size_t len = f.p.size();
                if (len == f.depth) {
                    int from = spec_.marked[f.cand.front()].active_from;
                    out.push_back({std::move(f.p), marked_depth(len, j, from)});
                    continue;
                }
                // Split into the two halves; push b first so a is emitted first.
                for (int c = 1; c >= 0; --c) {
                    Frame child;
                    child.depth = f.depth;
                    for (std::size_t m : f.cand)
                        if (spec_.marked[m].thread.at(len) == Symbol(c)) child.cand.push_back(m);
                    if (!child.cand.empty()) {
                        child.p.anchor = int(child.cand.front());
                        child.p.anchor_len = len + 1;
                    } else {
                        child.p.anchor = int(f.cand.front());
                        child.p.anchor_len = len;
                        child.p.tail = {Symbol(c)};
                    }
                    stack.push_back(std::move(child));
                }
            }
        }
        return out;
    }

    bool closed_;
    TransformSpec spec_;
    std::vector<std::size_t> lcp_;
    mutable std::recursive_mutex bmu_;
    mutable std::vector<std::vector<Block>> levels_;
    mutable int max_level_ = 0;
};

// ---------------------------------------------------------------------------
// Regularity on the block form. Every level of the family is a cycle (or path)
// on a complete prefix code in lexicographic order, and the inverse map is
// "longest prefix at the level below". Both axioms then reduce to: the level's
// arcs tile [0,1), and every arc boundary of level k is an arc boundary of
// level k+1. This reaches levels far past the materialisation limit.

// Block (p, L) as the arc [start, start + length) cut into pieces of `width`;
// all three are numerators over 2^scale.
struct DyadicRun {
    BigInt start, length, width;
    std::size_t block = 0;
};

inline std::vector<DyadicRun> dyadic_runs(const CircleFamily& c, int k, std::size_t scale) {
    std::vector<DyadicRun> out;
    const auto& bl = c.blocks(k);
    for (std::size_t i = 0; i < bl.size(); ++i) {
        const auto& b = bl[i];
        if (b.depth > scale || b.prefix.size() > b.depth) throw RangeError("block deeper than the scale");
        BigInt num = 0;
        for (std::size_t j = 0; j < b.prefix.size(); ++j) num = 2 * num + c.prefix_symbol(b.prefix, j);
        std::size_t up = scale - b.prefix.size();
        out.push_back({num << up, BigInt(1) << up, BigInt(1) << (scale - b.depth), i});
    }
    return out;
}

// Index of the first run that does not start where the previous one ended
// (runs.size() when the last one falls short of 2^scale); nullopt when they tile.
inline std::optional<std::size_t> tiling_defect(const std::vector<DyadicRun>& runs, std::size_t scale) {
    BigInt at = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].start != at || runs[i].length <= 0 || runs[i].width <= 0 || runs[i].length % runs[i].width != 0)
            return i;
        at += runs[i].length;
    }
    if (at != (BigInt(1) << scale)) return runs.size();
    return std::nullopt;
}

// First pair (lo run, hi run) where a lo piece boundary is not a hi piece boundary.
inline std::optional<std::pair<std::size_t, std::size_t>> refinement_defect(const std::vector<DyadicRun>& lo,
                                                                           const std::vector<DyadicRun>& hi) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const DyadicRun& B = lo[i];
        BigInt eB = B.start + B.length;
        while (j < hi.size() && hi[j].start + hi[j].length <= B.start) ++j;
        for (std::size_t m = j; m < hi.size() && hi[m].start < eB; ++m) {
            const DyadicRun& C = hi[m];
            BigInt a = std::max(B.start, C.start), e = std::min(eB, BigInt(C.start + C.length));
            BigInt p0 = B.start + ((a - B.start + B.width - 1) / B.width) * B.width;
            if (p0 >= e) continue;
            bool several = p0 + B.width < e;
            if ((p0 - C.start) % C.width != 0 || (several && B.width % C.width != 0)) return std::pair{i, m};
        }
    }
    return std::nullopt;
}

inline std::string format_block(const CircleFamily& c, const CircleFamily::Block& b) {
    std::string s;
    for (std::size_t i = 0; i < b.prefix.size(); ++i) s += (i ? "." : "") + c.alphabet().name(c.prefix_symbol(b.prefix, i));
    return s + "[" + std::to_string(b.free_bits()) + " free]";
}

inline RegularityReport check_block_regularity(const CircleFamily& c, int K, std::size_t max_reports = 20) {
    if (K < 1) throw RangeError("depth must be at least 1");
    RegularityReport r;
    auto scale_of = [&](int k) {
        std::size_t d = 0;
        for (const auto& b : c.blocks(k)) d = std::max(d, b.depth);
        return d;
    };
    auto report = [&](int level, std::string x, std::string y, std::string what) {
        if (r.counterexamples.size() < max_reports) r.counterexamples.push_back({level, std::move(x), std::move(y), std::move(what)});
    };
    for (int k = 1; k <= K; ++k) {
        std::size_t sc = scale_of(k);
        auto runs = dyadic_runs(c, k, sc);
        if (auto bad = tiling_defect(runs, sc)) {
            r.connectedness_ok = false;
            std::string x = *bad < runs.size() ? format_block(c, c.blocks(k)[*bad]) : "end";
            report(k, x, "", "level arcs do not tile the circle");
        }
        if (k == K) break;
        std::size_t sc2 = std::max(sc, scale_of(k + 1));
        auto lo = dyadic_runs(c, k, sc2), hi = dyadic_runs(c, k + 1, sc2);
        if (auto bad = refinement_defect(lo, hi)) {
            r.consistency_ok = false;
            report(k + 1, format_block(c, c.blocks(k)[bad->first]), format_block(c, c.blocks(k + 1)[bad->second]),
                   "a level " + std::to_string(k) + " boundary falls inside a level " + std::to_string(k + 1) + " vertex");
        }
    }
    return r;
}

}  // namespace asymgeo
