#pragma once

// Finite (G_k, d_k)-geodesics, contraction, the extension relation between
// levels, and geodesic towers built level by level.

#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asymgeo/metrics.hpp"
#include "asymgeo/sequence.hpp"

namespace asymgeo {

struct GraphPath {
    int level = 0;
    std::vector<VertexId> vertices;
    double step_length = 0;  // sum of d_k over consecutive pairs

    VertexId front() const { return vertices.front(); }
    VertexId back() const { return vertices.back(); }
    std::size_t size() const { return vertices.size(); }
    bool operator==(const GraphPath& o) const { return level == o.level && vertices == o.vertices; }
};

inline GraphPath make_path(const MetricTable& d, std::vector<VertexId> vs) {
    if (vs.empty()) throw RangeError("empty path");
    const ApproxGraph& g = d.graph();
    GraphPath p{g.level(), std::move(vs), 0.0};
    for (std::size_t i = 1; i < p.vertices.size(); ++i) {
        VertexId a = p.vertices[i - 1], b = p.vertices[i];
        if (a == b || !g.adjacent(a, b)) throw RangeError("path has a non-edge at position " + std::to_string(i));
        p.step_length += d(a, b);
    }
    return p;
}

struct EnumerationOverflow : Error {
    std::vector<GraphPath> partial;
    std::size_t cap;
    EnumerationOverflow(std::size_t c, std::vector<GraphPath> got)
        : Error("path enumeration exceeded the cap of " + std::to_string(c) + " (partial results attached)"),
          partial(std::move(got)), cap(c) {}
};

// 10^5 unless ASYMGEO_MAX_PATHS says otherwise.
inline std::size_t default_path_cap() {
    if (const char* s = std::getenv("ASYMGEO_MAX_PATHS")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0' && v > 0) return std::size_t(v);
    }
    return 100000;
}

namespace detail {

// d(x,z) + d(z,y) for the endpoints of a path.
struct EndpointSum {
    std::shared_ptr<const MetricTable::Row> rx, ry;
    EndpointSum(const MetricTable& d, VertexId x, VertexId y) : rx(d.row(x)), ry(d.row(y)) {}
    double operator()(VertexId z) const { return (*rx)[z] + (*ry)[z]; }
};

// The locally minimizing condition at cur, between prev and next.
inline bool locally_minimal(const ApproxGraph& g, const EndpointSum& s, VertexId prev, VertexId cur, VertexId next) {
    const double here = s(cur) - 1e-12;
    auto a = g.neighbors(prev), b = g.neighbors(next);
    auto i = a.begin(), j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) ++i;
        else if (*j < *i) ++j;
        else {
            if (*i != cur && s(*i) < here) return false;
            ++i;
            ++j;
        }
    }
    return true;
}

inline bool label_less(const ApproxGraph& g, VertexId a, VertexId b) {
    auto x = g.label(a), y = g.label(b);
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

// Depth-first enumeration of minimum-step paths from s to t in increasing
// label order. Optional filters: the local geodesic condition, and a corridor
// given by a path one level down that the projection must contract to.
class PathSearch {
public:
    PathSearch(const MetricTable& d, VertexId s, VertexId t, bool geodesic,
               const std::vector<VertexId>* lower, std::size_t* budget)
        : g_(d.graph()), sum_(d, s, t), t_(t), geodesic_(geodesic), budget_(budget) {
        g_.bfs(t, dist_);
        if (lower) {
            lower_ = *lower;
            if (g_.parent(s) != lower_.front() || g_.parent(t) != lower_.back())
                throw RangeError("endpoints do not project onto the lower path");
        }
        path_.push_back(s);
        corridor_.push_back(0);
        frames_.push_back(expand(0));
    }

    std::optional<std::vector<VertexId>> next() {
        if (done_) return std::nullopt;
        if (path_.size() == 1 && path_[0] == t_) {
            done_ = true;
            if (!lower_.empty() && lower_.size() != 1) return std::nullopt;
            return path_;
        }
        while (!frames_.empty()) {
            Frame& f = frames_.back();
            if (f.next == f.cand.size()) {
                frames_.pop_back();
                path_.pop_back();
                corridor_.pop_back();
                continue;
            }
            auto [w, j] = f.cand[f.next++];
            if (budget_) {
                if (*budget_ == 0) throw TowerBreak(g_.level(), "search budget exhausted");
                --*budget_;
            }
            if (geodesic_ && path_.size() >= 2 &&
                !locally_minimal(g_, sum_, path_[path_.size() - 2], path_.back(), w))
                continue;
            path_.push_back(w);
            corridor_.push_back(j);
            if (w == t_) {
                std::vector<VertexId> out = path_;
                path_.pop_back();
                corridor_.pop_back();
                return out;
            }
            frames_.push_back(expand(path_.size() - 1));
        }
        done_ = true;
        return std::nullopt;
    }

private:
    struct Frame {
        std::vector<std::pair<VertexId, std::uint32_t>> cand;
        std::size_t next = 0;
    };

    Frame expand(std::size_t pos) {
        Frame f;
        VertexId v = path_[pos];
        std::uint32_t j = corridor_[pos];
        for (VertexId w : g_.neighbors(v)) {
            if (dist_[w] != dist_[v] - 1) continue;
            std::uint32_t jw = j;
            if (!lower_.empty()) {
                VertexId pw = g_.parent(w);
                if (pw == lower_[j]) jw = j;
                else if (j + 1 < lower_.size() && pw == lower_[j + 1]) jw = j + 1;
                else continue;
                // Each remaining corridor vertex needs at least one step.
                if (std::size_t(dist_[w]) < lower_.size() - 1 - jw) continue;
                if (w == t_ && jw + 1 != lower_.size()) continue;
            }
            f.cand.push_back({w, jw});
        }
        std::sort(f.cand.begin(), f.cand.end(), [&](auto& a, auto& b) { return label_less(g_, a.first, b.first); });
        return f;
    }

    const ApproxGraph& g_;
    EndpointSum sum_;
    VertexId t_;
    bool geodesic_;
    std::size_t* budget_;
    std::vector<int> dist_;
    std::vector<VertexId> lower_;
    std::vector<VertexId> path_;
    std::vector<std::uint32_t> corridor_;
    std::vector<Frame> frames_;
    bool done_ = false;
};

inline std::vector<GraphPath> enumerate(const MetricTable& d, VertexId x, VertexId y, std::size_t cap, bool geodesic) {
    const ApproxGraph& g = d.graph();
    if (x >= g.vertex_count() || y >= g.vertex_count()) throw LookupError("path endpoint not in the graph");
    PathSearch search(d, x, y, geodesic, nullptr, nullptr);
    std::vector<GraphPath> out;
    while (auto p = search.next()) {
        if (out.size() == cap) throw EnumerationOverflow(cap, std::move(out));
        out.push_back(make_path(d, std::move(*p)));
    }
    return out;
}

}  // namespace detail

// All minimum-step paths from x to y, in increasing label order.
inline std::vector<GraphPath> shortest_paths(const MetricTable& d, VertexId x, VertexId y,
                                             std::size_t cap = default_path_cap()) {
    return detail::enumerate(d, x, y, cap, false);
}

inline bool is_Gk_geodesic(const MetricTable& d, const GraphPath& p) {
    const ApproxGraph& g = d.graph();
    if (p.vertices.empty() || p.level != g.level()) return false;
    for (std::size_t i = 1; i < p.size(); ++i) {
        VertexId a = p.vertices[i - 1], b = p.vertices[i];
        if (a == b || !g.adjacent(a, b)) return false;
    }
    std::vector<int> dist;
    g.bfs(p.front(), dist);
    if (long(p.size()) - 1 != dist[p.back()]) return false;
    detail::EndpointSum s(d, p.front(), p.back());
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
        if (!detail::locally_minimal(g, s, p.vertices[i - 1], p.vertices[i], p.vertices[i + 1])) return false;
    return true;
}

inline std::vector<GraphPath> find_geodesics(const MetricTable& d, VertexId x, VertexId y,
                                             std::size_t cap = default_path_cap()) {
    return detail::enumerate(d, x, y, cap, true);
}

inline std::vector<VertexId> contract(const std::vector<VertexId>& p) {
    std::vector<VertexId> out;
    for (VertexId v : p)
        if (out.empty() || out.back() != v) out.push_back(v);
    return out;
}

// Level-k1 prefixes of the vertices of a deeper path, before contraction.
inline std::vector<VertexId> project_path(const Pattern& pat, const GraphPath& p, int k1) {
    std::vector<VertexId> out;
    out.reserve(p.size());
    for (VertexId v : p.vertices) out.push_back(pat.ancestor(p.level, v, k1));
    return out;
}

inline bool is_extension(const Pattern& pat, const GraphPath& hi, const GraphPath& lo) {
    if (lo.level >= hi.level) return false;
    return contract(project_path(pat, hi, lo.level)) == lo.vertices;
}

// Geodesics at level lo.level+1 between s and t that extend lo, in label order.
inline std::vector<GraphPath> extending_geodesics(const MetricTable& d, const GraphPath& lo,
                                                  VertexId s, VertexId t, std::size_t cap = default_path_cap()) {
    if (d.level() != lo.level + 1) throw RangeError("extensions are searched one level up");
    detail::PathSearch search(d, s, t, true, &lo.vertices, nullptr);
    std::vector<GraphPath> out;
    while (auto p = search.next()) {
        if (out.size() == cap) throw EnumerationOverflow(cap, std::move(out));
        out.push_back(make_path(d, std::move(*p)));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct GeodesicTower {
    const Pattern* pattern = nullptr;  // not owned
    MetricKind kind = MetricKind::path;
    ThreadSpec u, v;
    int start_level = 1;
    std::vector<GraphPath> levels;     // levels[i] lives at start_level + i
    std::vector<MetricTable> metrics;  // d_k for the same levels
    std::vector<double> lengths;       // d_k(u(k), v(k))
    Extrapolation length_fit;
    std::size_t backtracks = 0;

    int depth() const { return start_level + int(levels.size()) - 1; }
    bool has_level(int k) const { return k >= start_level && k <= depth(); }
    const GraphPath& at(int k) const {
        if (!has_level(k)) throw RangeError("tower has no level " + std::to_string(k));
        return levels[k - start_level];
    }
    const MetricTable& metric(int k) const {
        if (!has_level(k)) throw RangeError("tower has no level " + std::to_string(k));
        return metrics[k - start_level];
    }
    // l_gamma: the extrapolated endpoint distance.
    double length() const { return length_fit.limit; }
};

struct TowerOptions {
    int start_level = 0;            // 0: the first level where u(k) != v(k)
    std::size_t budget = 20000000;  // total candidate steps over all levels
};

inline GeodesicTower build_tower(const Pattern& pat, MetricKind kind, const ThreadSpec& u, const ThreadSpec& v, int K,
                                 TowerOptions opt = {}) {
    if (K < 1) throw RangeError("tower depth must be at least 1");
    GeodesicTower T;
    T.pattern = &pat;
    T.kind = kind;
    T.u = u;
    T.v = v;

    int n = 0;
    for (int k = 1; k <= K && n == 0; ++k)
        if (pat.locate(k, u) != pat.locate(k, v)) n = k;
    if (n == 0) {
        // u and v agree down to K: a degenerate tower of single vertices.
        T.start_level = K;
        T.metrics.push_back(make_metric(pat.level(K), kind));
        T.levels.push_back(make_path(T.metrics.back(), {pat.locate(K, u)}));
        T.lengths.push_back(0.0);
        T.length_fit = extrapolate(T.lengths);
        return T;
    }
    if (opt.start_level > 0) {
        if (opt.start_level < n) throw RangeError("start level precedes the first level where the endpoints differ");
        if (opt.start_level > K) throw RangeError("start level beyond the tower depth");
        n = opt.start_level;
    }
    T.start_level = n;
    for (int k = n; k <= K; ++k) T.metrics.push_back(make_metric(pat.level(k), kind));

    std::size_t budget = opt.budget;
    std::vector<std::unique_ptr<detail::PathSearch>> search(K - n + 1);
    std::vector<std::vector<VertexId>> chosen(K - n + 1);
    auto open = [&](int k) {
        int i = k - n;
        search[i] = std::make_unique<detail::PathSearch>(T.metrics[i], pat.locate(k, u), pat.locate(k, v), true,
                                                         i == 0 ? nullptr : &chosen[i - 1], &budget);
    };
    int k = n, deepest_fail = 0;
    open(k);
    while (true) {
        auto p = search[k - n]->next();
        if (!p) {
            deepest_fail = std::max(deepest_fail, k);
            if (k == n) throw TowerBreak(deepest_fail, "no geodesic at this level extends any choice below it");
            search[k - n].reset();
            --k;
            ++T.backtracks;
            continue;
        }
        chosen[k - n] = std::move(*p);
        if (k == K) break;
        open(++k);
    }
    for (int j = n; j <= K; ++j) {
        T.levels.push_back(make_path(T.metrics[j - n], chosen[j - n]));
        T.lengths.push_back(T.metrics[j - n](chosen[j - n].front(), chosen[j - n].back()));
    }
    T.length_fit = extrapolate(T.lengths);
    return T;
}

struct AdditivityReport {
    int level = 0;
    double max_defect = 0;
    double tolerance = 0;  // twice the one-step distance at that level
    std::size_t checked = 0;
    bool ok = true;
};

// |d(u,v) - d(u,z) - d(z,v)| for interior z of the deepest level path; all of
// them when samples is 0.
inline AdditivityReport check_additivity(const GeodesicTower& T, std::size_t samples = 0, unsigned seed = 1) {
    AdditivityReport r;
    r.level = T.depth();
    const GraphPath& g = T.at(r.level);
    const MetricTable& d = T.metric(r.level);
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < g.size(); ++i) step = std::min(step, d(g.vertices[i - 1], g.vertices[i]));
    if (g.size() < 3) return r;
    r.tolerance = 2 * step;
    double uv = d(g.front(), g.back());
    auto check = [&](std::size_t i) {
        VertexId z = g.vertices[i];
        r.max_defect = std::max(r.max_defect, std::abs(uv - d(g.front(), z) - d(z, g.back())));
        ++r.checked;
    };
    if (samples == 0 || samples >= g.size() - 2) {
        for (std::size_t i = 1; i + 1 < g.size(); ++i) check(i);
    } else {
        std::mt19937 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(1, g.size() - 2);
        for (std::size_t s = 0; s < samples; ++s) check(pick(rng));
    }
    r.ok = r.max_defect <= r.tolerance;
    return r;
}

}  // namespace asymgeo
