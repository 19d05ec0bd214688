#pragma once

// Pre-parametrization of a geodesic tower, the finite-level derivative, the
// curvature at a point along a tower and the curvature-weighted length tau.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "asymgeo/geodesics.hpp"

namespace asymgeo {

// Runs of g_{k+1} that project onto each vertex of g_k, as [first, last) index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> ext_runs(const Pattern& p, const GraphPath& lo,
                                                                 const GraphPath& hi) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    runs.reserve(lo.size());
    std::size_t i = 0;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        std::size_t first = i;
        while (i < hi.size() && p.ancestor(hi.level, hi.vertices[i], lo.level) == lo.vertices[j]) ++i;
        if (i == first) throw StructuralError("level " + std::to_string(hi.level) + " path does not extend the one below");
        runs.push_back({first, i});
    }
    if (i != hi.size()) throw StructuralError("level " + std::to_string(hi.level) + " path does not extend the one below");
    return runs;
}

// ext(x): the sub-path of g_{k+1} whose members project to x.
inline GraphPath ext_segment(const GeodesicTower& T, int k, VertexId x) {
    const GraphPath& lo = T.at(k);
    const GraphPath& hi = T.at(k + 1);
    auto it = std::find(lo.vertices.begin(), lo.vertices.end(), x);
    if (it == lo.vertices.end()) throw LookupError("vertex is not on the tower at level " + std::to_string(k));
    auto runs = ext_runs(*T.pattern, lo, hi);
    auto [a, b] = runs[std::size_t(it - lo.vertices.begin())];
    return make_path(T.metric(k + 1), std::vector<VertexId>(hi.vertices.begin() + long(a), hi.vertices.begin() + long(b)));
}

// Cell endpoints are exact fractions of the tower length l_gamma.
struct Cell {
    VertexId vertex = kNoVertex;
    Rational lo, hi;
    std::size_t parent = 0;  // index of the enclosing cell one level up
};

struct PartitionLevel {
    int level = 0;
    std::vector<Cell> cells;

    // Half-open cells [lo, hi); the last one is closed.
    std::size_t locate(const Rational& frac) const {
        if (frac < 0 || frac > 1) throw RangeError("parameter outside the tower");
        auto it = std::upper_bound(cells.begin(), cells.end(), frac, [](const Rational& t, const Cell& c) { return t < c.hi; });
        if (it == cells.end()) return cells.size() - 1;
        return std::size_t(it - cells.begin());
    }
};

struct Preparametrization {
    int start_level = 0;
    double length = 0;  // l_gamma
    std::vector<PartitionLevel> levels;

    const PartitionLevel& at(int k) const {
        if (k < start_level || k >= start_level + int(levels.size())) throw RangeError("no partition at that level");
        return levels[k - start_level];
    }
    double width(int k, std::size_t cell) const {
        const Cell& c = at(k).cells[cell];
        return static_cast<double>(c.hi - c.lo) * length;
    }
};

inline Preparametrization pre_parametrize(const GeodesicTower& T) {
    Preparametrization P;
    P.start_level = T.start_level;
    P.length = T.length();
    PartitionLevel first{T.start_level, {}};
    const GraphPath& g0 = T.at(T.start_level);
    const std::size_t m = g0.size();
    for (std::size_t i = 0; i < m; ++i) first.cells.push_back({g0.vertices[i], Rational(i, m), Rational(i + 1, m), 0});
    P.levels.push_back(std::move(first));
    for (int k = T.start_level; k < T.depth(); ++k) {
        const PartitionLevel& prev = P.levels.back();
        const GraphPath& hi = T.at(k + 1);
        auto runs = ext_runs(*T.pattern, T.at(k), hi);
        PartitionLevel next{k + 1, {}};
        next.cells.reserve(hi.size());
        for (std::size_t j = 0; j < runs.size(); ++j) {
            auto [a, b] = runs[j];
            const Cell& c = prev.cells[j];
            Rational w = (c.hi - c.lo) / Rational(b - a);
            for (std::size_t i = a; i < b; ++i) {
                Rational lo = c.lo + w * Rational(i - a);
                Rational hi_end = i + 1 == b ? c.hi : lo + w;
                next.cells.push_back({hi.vertices[i], lo, hi_end, j});
            }
        }
        for (std::size_t i = 0; i + 1 < next.cells.size(); ++i)
            if (next.cells[i].hi != next.cells[i + 1].lo) throw StructuralError("partition cells do not tile");
        P.levels.push_back(std::move(next));
    }
    return P;
}

// Finite-level derivative: d_k between the vertices of the cells at t and
// t +- s, over s, with s the width of the cell holding t; averaged over the
// directions that stay inside [0, l].
inline double derivative(const GeodesicTower& T, const Preparametrization& P, double t, int k) {
    if (P.length <= 0) throw RangeError("derivative of a zero-length tower");
    if (!(t > 0 && t < P.length)) throw RangeError("derivative needs an interior parameter");
    const PartitionLevel& L = P.at(k);
    const MetricTable& d = T.metric(k);
    Rational frac(t / P.length);
    std::size_t i = L.locate(frac);
    Rational s = L.cells[i].hi - L.cells[i].lo;
    double sum = 0;
    int n = 0;
    if (frac + s <= 1) {
        sum += d(L.cells[i].vertex, L.cells[L.locate(frac + s)].vertex) / static_cast<double>(s * P.length);
        ++n;
    }
    if (frac - s >= 0) {
        sum += d(L.cells[i].vertex, L.cells[L.locate(frac - s)].vertex) / static_cast<double>(s * P.length);
        ++n;
    }
    return sum / n;
}

// ---------------------------------------------------------------------------

struct CurvatureSample {
    int window = 0;         // n: target length l / 2^n
    int base_level = 0;     // first level of the window
    double length = 0;      // window length at its deepest level
    double exponent = 0;    // scaling exponent of the cell holding r
    double derivative = 0;  // plain finite-level ratio at the middle of the window
};

struct CurvatureEstimate {
    ThreadSpec point;
    const GeodesicTower* direction = nullptr;  // set when built on a caller's tower
    std::vector<CurvatureSample> samples;
    Extrapolation fit;
    double value() const { return fit.limit; }
    bool converged() const { return fit.converged; }
};

struct CurvatureOptions {
    int max_windows = 12;
    int span = 2;          // levels per window estimate; even, so alternating rules average out
    int min_cells = 16;    // a window starts at the first level where it spans this many cells
    double tol = 2e-3;     // extrapolation tolerance
};

// Sub-tower of T over the g_{k0} vertices [c-h, c+h] and everything below them.
inline GeodesicTower window_tower(const GeodesicTower& T, int k0, std::size_t c, std::size_t h, int last) {
    GeodesicTower W;
    W.pattern = T.pattern;
    W.kind = T.kind;
    W.start_level = k0;
    std::size_t a = c - h, b = c + h + 1;
    for (int k = k0; k <= last; ++k) {
        const GraphPath& g = T.at(k);
        if (k > k0) {
            auto runs = ext_runs(*T.pattern, T.at(k - 1), g);
            a = runs[a].first;
            b = runs[b - 1].second;
        }
        W.metrics.push_back(T.metric(k));
        W.levels.push_back(make_path(W.metrics.back(), std::vector<VertexId>(g.vertices.begin() + long(a), g.vertices.begin() + long(b))));
        W.lengths.push_back(W.metrics.back()(W.levels.back().front(), W.levels.back().back()));
    }
    const ApproxGraph& deep = T.pattern->level(last);
    W.u = ThreadSpec(deep.label_path(W.levels.back().front()), LabelPath{0});
    W.v = ThreadSpec(deep.label_path(W.levels.back().back()), LabelPath{0});
    W.length_fit = extrapolate(W.lengths);
    return W;
}

namespace detail {

inline std::size_t index_on(const GraphPath& g, VertexId v) {
    auto it = std::find(g.vertices.begin(), g.vertices.end(), v);
    return it == g.vertices.end() ? SIZE_MAX : std::size_t(it - g.vertices.begin());
}

}  // namespace detail

// Curvature at r along an existing tower. Each window is centred at r in
// steps at its base level; its estimate is ln(s_a/s_b) / ln(delta_a/delta_b)
// for the cell widths s of r and the one-step distances delta at the window's
// first and last level. The estimates are extrapolated across windows.
inline CurvatureEstimate curvature_on_tower(const GeodesicTower& T, const ThreadSpec& r, CurvatureOptions opt = {}) {
    if (opt.span < 2 || opt.span % 2) throw RangeError("curvature span must be a positive even number of levels");
    const Pattern& p = *T.pattern;
    CurvatureEstimate E;
    E.point = r;
    E.direction = &T;
    const double l = T.length();
    if (!(l > 0)) throw CurvatureUndefined("tower has zero length");

    std::vector<std::size_t> at(T.levels.size());
    std::vector<double> delta(T.levels.size());
    for (int k = T.start_level; k <= T.depth(); ++k) {
        const GraphPath& g = T.at(k);
        std::size_t i = detail::index_on(g, p.locate(k, r));
        if (i == SIZE_MAX) throw CurvatureUndefined("point is not on the tower at level " + std::to_string(k));
        at[k - T.start_level] = i;
        if (g.size() < 2) {
            delta[k - T.start_level] = 0;
            continue;
        }
        std::size_t j = i + 1 < g.size() ? i + 1 : i - 1;
        delta[k - T.start_level] = T.metric(k)(g.vertices[i], g.vertices[j]);
    }

    int k0 = T.start_level;
    for (int n = 1; n <= opt.max_windows; ++n) {
        const double target = l / std::ldexp(1.0, n);
        std::size_t h = 0;
        for (; k0 <= T.depth(); ++k0) {
            double dk = delta[k0 - T.start_level];
            if (dk <= 0) continue;
            h = std::size_t(std::floor(target / (2 * dk) + 1e-9));
            if (2 * h + 1 >= std::size_t(opt.min_cells)) break;
        }
        const int last = k0 + opt.span;
        if (last > T.depth()) break;
        const std::size_t c = at[k0 - T.start_level];
        if (c < h || c + h >= T.at(k0).size()) continue;  // r too close to an end for this window
        GeodesicTower W = window_tower(T, k0, c, h, last);
        // Locally unique geodesics at the window's base level.
        try {
            if (find_geodesics(W.metric(k0), W.at(k0).front(), W.at(k0).back(), 1).size() != 1)
                throw CurvatureUndefined("no geodesic between the window ends at level " + std::to_string(k0));
        } catch (const EnumerationOverflow&) {
            throw CurvatureUndefined("geodesics are not locally unique near the point at level " + std::to_string(k0));
        }
        Preparametrization P = pre_parametrize(W);
        std::size_t ia = h;
        std::size_t ib = detail::index_on(W.at(last), T.at(last).vertices[at[last - T.start_level]]);
        double sa = P.width(k0, ia), sb = P.width(last, ib);
        double da = delta[k0 - T.start_level], db = delta[last - T.start_level];
        CurvatureSample s;
        s.window = n;
        s.base_level = k0;
        s.length = W.lengths.back();
        s.exponent = std::log(sa / sb) / std::log(da / db);
        const Cell& cb = P.at(last).cells[ib];
        double t = static_cast<double>((cb.lo + cb.hi) / 2) * P.length;
        s.derivative = (t > 0 && t < P.length) ? derivative(W, P, t, last) : std::nan("");
        E.samples.push_back(s);
    }
    if (E.samples.empty()) throw CurvatureUndefined("tower too shallow for a single curvature window");
    std::vector<double> xs;
    for (auto& s : E.samples) xs.push_back(s.exponent);
    E.fit = extrapolate(xs, opt.tol);
    return E;
}

// Curvature at r in the direction of the geodesic from u to v.
inline CurvatureEstimate curvature_at(const Pattern& p, MetricKind kind, const ThreadSpec& r, const ThreadSpec& u,
                                      const ThreadSpec& v, int K, CurvatureOptions opt = {}, TowerOptions topt = {}) {
    try {
        GeodesicTower T = build_tower(p, kind, u, v, K, topt);
        CurvatureEstimate E = curvature_on_tower(T, r, opt);
        E.direction = nullptr;
        return E;
    } catch (const TowerBreak& e) {
        throw CurvatureUndefined(std::string("curvature undefined: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

// Curvature as a function of arc length from the start of a tower.
using CurvatureFn = std::function<double(double)>;

struct TauTable {
    std::vector<double> arc;  // d_gamma(r) of the requested points
    std::vector<double> tau;
    double length = 0;        // l_gamma
    double tau_end = 0;       // tau(r_gamma)
};

namespace detail {

// d_gamma along the deepest level path.
inline std::vector<double> arc_lengths(const GeodesicTower& T) {
    const GraphPath& g = T.at(T.depth());
    const MetricTable& d = T.metric(T.depth());
    auto row = d.row(g.front());
    std::vector<double> out;
    for (VertexId v : g.vertices) out.push_back((*row)[v]);
    return out;
}

}  // namespace detail

// tau(r_gamma) = l/n * sum of the curvature at the midpoints of n equal
// sub-segments. Intermediate points integrate the same step function, so every
// point reuses the n samples instead of refining towards the start.
inline TauTable tau_parametrize(const GeodesicTower& T, const CurvatureFn& kappa, int n, std::vector<double> arcs = {}) {
    if (n < 1) throw RangeError("tau needs at least one sub-segment");
    TauTable out;
    out.length = T.length();
    if (!(out.length > 0)) {
        out.arc = arcs;
        out.tau.assign(arcs.size(), 0.0);
        return out;
    }
    for (double a : arcs)
        if (a < 0 || a > out.length * (1 + 1e-12)) throw RangeError("arc length outside the tower");
    const double h = out.length / n;
    std::vector<double> k(n), cum(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        k[i] = kappa((i + 0.5) * h);
        cum[i + 1] = cum[i] + k[i] * h;
    }
    for (double a : arcs) {
        int i = std::min(n - 1, int(a / h));
        out.arc.push_back(a);
        out.tau.push_back(cum[i] + (a - i * h) * k[i]);
    }
    out.tau_end = cum[n];
    return out;
}

// Measured curvature along the tower: the point at arc length s is the deepest
// level vertex nearest to s, continued by its first child forever.
inline CurvatureFn tower_curvature_fn(const GeodesicTower& T, CurvatureOptions opt = {}) {
    auto arcs = std::make_shared<std::vector<double>>(detail::arc_lengths(T));
    auto cache = std::make_shared<std::map<std::size_t, double>>();
    const GeodesicTower* tp = &T;
    return [=](double s) {
        const auto& a = *arcs;
        std::size_t i = std::size_t(std::lower_bound(a.begin(), a.end(), s) - a.begin());
        if (i == a.size()) i = a.size() - 1;
        if (i > 0 && s - a[i - 1] < a[i] - s) --i;
        auto hit = cache->find(i);
        if (hit != cache->end()) return hit->second;
        const ApproxGraph& deep = tp->pattern->level(tp->depth());
        ThreadSpec r(deep.label_path(tp->at(tp->depth()).vertices[i]), LabelPath{0});
        CurvatureEstimate e = curvature_on_tower(*tp, r, opt);
        if (!e.converged()) throw CurvatureUndefined("curvature does not converge at arc length " + std::to_string(s));
        (*cache)[i] = e.value();
        return e.value();
    };
}

}  // namespace asymgeo
