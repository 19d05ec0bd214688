#pragma once

// Level metrics: normalised path metric, the Euclidean metric built from
// straight lines and rectangle corners, metric contract checks and the
// asymptotic pseudo-metric between threads.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <unordered_map>
#include <vector>

#include "asymgeo/circle_family.hpp"
#include "asymgeo/sequence.hpp"

namespace asymgeo {

using Rational = boost::multiprecision::cpp_rational;

enum class MetricKind { path, euclidean };

inline const char* to_string(MetricKind k) { return k == MetricKind::path ? "path" : "euclidean"; }

inline MetricKind parse_metric_kind(std::string_view s) {
    if (s == "path" || s == "taxi" || s == "taxicab") return MetricKind::path;
    if (s == "euclidean") return MetricKind::euclidean;
    throw UsageError("unknown metric '" + std::string(s) + "'");
}

// Normalising length in steps: the square uses its side, everything else
// its step diameter.
inline int path_normalizer(const ApproxGraph& g) {
    if (g.grid() && g.grid()->topology == GridInfo::Topology::lattice) return g.grid()->n;
    return g.diameter_steps();
}

// ---------------------------------------------------------------------------
// Straight lines on graphs with quadrilateral faces.

// True iff no face containing both x and y also contains z.
inline bool line_test(const ApproxGraph& g, VertexId x, VertexId y, VertexId z) {
    if (!g.has_faces()) throw CapabilityError("line detection needs face data");
    if (x == y || y == z || x == z || !g.adjacent(x, y) || !g.adjacent(y, z))
        throw RangeError("line_test needs a path x-y-z of distinct vertices");
    for (auto f : g.faces_of(x)) {
        const Face& face = g.faces()[f];
        bool has_y = std::find(face.begin(), face.end(), y) != face.end();
        bool has_z = std::find(face.begin(), face.end(), z) != face.end();
        if (has_y && has_z) return false;
    }
    return true;
}

// Maximal straight chains. Every edge lies on exactly one line; a line is
// either an open chain or a closed loop.
class LineIndex {
public:
    struct Line {
        std::vector<VertexId> vertices;
        bool closed = false;
    };
    struct Slot {
        std::uint32_t line;
        std::uint32_t pos;
    };

    explicit LineIndex(const ApproxGraph& g) : g_(&g) {
        if (!g.has_faces()) throw CapabilityError("line detection needs face data");
        std::map<std::pair<VertexId, VertexId>, std::uint32_t> edge_line;
        auto key = [](VertexId a, VertexId b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
        for (VertexId x = 0; x < g.vertex_count(); ++x)
            for (VertexId y : g.neighbors(x)) {
                if (y < x || edge_line.count(key(x, y))) continue;
                Line line;
                std::vector<VertexId> fwd{x, y};
                bool closed = false;
                // Walk forwards from x->y, then backwards from y->x.
                while (true) {
                    VertexId z = next(fwd[fwd.size() - 2], fwd.back());
                    if (z == kNoVertex) break;
                    if (z == x && next(fwd.back(), x) == y) {
                        closed = true;
                        break;
                    }
                    fwd.push_back(z);
                    if (fwd.size() > g.vertex_count() + 1) throw GeometryError("runaway line walk");
                }
                std::vector<VertexId> bwd;
                if (!closed) {
                    VertexId a = y, b = x;
                    while (true) {
                        VertexId z = next(a, b);
                        if (z == kNoVertex) break;
                        bwd.push_back(z);
                        a = b;
                        b = z;
                        if (bwd.size() > g.vertex_count()) throw GeometryError("runaway line walk");
                    }
                }
                line.vertices.assign(bwd.rbegin(), bwd.rend());
                line.vertices.insert(line.vertices.end(), fwd.begin(), fwd.end());
                line.closed = closed;
                auto id = std::uint32_t(lines_.size());
                const auto& vs = line.vertices;
                for (std::size_t i = 0; i + 1 < vs.size(); ++i) edge_line[key(vs[i], vs[i + 1])] = id;
                if (closed) edge_line[key(vs.back(), vs.front())] = id;
                lines_.push_back(std::move(line));
            }
        slots_off_.assign(g.vertex_count() + 1, 0);
        for (auto& l : lines_)
            for (VertexId v : l.vertices) ++slots_off_[v + 1];
        for (std::size_t v = 0; v < g.vertex_count(); ++v) slots_off_[v + 1] += slots_off_[v];
        slots_.resize(slots_off_.back());
        std::vector<std::uint32_t> fill(slots_off_.begin(), slots_off_.end() - 1);
        for (std::uint32_t i = 0; i < lines_.size(); ++i)
            for (std::uint32_t p = 0; p < lines_[i].vertices.size(); ++p)
                slots_[fill[lines_[i].vertices[p]]++] = {i, p};
    }

    // The straight continuation of x->y, or kNoVertex where the line ends.
    VertexId next(VertexId x, VertexId y) const {
        VertexId found = kNoVertex;
        for (VertexId z : g_->neighbors(y)) {
            if (z == x) continue;
            if (line_test(*g_, x, y, z)) {
                if (found != kNoVertex) throw GeometryError("line continuation is not unique");
                found = z;
            }
        }
        return found;
    }

    const std::vector<Line>& lines() const { return lines_; }
    std::span<const Slot> slots(VertexId v) const {
        return std::span<const Slot>(slots_).subspan(slots_off_[v], slots_off_[v + 1] - slots_off_[v]);
    }

    // Steps between positions p and q along line l.
    std::uint32_t along(std::uint32_t l, std::uint32_t p, std::uint32_t q) const {
        std::uint32_t d = p > q ? p - q : q - p;
        if (lines_[l].closed) d = std::min<std::uint32_t>(d, std::uint32_t(lines_[l].vertices.size()) - d);
        return d;
    }

    std::optional<std::uint32_t> position(std::uint32_t l, VertexId v) const {
        for (const Slot& s : slots(v))
            if (s.line == l) return s.pos;
        return std::nullopt;
    }

private:
    const ApproxGraph* g_;
    std::vector<Line> lines_;
    std::vector<std::uint32_t> slots_off_;
    std::vector<Slot> slots_;
};

struct Corners {
    VertexId z1 = kNoVertex, z2 = kNoVertex;
    bool colinear = false;
    // Leg lengths in steps for z1: x to z1 and y to z1.
    std::uint32_t leg_x = 0, leg_y = 0;
};

// The two rectangle corners of x and y: vertices joined by a line to x and
// by a line to y. For colinear x, y both corners are y itself.
inline Corners corner_points(const LineIndex& li, VertexId x, VertexId y) {
    if (x == y) throw RangeError("corner_points needs distinct vertices");
    Corners c;
    for (const auto& sx : li.slots(x))
        if (auto py = li.position(sx.line, y)) {
            c.z1 = c.z2 = y;
            c.colinear = true;
            c.leg_x = li.along(sx.line, sx.pos, *py);
            c.leg_y = 0;
            return c;
        }
    std::vector<std::tuple<VertexId, std::uint32_t, std::uint32_t>> found;
    for (const auto& sx : li.slots(x))
        for (const auto& sy : li.slots(y)) {
            const auto& lx = li.lines()[sx.line].vertices;
            for (std::uint32_t p = 0; p < lx.size(); ++p)
                if (auto q = li.position(sy.line, lx[p]))
                    found.emplace_back(lx[p], li.along(sx.line, sx.pos, p), li.along(sy.line, sy.pos, *q));
        }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end(),
                            [](auto& a, auto& b) { return std::get<0>(a) == std::get<0>(b); }),
                found.end());
    if (found.size() != 2)
        throw GeometryError("expected two rectangle corners, found " + std::to_string(found.size()));
    c.z1 = std::get<0>(found[0]);
    c.z2 = std::get<0>(found[1]);
    c.leg_x = std::get<1>(found[0]);
    c.leg_y = std::get<2>(found[0]);
    return c;
}

// ---------------------------------------------------------------------------

class MetricTable;
Corners corner_points(const ApproxGraph& g, VertexId x, VertexId y, const MetricTable& taxi);

class MetricTable {
public:
    using Row = std::vector<double>;

    int level() const { return g_->level(); }
    MetricKind kind() const { return kind_; }
    const ApproxGraph& graph() const { return *g_; }
    std::size_t size() const { return g_->vertex_count(); }
    // Distances are step-like quantities divided by this.
    int normalizer() const { return normalizer_; }

    double operator()(VertexId a, VertexId b) const {
        if (a == b) return 0.0;
        if (pair_fn_) return pair_fn_(a, b);
        if (unit_edges_ && g_->adjacent(a, b)) return 1.0 / normalizer_;
        return (*row(a))[b];
    }

    std::shared_ptr<const Row> row(VertexId a) const {
        std::lock_guard lock(cache_->mu);
        auto& rows = cache_->rows;
        auto it = rows.find(a);
        if (it != rows.end()) return it->second;
        if (rows.size() * size() > (std::size_t(1) << 25)) rows.clear();
        auto r = std::make_shared<const Row>(row_fn_(a));
        rows.emplace(a, r);
        return r;
    }

    // Exact value for path metrics: steps / normalizer.
    Rational exact(VertexId a, VertexId b) const {
        if (kind_ != MetricKind::path) throw CapabilityError("exact values exist for path metrics only");
        return Rational(steps(a, b), normalizer_);
    }
    long steps(VertexId a, VertexId b) const {
        if (kind_ != MetricKind::path) throw CapabilityError("step counts exist for path metrics only");
        return std::lround((*this)(a, b) * normalizer_);
    }

    // Explicit table, for fixtures.
    static MetricTable from_matrix(const ApproxGraph& g, MetricKind kind, std::vector<Row> m, int normalizer = 1) {
        if (m.size() != g.vertex_count()) throw RangeError("matrix size mismatch");
        MetricTable t(g, kind, normalizer);
        auto shared = std::make_shared<std::vector<Row>>(std::move(m));
        t.row_fn_ = [shared](VertexId a) { return (*shared)[a]; };
        return t;
    }

private:
    friend MetricTable path_metric(const ApproxGraph&);
    friend MetricTable euclidean_metric(const ApproxGraph&, const MetricTable&);

    MetricTable(const ApproxGraph& g, MetricKind kind, int normalizer) : g_(&g), kind_(kind), normalizer_(normalizer) {}

    const ApproxGraph* g_;
    MetricKind kind_;
    int normalizer_;
    std::function<Row(VertexId)> row_fn_;
    std::function<double(VertexId, VertexId)> pair_fn_;
    bool unit_edges_ = false;  // every edge has length 1/normalizer, no row needed
    struct Cache {
        std::mutex mu;
        std::unordered_map<VertexId, std::shared_ptr<const Row>> rows;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

inline MetricTable path_metric(const ApproxGraph& g) {
    MetricTable t(g, MetricKind::path, path_normalizer(g));
    const ApproxGraph* gp = &g;
    double norm = t.normalizer_;
    t.unit_edges_ = true;
    t.row_fn_ = [gp, norm](VertexId a) {
        std::vector<int> d;
        gp->bfs(a, d);
        MetricTable::Row r(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i] < 0) throw StructuralError("graph is disconnected");
            r[i] = d[i] / norm;
        }
        return r;
    };
    return t;
}

// The Euclidean metric of a grid-like graph. On the square and the torus it
// is built from the rectangle corners: sqrt(leg_x^2 + leg_y^2) with legs
// measured along the lines. The Klein bottle (and the degenerate level-1
// torus) use the quotient formula over reflected/translated representatives
// of the cell centres.
inline MetricTable euclidean_metric(const ApproxGraph& g, const MetricTable& taxi) {
    if (!g.has_faces() || !g.grid()) throw CapabilityError("the Euclidean metric needs a grid graph with faces");
    if (&taxi.graph() != &g || taxi.kind() != MetricKind::path)
        throw RangeError("taxi table must be the path metric of the same graph");
    const GridInfo gi = *g.grid();
    MetricTable t(g, MetricKind::euclidean, gi.n);
    const double n = gi.n;
    bool corners = gi.topology == GridInfo::Topology::lattice ||
                   (gi.topology == GridInfo::Topology::torus && gi.n >= 4);
    if (corners) {
        auto li = std::make_shared<LineIndex>(g);
        t.pair_fn_ = [li, n](VertexId a, VertexId b) {
            Corners c = corner_points(*li, a, b);
            return std::hypot(double(c.leg_x), double(c.leg_y)) / n;
        };
    } else {
        bool klein = gi.topology == GridInfo::Topology::klein;
        t.pair_fn_ = [gi, n, klein](VertexId a, VertexId b) {
            auto [ax, ay] = gi.coord(a);
            auto [bx, by] = gi.coord(b);
            double px = (ax + 0.5) / n, py = (ay + 0.5) / n, qx = (bx + 0.5) / n, qy = (by + 0.5) / n;
            double best = 1e300;
            for (int j = -1; j <= 1; ++j) {
                double ix = (klein && (j & 1)) ? 1.0 - qx : qx;
                for (int i = -1; i <= 1; ++i) best = std::min(best, std::hypot(ix + i - px, qy + j - py));
            }
            return best;
        };
    }
    auto pf = t.pair_fn_;
    std::size_t count = g.vertex_count();
    t.row_fn_ = [pf, count](VertexId a) {
        MetricTable::Row r(count);
        for (VertexId b = 0; b < count; ++b) r[b] = a == b ? 0.0 : pf(a, b);
        return r;
    };
    return t;
}

// Convenience form that rebuilds the line index; prefer the LineIndex overload in loops.
inline Corners corner_points(const ApproxGraph& g, VertexId x, VertexId y, const MetricTable& taxi) {
    if (&taxi.graph() != &g) throw RangeError("taxi table belongs to another graph");
    LineIndex li(g);
    return corner_points(li, x, y);
}

inline MetricTable make_metric(const ApproxGraph& g, MetricKind kind) {
    if (kind == MetricKind::path) return path_metric(g);
    MetricTable taxi = path_metric(g);
    return euclidean_metric(g, taxi);
}

// ---------------------------------------------------------------------------
// Checks

struct ContractViolation {
    VertexId x, y;
    double distance;
    bool adjacent;
};

struct ContractReport {
    bool ok = true;
    double min_positive = 0;
    std::vector<ContractViolation> violations;
};

// The minimum positive distance must occur exactly on edges.
inline ContractReport metric_contract_check(const MetricTable& m, double rel_tol = 1e-9) {
    const ApproxGraph& g = m.graph();
    ContractReport r;
    double mn = INFINITY;
    for (VertexId x = 0; x < g.vertex_count(); ++x) {
        auto row = m.row(x);
        for (VertexId y = 0; y < g.vertex_count(); ++y)
            if (y != x && (*row)[y] > 0) mn = std::min(mn, (*row)[y]);
    }
    r.min_positive = mn;
    for (VertexId x = 0; x < g.vertex_count(); ++x) {
        auto row = m.row(x);
        for (VertexId y = x + 1; y < g.vertex_count(); ++y) {
            double d = (*row)[y];
            bool minimal = d > 0 && std::abs(d - mn) <= rel_tol * mn;
            bool adj = g.adjacent(x, y);
            if (minimal != adj || d <= 0) {
                r.ok = false;
                if (r.violations.size() < 50) r.violations.push_back({x, y, d, adj});
            }
        }
    }
    return r;
}

struct AxiomReport {
    bool ok = true;
    std::size_t checked = 0;
    double worst_triangle_excess = 0;
    std::string first_failure;
};

// Identity, symmetry and the triangle inequality; exhaustive when
// samples == 0, otherwise over random triples.
inline AxiomReport metric_axioms_check(const MetricTable& m, std::size_t samples = 0, unsigned seed = 1,
                                       double tol = 1e-12) {
    AxiomReport r;
    const auto n = VertexId(m.size());
    auto fail = [&](const std::string& why) {
        if (r.ok) r.first_failure = why;
        r.ok = false;
    };
    auto triple = [&](VertexId a, VertexId b, VertexId c) {
        ++r.checked;
        double ab = m(a, b), bc = m(b, c), ac = m(a, c);
        double ex = ac - ab - bc;
        r.worst_triangle_excess = std::max(r.worst_triangle_excess, ex);
        if (ex > tol) fail("triangle inequality fails");
    };
    if (samples == 0) {
        std::vector<std::shared_ptr<const MetricTable::Row>> rows(n);
        for (VertexId a = 0; a < n; ++a) rows[a] = m.row(a);
        for (VertexId a = 0; a < n; ++a) {
            if ((*rows[a])[a] != 0) fail("d(x,x) != 0");
            for (VertexId b = 0; b < n; ++b) {
                double ab = (*rows[a])[b];
                if (ab != (*rows[b])[a]) fail("asymmetric");
                if (a != b && ab <= 0) fail("distinct vertices at distance 0");
                for (VertexId c = 0; c < n; ++c) {
                    double ex = (*rows[a])[c] - ab - (*rows[b])[c];
                    r.worst_triangle_excess = std::max(r.worst_triangle_excess, ex);
                    if (ex > tol) fail("triangle inequality fails");
                }
            }
            r.checked += std::size_t(n) * n;
        }
        return r;
    }
    std::mt19937 rng(seed);
    std::uniform_int_distribution<VertexId> pick(0, n - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        VertexId a = pick(rng), b = pick(rng), c = pick(rng);
        if (m(a, b) != m(b, a)) fail("asymmetric");
        if (a != b && m(a, b) <= 0) fail("distinct vertices at distance 0");
        triple(a, b, c);
    }
    return r;
}

struct DiagonalReport {
    bool ok = true;
    double min_ratio = INFINITY, max_ratio = 0;
};

// Face diagonals in units of the edge length must satisfy 1 < o <= 2.
inline DiagonalReport face_diagonal_check(const MetricTable& m) {
    const ApproxGraph& g = m.graph();
    if (!g.has_faces()) throw CapabilityError("face diagonal check needs faces");
    DiagonalReport r;
    for (const Face& f : g.faces())
        for (int i = 0; i < 2; ++i) {
            double edge = std::min(m(f[i], f[i + 1]), m(f[(i + 3) % 4], f[i]));
            double o = m(f[i], f[i + 2]) / edge;
            r.min_ratio = std::min(r.min_ratio, o);
            r.max_ratio = std::max(r.max_ratio, o);
            if (!(o > 1 + 1e-12 && o <= 2 + 1e-12)) r.ok = false;
        }
    return r;
}

// ---------------------------------------------------------------------------
// Limits

struct Extrapolation {
    double limit = NAN;
    bool converged = false;
    double rate = NAN;        // |delta_n / delta_{n-1}|
    double last_delta = NAN;
};

// Aitken/Richardson on the last three values. Converged when the last step
// is within tol, or when steps shrink by a factor >= 1.5 (geometric tail).
inline Extrapolation extrapolate(const std::vector<double>& xs, double tol = 1e-3) {
    Extrapolation e;
    if (xs.empty()) return e;
    e.limit = xs.back();
    if (xs.size() < 2) return e;
    double d2 = xs.back() - xs[xs.size() - 2];
    e.last_delta = d2;
    if (xs.size() < 3) {
        e.converged = std::abs(d2) <= tol;
        return e;
    }
    double d1 = xs[xs.size() - 2] - xs[xs.size() - 3];
    if (d1 == 0 && d2 == 0) {
        e.rate = 0;
        e.converged = true;
        return e;
    }
    if (d1 != 0) {
        double r = d2 / d1;
        e.rate = std::abs(r);
        if (std::abs(r) <= 1 / 1.5) {
            e.limit = xs.back() + d2 * r / (1 - r);
            e.converged = true;
            return e;
        }
    }
    e.converged = std::abs(d2) <= tol && (d1 == 0 || std::abs(d2) <= std::abs(d1));
    return e;
}

struct LevelSample {
    int level;
    double distance;
};

struct PseudoMetricEstimate {
    ThreadSpec u, v;
    MetricKind kind = MetricKind::path;
    std::vector<LevelSample> samples;
    Extrapolation fit;
    // max_k |d_{k+1} - d_k| * 2^k over the samples.
    double refinement_constant = 0;
};

// d_k(u(k), v(k)) for one level.
inline double thread_distance(const Pattern& p, MetricKind kind, const ThreadSpec& u, const ThreadSpec& v, int k) {
    if (kind == MetricKind::path)
        if (auto* cf = dynamic_cast<const CircleFamily*>(&p)) return cf->path_distance(k, u, v);
    if (kind == MetricKind::euclidean && !p.has_faces())
        throw CapabilityError(p.name() + " has no faces, so no Euclidean metric");
    const ApproxGraph& g = p.level(k);
    VertexId a = p.locate(k, u), b = p.locate(k, v);
    MetricTable m = make_metric(g, kind);
    return m(a, b);
}

inline PseudoMetricEstimate pseudo_metric_estimate(const Pattern& p, MetricKind kind, const ThreadSpec& u,
                                                   const ThreadSpec& v, int k_min, int k_max, double tol = 1e-3) {
    if (k_min < 1 || k_max < k_min) throw RangeError("bad level range");
    PseudoMetricEstimate e{u, v, kind, {}, {}, 0};
    std::vector<double> xs;
    for (int k = k_min; k <= k_max; ++k) {
        double d = thread_distance(p, kind, u, v, k);
        e.samples.push_back({k, d});
        xs.push_back(d);
    }
    for (std::size_t i = 1; i < xs.size(); ++i)
        e.refinement_constant =
            std::max(e.refinement_constant, std::abs(xs[i] - xs[i - 1]) * std::ldexp(1.0, e.samples[i - 1].level));
    e.fit = extrapolate(xs, tol);
    return e;
}

}  // namespace asymgeo
