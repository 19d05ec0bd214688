#include <gtest/gtest.h>

#include <random>
#include <set>

#include "asymgeo/metrics.hpp"
#include "asymgeo/patterns.hpp"
#include "oracles.hpp"

using namespace asymgeo;

namespace {

VertexId vtx(const Pattern& p, int k, const char* lab) { return p.level(k).require(parse_label(lab, p.alphabet())); }

// Vertices reachable from x by walking straight, found by scanning every
// vertex for the continuation instead of using the line index.
std::set<VertexId> straight_reach(const ApproxGraph& g, VertexId x) {
    std::set<VertexId> out;
    for (VertexId y0 : g.neighbors(x)) {
        VertexId a = x, b = y0;
        out.insert(b);
        for (std::size_t steps = 0; steps < g.vertex_count(); ++steps) {
            VertexId next = kNoVertex;
            for (VertexId z = 0; z < g.vertex_count(); ++z)
                if (z != a && z != b && g.adjacent(b, z) && line_test(g, a, b, z)) next = z;
            if (next == kNoVertex || next == x) break;
            out.insert(next);
            a = b;
            b = next;
        }
    }
    return out;
}

}  // namespace

// ---- path metric ----

TEST(PathMetric, CircleExamples) {
    auto c = make_circle();
    const ApproxGraph& g = c->level(3);
    MetricTable m = path_metric(g);
    EXPECT_EQ(m.normalizer(), 4);
    EXPECT_DOUBLE_EQ(m(vtx(*c, 3, "a.a.a"), vtx(*c, 3, "b.a.a")), 1.0);
    EXPECT_DOUBLE_EQ(m(vtx(*c, 3, "a.a.a"), vtx(*c, 3, "a.a.b")), 0.25);
    EXPECT_EQ(m.exact(vtx(*c, 3, "a.a.a"), vtx(*c, 3, "a.b.a")), Rational(1, 2));
}

TEST(PathMetric, IntervalEndpoints) {
    auto p = make_interval();
    for (int k = 1; k <= 8; ++k) {
        const ApproxGraph& g = p->level(k);
        MetricTable m = path_metric(g);
        EXPECT_DOUBLE_EQ(m(0, VertexId(g.vertex_count() - 1)), 1.0);
    }
}

TEST(PathMetric, MatchesReferenceBfs) {
    for (const char* name : {"torus", "klein", "square", "weak-hyperbolic-circle(2)"}) {
        auto p = make_pattern(name);
        const ApproxGraph& g = p->level(3);
        MetricTable m = path_metric(g);
        for (VertexId s = 0; s < g.vertex_count(); s += 3) {
            auto d = oracle::bfs(g, s);
            for (VertexId t = 0; t < g.vertex_count(); ++t) EXPECT_EQ(m.steps(s, t), d[t]) << name;
        }
    }
}

TEST(PathMetric, DisconnectedGraphRejected) {
    GraphBuilder gb(1);
    gb.add_vertex(LabelPath{0});
    gb.add_vertex(LabelPath{1});
    EXPECT_THROW(gb.finish(), StructuralError);
}

TEST(PathMetric, SquareTaxicabIsL1) {
    auto p = make_square();
    for (int k = 1; k <= 5; ++k) {
        const ApproxGraph& g = p->level(k);
        const GridInfo& gi = *g.grid();
        MetricTable m = path_metric(g);
        Rational side(gi.n);
        for (VertexId a = 0; a < g.vertex_count(); a += 5)
            for (VertexId b = 0; b < g.vertex_count(); ++b) {
                auto [ax, ay] = gi.coord(a);
                auto [bx, by] = gi.coord(b);
                Rational l1 = Rational(std::abs(ax - bx)) / side + Rational(std::abs(ay - by)) / side;
                ASSERT_EQ(m.exact(a, b), l1);
            }
    }
}

// ---- lines and corners ----

TEST(LineTest, SquareTriples) {
    auto p = make_square();
    const ApproxGraph& g = p->level(2);
    const GridInfo& gi = *g.grid();
    EXPECT_TRUE(line_test(g, gi.id(0, 1), gi.id(1, 1), gi.id(2, 1)));
    EXPECT_TRUE(line_test(g, gi.id(0, 0), gi.id(1, 0), gi.id(2, 0)));
    EXPECT_FALSE(line_test(g, gi.id(0, 0), gi.id(1, 0), gi.id(1, 1)));
    EXPECT_FALSE(line_test(g, gi.id(1, 1), gi.id(2, 1), gi.id(2, 2)));
    EXPECT_THROW(line_test(g, gi.id(0, 0), gi.id(2, 0), gi.id(3, 0)), RangeError);
}

TEST(LineTest, TorusAndCapability) {
    auto t = make_torus();
    const ApproxGraph& g = t->level(2);
    const GridInfo& gi = *g.grid();
    EXPECT_TRUE(line_test(g, gi.id(3, 2), gi.id(0, 2), gi.id(1, 2)));
    EXPECT_TRUE(line_test(g, gi.id(1, 3), gi.id(1, 0), gi.id(1, 1)));
    EXPECT_FALSE(line_test(g, gi.id(3, 2), gi.id(0, 2), gi.id(0, 3)));
    auto c = make_circle();
    EXPECT_THROW(line_test(c->level(3), 0, 1, 2), CapabilityError);
    EXPECT_THROW(LineIndex(c->level(3)), CapabilityError);
}

TEST(Lines, SquareAndTorusLinesAreRowsAndColumns) {
    auto s = make_square();
    LineIndex ls(s->level(3));
    EXPECT_EQ(ls.lines().size(), 18u);
    for (auto& l : ls.lines()) {
        EXPECT_FALSE(l.closed);
        EXPECT_EQ(l.vertices.size(), 9u);
    }
    auto t = make_torus();
    LineIndex lt(t->level(3));
    EXPECT_EQ(lt.lines().size(), 16u);
    for (auto& l : lt.lines()) {
        EXPECT_TRUE(l.closed);
        EXPECT_EQ(l.vertices.size(), 8u);
    }
    // Klein: rows are loops of n cells, columns pair up into loops of 2n cells.
    auto kl = make_klein();
    LineIndex lk(kl->level(3));
    std::multiset<std::size_t> sizes;
    for (auto& l : lk.lines()) sizes.insert(l.vertices.size());
    EXPECT_EQ(sizes.count(8), 8u);
    EXPECT_EQ(sizes.count(16), 4u);
}

TEST(Lines, LegsEqualTaxicabDistance) {
    for (const char* name : {"square", "torus"}) {
        auto p = make_pattern(name);
        const ApproxGraph& g = p->level(3);
        LineIndex li(g);
        MetricTable taxi = path_metric(g);
        for (VertexId x = 0; x < g.vertex_count(); ++x)
            for (VertexId y = 0; y < g.vertex_count(); ++y) {
                if (x == y) continue;
                Corners c = corner_points(li, x, y);
                EXPECT_EQ(long(c.leg_x), taxi.steps(x, c.z1)) << name;
                EXPECT_EQ(long(c.leg_y), taxi.steps(y, c.z1)) << name;
            }
    }
}

TEST(Corners, SquareExample) {
    auto p = make_square();
    const ApproxGraph& g = p->level(2);
    const GridInfo& gi = *g.grid();
    MetricTable taxi = path_metric(g);
    Corners c = corner_points(g, gi.id(0, 0), gi.id(2, 3), taxi);
    std::set<VertexId> got{c.z1, c.z2};
    EXPECT_EQ(got, (std::set<VertexId>{gi.id(0, 3), gi.id(2, 0)}));
    // Cross-check with an exhaustive scan using line_test directly.
    auto rx = straight_reach(g, gi.id(0, 0));
    auto ry = straight_reach(g, gi.id(2, 3));
    std::set<VertexId> both;
    for (VertexId z : rx)
        if (ry.count(z)) both.insert(z);
    EXPECT_EQ(both, got);
}

TEST(Corners, ColinearDegenerate) {
    auto p = make_square();
    const ApproxGraph& g = p->level(2);
    const GridInfo& gi = *g.grid();
    LineIndex li(g);
    Corners c = corner_points(li, gi.id(0, 2), gi.id(3, 2));
    EXPECT_TRUE(c.colinear);
    EXPECT_EQ(c.z1, c.z2);
    EXPECT_EQ(gi.coord(c.z1).second, 2);
    EXPECT_EQ(c.leg_x, 3u);
}

TEST(Corners, TorusGenericPairsHaveTwoCorners) {
    auto p = make_torus();
    const ApproxGraph& g = p->level(3);
    const GridInfo& gi = *g.grid();
    LineIndex li(g);
    for (VertexId x = 0; x < g.vertex_count(); x += 7)
        for (VertexId y = 0; y < g.vertex_count(); ++y) {
            auto [ax, ay] = gi.coord(x);
            auto [bx, by] = gi.coord(y);
            if (ax == bx || ay == by) continue;
            Corners c = corner_points(li, x, y);
            std::set<VertexId> got{c.z1, c.z2};
            EXPECT_EQ(got, (std::set<VertexId>{gi.id(bx, ay), gi.id(ax, by)}));
        }
}

TEST(Corners, KleinSeamIsAmbiguous) {
    auto p = make_klein();
    const ApproxGraph& g = p->level(3);
    const GridInfo& gi = *g.grid();
    LineIndex li(g);
    EXPECT_THROW(corner_points(li, gi.id(0, 0), gi.id(2, 3)), GeometryError);
}

// ---- Euclidean metric ----

TEST(Euclidean, SquareExamples) {
    auto p = make_square();
    const ApproxGraph& g = p->level(3);
    const GridInfo& gi = *g.grid();
    MetricTable taxi = path_metric(g);
    MetricTable e = euclidean_metric(g, taxi);
    EXPECT_NEAR(e(gi.id(0, 0), gi.id(3, 4)), 5.0 / 8.0, 1e-15);
    EXPECT_NEAR(e(gi.id(0, 0), gi.id(3, 4)), std::hypot(3.0 / 8, 4.0 / 8), 1e-15);
    for (int x = 0; x <= 8; ++x) EXPECT_DOUBLE_EQ(e(gi.id(0, 5), gi.id(x, 5)), taxi(gi.id(0, 5), gi.id(x, 5)));
}

TEST(Euclidean, SquareMatchesCoordinates) {
    auto p = make_square();
    for (int k = 1; k <= 3; ++k) {
        const ApproxGraph& g = p->level(k);
        const GridInfo& gi = *g.grid();
        MetricTable e = make_metric(g, MetricKind::euclidean);
        for (VertexId a = 0; a < g.vertex_count(); ++a) {
            auto row = e.row(a);
            for (VertexId b = 0; b < g.vertex_count(); ++b) {
                auto [ax, ay] = gi.coord(a);
                auto [bx, by] = gi.coord(b);
                EXPECT_NEAR((*row)[b], std::hypot(ax - bx, ay - by) / gi.n, 1e-12);
            }
        }
    }
}

TEST(Euclidean, TorusSeamPairWraps) {
    auto p = make_torus();
    const ApproxGraph& g = p->level(3);
    const GridInfo& gi = *g.grid();
    MetricTable e = make_metric(g, MetricKind::euclidean);
    VertexId a = gi.id(0, 0), b = gi.id(7, 6);
    double unwrapped = std::hypot(7.0, 6.0) / 8;
    EXPECT_LT(e(a, b), unwrapped);
    EXPECT_NEAR(e(a, b), std::hypot(1.0, 2.0) / 8, 1e-15);
}

TEST(Euclidean, TorusAndKleinMatchQuotientOracle) {
    auto t = make_torus();
    for (int k = 1; k <= 4; ++k) {
        const ApproxGraph& g = t->level(k);
        const GridInfo& gi = *g.grid();
        MetricTable e = make_metric(g, MetricKind::euclidean);
        double n = gi.n;
        for (VertexId a = 0; a < g.vertex_count(); ++a)
            for (VertexId b = 0; b < g.vertex_count(); ++b) {
                auto [ax, ay] = gi.coord(a);
                auto [bx, by] = gi.coord(b);
                EXPECT_NEAR(e(a, b), oracle::torus_distance((ax + .5) / n, (ay + .5) / n, (bx + .5) / n, (by + .5) / n), 1e-12);
            }
    }
    // Klein: the reflected neighbour across the seam is one step away.
    auto kl = make_klein();
    const ApproxGraph& g = kl->level(3);
    const GridInfo& gi = *g.grid();
    MetricTable e = make_metric(g, MetricKind::euclidean);
    EXPECT_NEAR(e(gi.id(1, 7), gi.id(6, 0)), 1.0 / 8, 1e-15);
    // Nearest copy of (1.5, 0.5) across the seam sits at (-1.5, 8.5).
    EXPECT_NEAR(e(gi.id(1, 7), gi.id(1, 0)), std::hypot(3.0, 1.0) / 8, 1e-15);
    EXPECT_TRUE(metric_axioms_check(e).ok);
}

TEST(Euclidean, RejectedWithoutFaces) {
    auto c = make_circle();
    const ApproxGraph& g = c->level(3);
    MetricTable taxi = path_metric(g);
    EXPECT_THROW(euclidean_metric(g, taxi), CapabilityError);
    EXPECT_THROW(thread_distance(*c, MetricKind::euclidean, ThreadSpec({}, LabelPath{0}), ThreadSpec({}, LabelPath{1}), 3),
                 CapabilityError);
}

// ---- contract and axioms ----

TEST(Contract, PassesOnBuiltInTables) {
    EXPECT_TRUE(metric_contract_check(path_metric(make_circle()->level(5))).ok);
    auto s = make_square();
    MetricTable e = make_metric(s->level(3), MetricKind::euclidean);
    ContractReport r = metric_contract_check(e);
    EXPECT_TRUE(r.ok);
    EXPECT_DOUBLE_EQ(r.min_positive, 1.0 / 8);
}

TEST(Contract, AdversarialTableFails) {
    auto c = make_circle();
    const ApproxGraph& g = c->level(3);
    MetricTable base = path_metric(g);
    std::vector<MetricTable::Row> m(g.vertex_count());
    for (VertexId a = 0; a < g.vertex_count(); ++a) m[a] = *base.row(a);
    // Pull a non-adjacent pair down to the edge length.
    m[0][2] = m[2][0] = 0.25;
    ContractReport r = metric_contract_check(MetricTable::from_matrix(g, MetricKind::path, m, 4));
    EXPECT_FALSE(r.ok);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].x, 0u);
    EXPECT_EQ(r.violations[0].y, 2u);
    EXPECT_FALSE(r.violations[0].adjacent);
}

TEST(Axioms, ExhaustiveSmallLevels) {
    for (int k = 1; k <= 8; ++k) EXPECT_TRUE(metric_axioms_check(path_metric(make_circle()->level(k))).ok);
    for (const char* name : {"square", "torus", "klein"}) {
        auto p = make_pattern(name);
        for (int k = 1; k <= 3; ++k)
            for (MetricKind kind : {MetricKind::path, MetricKind::euclidean}) {
                AxiomReport r = metric_axioms_check(make_metric(p->level(k), kind));
                EXPECT_TRUE(r.ok) << name << " " << k << " " << r.first_failure;
            }
    }
}

TEST(Axioms, SampledLargerLevels) {
    auto p = make_square();
    AxiomReport r = metric_axioms_check(make_metric(p->level(6), MetricKind::euclidean), 3000, 5);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.checked, 3000u);
}

TEST(Axioms, FaceDiagonalBound) {
    for (const char* name : {"square", "torus", "klein"}) {
        auto p = make_pattern(name);
        for (int k = 2; k <= 4; ++k) {
            DiagonalReport d = face_diagonal_check(make_metric(p->level(k), MetricKind::euclidean));
            EXPECT_TRUE(d.ok) << name;
            EXPECT_NEAR(d.min_ratio, std::sqrt(2.0), 1e-12);
            DiagonalReport t = face_diagonal_check(make_metric(p->level(k), MetricKind::path));
            EXPECT_TRUE(t.ok);
            EXPECT_DOUBLE_EQ(t.max_ratio, 2.0);
        }
    }
}

// ---- extrapolation and pseudo-metric ----

TEST(Extrapolate, GeometricTailAndTolerance) {
    Extrapolation e = extrapolate({0.5, 0.25, 0.125, 0.0625});
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.limit, 0.0, 1e-15);
    EXPECT_NEAR(e.rate, 0.5, 1e-15);
    Extrapolation f = extrapolate({1, 1, 1});
    EXPECT_TRUE(f.converged);
    EXPECT_EQ(f.limit, 1);
    Extrapolation g = extrapolate({1, 0.5, 1, 0.5});
    EXPECT_FALSE(g.converged);
    Extrapolation h = extrapolate({2.0, 2.0 + 1e-4, 2.0 + 1.9e-4}, 1e-3);
    EXPECT_TRUE(h.converged);
    EXPECT_FALSE(extrapolate({1.0}).converged);
}

TEST(PseudoMetric, CircleWrapPointHalves) {
    auto c = make_circle();
    ThreadSpec a({}, LabelPath{0}), b({}, LabelPath{1}), anti(LabelPath{1}, LabelPath{0});
    PseudoMetricEstimate e = pseudo_metric_estimate(*c, MetricKind::path, a, b, 1, 12);
    for (auto& s : e.samples) EXPECT_DOUBLE_EQ(s.distance, std::ldexp(1.0, 1 - s.level));
    EXPECT_TRUE(e.fit.converged);
    EXPECT_NEAR(e.fit.limit, 0.0, 1e-12);
    PseudoMetricEstimate f = pseudo_metric_estimate(*c, MetricKind::path, a, anti, 1, 12);
    for (auto& s : f.samples) EXPECT_DOUBLE_EQ(s.distance, 1.0);
    EXPECT_NEAR(f.fit.limit, 1.0, 1e-12);
}

TEST(PseudoMetric, BlockFormMatchesMaterialisedGraphs) {
    Alphabet ab({"a", "b"});
    std::vector<ThreadSpec> ts = {parse_thread(":(a)", ab), parse_thread(":(b)", ab), parse_thread("b:(a)", ab),
                                  parse_thread("a.b:(b.a)", ab), parse_thread("a:(a.b.b)", ab)};
    for (const char* name : {"circle", "interval", "elliptic-circle(2)", "weak-hyperbolic-circle(2)",
                             "strong-hyperbolic-circle(2,extreme)", "dense-hyperbolic-circle(2)"}) {
        auto p = make_pattern(name);
        auto* cf = dynamic_cast<CircleFamily*>(p.get());
        for (int k = 1; k <= std::min(8, p->max_level()); ++k) {
            MetricTable m = path_metric(p->level(k));
            for (auto& u : ts)
                for (auto& v : ts)
                    EXPECT_DOUBLE_EQ(cf->path_distance(k, u, v), m(p->locate(k, u), p->locate(k, v))) << name << k;
        }
    }
}

TEST(PseudoMetric, ExtremeRepulsion) {
    auto p = make_pattern("strong-hyperbolic-circle(2,extreme)");
    Alphabet ab({"a", "b"});
    ThreadSpec abar = parse_thread(":(a)", ab);
    PseudoMetricEstimate e = pseudo_metric_estimate(*p, MetricKind::path, parse_thread("a.b:(a.b.b)", ab), abar, 2, 16);
    EXPECT_NEAR(e.samples.back().distance, 1.0, 0.05);
}
