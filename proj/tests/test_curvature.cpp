#include <gtest/gtest.h>

#include "asymgeo/curvature.hpp"
#include "asymgeo/patterns.hpp"

using namespace asymgeo;

namespace {

const Alphabet kAB({"a", "b"});
ThreadSpec th(const char* s, const Alphabet& a = kAB) { return parse_thread(s, a); }

// Number of g_{k+1} vertices whose parent is x, by a plain scan.
std::size_t children_on_path(const Pattern& p, const GeodesicTower& T, int k, VertexId x) {
    std::size_t n = 0;
    for (VertexId y : T.at(k + 1).vertices) n += p.project(k + 1, y) == x;
    return n;
}

// The circle family with the wrap edge between ā(k) and b̄(k) removed at every level.
class OpenedWrap : public Pattern {
public:
    explicit OpenedWrap(std::shared_ptr<const Pattern> base)
        : Pattern("opened-" + base->name(), base->alphabet(), base->kind()), base_(std::move(base)) {}
    int max_level() const override { return std::min(10, base_->max_level()); }

protected:
    ApproxGraph make_level(int k, const ApproxGraph*) const override {
        const ApproxGraph& g = base_->level(k);
        VertexId a = base_->locate(k, ThreadSpec({}, LabelPath{0})), b = base_->locate(k, ThreadSpec({}, LabelPath{1}));
        GraphBuilder gb(k);
        for (VertexId v = 0; v < g.vertex_count(); ++v) gb.add_vertex(g.label(v));
        for (VertexId v = 0; v < g.vertex_count(); ++v)
            for (VertexId w : g.neighbors(v)) {
                if (w < v) continue;
                int m = g.multiplicity(v, w) - ((v == std::min(a, b) && w == std::max(a, b)) ? 1 : 0);
                for (int i = 0; i < m; ++i) gb.add_edge(v, w);
            }
        if (k > 1) gb.set_parents(g.parents());
        return gb.finish();
    }

private:
    std::shared_ptr<const Pattern> base_;
};

}  // namespace

// ---- ext segments ----

TEST(Ext, FlatCircleSplitsInTwo) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 9);
    for (int k = 1; k < 9; ++k) {
        const GraphPath& g = T.at(k);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            EXPECT_EQ(ext_segment(T, k, g.vertices[i]).size(), 2u);
            EXPECT_EQ(children_on_path(*c, T, k, g.vertices[i]), 2u);
        }
        // The far end b.ā(k) keeps only its first child on the arc.
        EXPECT_EQ(ext_segment(T, k, g.back()).size(), 1u);
    }
}

TEST(Ext, EllipticFrozenVertexPersists) {
    auto p = make_pattern("elliptic-circle(2)");
    GeodesicTower T = build_tower(*p, MetricKind::path, th("b.b.b:(a)"), th("a.a.b:(a)"), 12);
    std::vector<std::size_t> sizes;
    for (int k = 2; k < 12; ++k) {
        VertexId a = p->locate(k, th(":(a)"));
        GraphPath e = ext_segment(T, k, a);
        EXPECT_EQ(e.size(), children_on_path(*p, T, k, a));
        sizes.push_back(e.size());
        if (e.size() == 1) {
            EXPECT_EQ(p->level(k + 1).label_path(e.front()), p->level(k).label_path(a));
        }
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) EXPECT_EQ(sizes[i] * sizes[i + 1], 2u);
}

TEST(Ext, WeakHyperbolicMarkedVertexJumps) {
    auto p = make_pattern("weak-hyperbolic-circle(2)");
    GeodesicTower T = build_tower(*p, MetricKind::path, th("b.b.b:(a)"), th("a.a.b:(a)"), 10);
    for (int k = 3; k < 10; ++k) {
        VertexId a = p->locate(k, th(":(a)"));
        EXPECT_EQ(ext_segment(T, k, a).size(), 4u);
        EXPECT_EQ(children_on_path(*p, T, k, a), 4u);
    }
    EXPECT_THROW(ext_segment(T, 5, p->locate(5, th("b.a:(a)"))), LookupError);
}

// ---- pre-parametrization ----

TEST(PreParam, FirstPartitionSplitsEqually) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 6);
    Preparametrization P = pre_parametrize(T);
    ASSERT_EQ(P.at(1).cells.size(), 2u);
    EXPECT_EQ(P.at(1).cells[0].lo, Rational(0));
    EXPECT_EQ(P.at(1).cells[0].hi, Rational(1, 2));
    EXPECT_EQ(P.at(1).cells[1].hi, Rational(1));
    EXPECT_DOUBLE_EQ(P.length, 1.0);
    GeodesicTower D = build_tower(*c, MetricKind::path, th("a.b:(a)"), th("a.b:(a)"), 4);
    Preparametrization Q = pre_parametrize(D);
    ASSERT_EQ(Q.levels.size(), 1u);
    ASSERT_EQ(Q.levels[0].cells.size(), 1u);
    EXPECT_EQ(Q.levels[0].cells[0].lo, Rational(0));
    EXPECT_EQ(Q.levels[0].cells[0].hi, Rational(1));
}

TEST(PreParam, CellsNestAndTileExactly) {
    struct Case {
        const char* pattern;
        const char* u;
        const char* v;
        int K;
    };
    for (Case cs : {Case{"circle", ":(a)", "a.b.b:(a)", 12}, Case{"elliptic-circle(2)", "b.b.b:(a)", "a.a.b:(a)", 12},
                    Case{"weak-hyperbolic-circle(2)", "b.b.b:(a)", "a.a.b:(a)", 10},
                    Case{"dense-hyperbolic-circle(2)", "b.a:(a)", "a.a.b:(b)", 10}, Case{"torus", ":(a)", "a.b:(b)", 7}}) {
        auto p = make_pattern(cs.pattern);
        GeodesicTower T = build_tower(*p, MetricKind::path, th(cs.u, p->alphabet()), th(cs.v, p->alphabet()), cs.K);
        Preparametrization P = pre_parametrize(T);
        for (int k = T.start_level; k <= T.depth(); ++k) {
            const auto& cells = P.at(k).cells;
            ASSERT_EQ(cells.size(), T.at(k).size());
            EXPECT_EQ(cells.front().lo, Rational(0));
            EXPECT_EQ(cells.back().hi, Rational(1));
            for (std::size_t i = 0; i < cells.size(); ++i) {
                EXPECT_EQ(cells[i].vertex, T.at(k).vertices[i]);
                EXPECT_LT(cells[i].lo, cells[i].hi);
                if (i + 1 < cells.size()) {
                    EXPECT_EQ(cells[i].hi, cells[i + 1].lo);
                }
                if (k > T.start_level) {
                    const Cell& up = P.at(k - 1).cells[cells[i].parent];
                    EXPECT_EQ(p->project(k, cells[i].vertex), up.vertex);
                    EXPECT_GE(cells[i].lo, up.lo);
                    EXPECT_LE(cells[i].hi, up.hi);
                }
            }
            // Children of one parent share its width equally.
            if (k == T.start_level) continue;
            for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
                if (cells[i].parent == cells[i + 1].parent) {
                    EXPECT_EQ(cells[i].hi - cells[i].lo, cells[i + 1].hi - cells[i + 1].lo);
                }
            }
        }
    }
}

TEST(PreParam, OpenedHyperbolicCircleProportions) {
    auto base = make_pattern("weak-hyperbolic-circle(2)");
    OpenedWrap p(base);
    GeodesicTower T = build_tower(p, MetricKind::path, th(":(a)"), th(":(b)"), 6);
    EXPECT_DOUBLE_EQ(T.length(), 1.0);
    Preparametrization P = pre_parametrize(T);
    auto widths = [&](int k) {
        std::vector<Rational> w;
        for (auto& c : P.at(k).cells) w.push_back(c.hi - c.lo);
        return w;
    };
    EXPECT_EQ(widths(1), (std::vector<Rational>{Rational(1, 2), Rational(1, 2)}));
    EXPECT_EQ(widths(2), std::vector<Rational>(4, Rational(1, 4)));
    // From level 3 the end cells split four ways, everything else in two.
    auto w3 = widths(3);
    ASSERT_EQ(w3.size(), 12u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(w3[i], Rational(1, 16));
        EXPECT_EQ(w3[11 - i], Rational(1, 16));
    }
    for (int i = 4; i < 8; ++i) EXPECT_EQ(w3[i], Rational(1, 8));
    for (int k = 3; k < 6; ++k) {
        auto a = widths(k), b = widths(k + 1);
        EXPECT_EQ(a.front() / b.front(), Rational(4));
        EXPECT_EQ(a.back() / b.back(), Rational(4));
    }
}

TEST(PreParam, IdentifiedThreadsShareAParameter) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th("b.b.b:(a)"), th("a.a.b:(a)"), 12);
    Preparametrization P = pre_parametrize(T);
    const auto& L = P.at(12);
    auto centre = [&](const ThreadSpec& t) {
        VertexId v = c->locate(12, t);
        for (auto& cell : L.cells)
            if (cell.vertex == v) return static_cast<double>((cell.lo + cell.hi) / 2);
        return -1.0;
    };
    double a = centre(th(":(a)")), b = centre(th(":(b)"));
    ASSERT_GE(a, 0);
    ASSERT_GE(b, 0);
    EXPECT_LE(std::abs(a - b), static_cast<double>(L.cells[0].hi - L.cells[0].lo) * 1.000001);
}

// ---- derivative ----

TEST(Derivative, FlatCircleIsOne) {
    // u and v sit symmetrically about the boundary of the two level-1 cells.
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th("a.b.b:(a)"), th("b.a.a:(b)"), 12);
    Preparametrization P = pre_parametrize(T);
    for (double f : {0.1, 0.25, 0.5, 0.73, 0.9}) EXPECT_NEAR(derivative(T, P, f * P.length, 12), 1.0, 0.05) << f;
    // A cell boundary belongs to the cell on its right; the last cell is closed.
    const auto& L = P.at(8);
    for (std::size_t i = 0; i + 1 < L.cells.size(); ++i) EXPECT_EQ(L.locate(L.cells[i].hi), i + 1);
    EXPECT_EQ(L.locate(Rational(1)), L.cells.size() - 1);
    EXPECT_THROW(derivative(T, P, 0.0, 12), RangeError);
    EXPECT_THROW(derivative(T, P, P.length, 12), RangeError);
}

TEST(Derivative, UnbalancedStartCellsBiasTheRatio) {
    // From ā to b.ā the first level-1 cell carries the whole arc but one
    // vertex, so its descendants are squeezed into half the parameter range.
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 12);
    Preparametrization P = pre_parametrize(T);
    for (double t : {0.1, 0.25, 0.4}) EXPECT_DOUBLE_EQ(derivative(T, P, t, 12), 2.0);
}

// ---- curvature ----

TEST(Curvature, FlatCircleEverywhere) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 14);
    for (const char* r : {"a.a.b:(a)", "a.a.b.b:(b.a)", "a.b:(a)", "a.b.a.b:(b)", "a.b.b.a:(a.b)", "a.a.b.a.b.b:(a)",
                          "a.b.a:(a.a.b)", "a.b.b:(a)"}) {
        CurvatureEstimate e = curvature_on_tower(T, th(r));
        EXPECT_TRUE(e.converged()) << r;
        EXPECT_NEAR(e.value(), 1.0, 0.05) << r;
        // The plain ratio carries at most the m/(m-1) bias of a window with m >= 17 base cells.
        for (auto& s : e.samples) EXPECT_NEAR(s.derivative, 1.0, 1.0 / 16 + 1e-9);
    }
}

TEST(Curvature, FlatTorusAlongARow) {
    auto t = make_torus();
    GeodesicTower T = build_tower(*t, MetricKind::path, th(":(a)", t->alphabet()), th("a.b:(b)", t->alphabet()), 9);
    for (const char* r : {"a.a.b:(a)", "a.a.b.b:(a)", "a.b:(a)", "a.b.a.b:(a)", "a.a.b.b.b:(a)", "a.b.a:(a)",
                          "a.a.b.a:(b.a)", "a.b.a.a.b:(a)"}) {
        CurvatureEstimate e = curvature_on_tower(T, th(r, t->alphabet()));
        EXPECT_GE(e.samples.size(), 2u) << r;
        EXPECT_TRUE(e.converged()) << r;
        EXPECT_NEAR(e.value(), 1.0, 0.05) << r;
    }
}

TEST(Curvature, EllipticPointIsHalf) {
    auto p = make_pattern("elliptic-circle(2)");
    CurvatureEstimate e = curvature_at(*p, MetricKind::path, th(":(a)"), th("b.b.b:(a)"), th("a.a.b:(a)"), 14);
    EXPECT_TRUE(e.converged());
    EXPECT_NEAR(e.value(), 0.5, 0.05);
    // Away from the marked point the elliptic circle is flat.
    CurvatureEstimate f = curvature_at(*p, MetricKind::path, th("b.a:(a)"), th("a.b.b:(a)"), th("b.a.a:(b)"), 14);
    EXPECT_NEAR(f.value(), 1.0, 0.05);
}

TEST(Curvature, HyperbolicPointIsTwo) {
    auto p = make_pattern("weak-hyperbolic-circle(2)");
    CurvatureEstimate e = curvature_at(*p, MetricKind::path, th(":(a)"), th("b.b.b:(a)"), th("a.a.b:(a)"), 14);
    EXPECT_TRUE(e.converged());
    EXPECT_NEAR(e.value(), 2.0, 0.1);
    for (std::size_t i = 1; i < e.samples.size(); ++i) EXPECT_LT(e.samples[i].length, e.samples[i - 1].length);
}

TEST(Curvature, WindowAndStartLevelIndependence) {
    auto p = make_pattern("weak-hyperbolic-circle(2)");
    ThreadSpec r = th(":(a)"), u = th("b.b.b:(a)"), v = th("a.a.b:(a)");
    CurvatureOptions wide;
    wide.min_cells = 32;
    CurvatureEstimate a = curvature_at(*p, MetricKind::path, r, u, v, 14);
    CurvatureEstimate b = curvature_at(*p, MetricKind::path, r, u, v, 14, wide);
    EXPECT_NEAR(a.value(), b.value(), 0.02);
    TowerOptions shifted;
    shifted.start_level = 2;
    CurvatureEstimate c = curvature_at(*p, MetricKind::path, r, u, v, 14, {}, shifted);
    EXPECT_NEAR(a.value(), c.value(), 0.02);
    auto e = make_pattern("elliptic-circle(2)");
    EXPECT_NEAR(curvature_at(*e, MetricKind::path, r, u, v, 14).value(),
                curvature_at(*e, MetricKind::path, r, u, v, 14, {}, shifted).value(), 0.02);
}

TEST(Curvature, UndefinedCases) {
    auto c = make_circle();
    EXPECT_THROW(curvature_at(*c, MetricKind::path, th("b.a:(a)"), th(":(a)"), th("a.b:(a)"), 12), CurvatureUndefined);
    // The strong transform moves the geodesic to the other side of the circle.
    auto s = make_pattern("strong-hyperbolic-circle(2)");
    EXPECT_THROW(curvature_at(*s, MetricKind::path, th(":(a)"), th("b.b.b:(a)"), th("a.a.b:(a)"), 6), CurvatureUndefined);
    GeodesicTower D = build_tower(*c, MetricKind::path, th("a:(a)"), th("a:(a)"), 4);
    EXPECT_THROW(curvature_on_tower(D, th("a:(a)")), CurvatureUndefined);
    GeodesicTower shallow = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 5);
    EXPECT_THROW(curvature_on_tower(shallow, th("a.b:(a)")), CurvatureUndefined);
}

// ---- tau ----

TEST(Tau, FlatCircleGivesLength) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th(":(a)"), th("b:(a)"), 14);
    TauTable tau = tau_parametrize(T, tower_curvature_fn(T), 8, {0.25, 0.5});
    EXPECT_NEAR(tau.tau_end, T.length(), 1e-2);
    EXPECT_NEAR(tau.tau[0], 0.25, 1e-2);
    EXPECT_NEAR(tau.tau[1], 0.5, 1e-2);
}

TEST(Tau, ConstantCurvatureScalesLength) {
    auto c = make_circle();
    GeodesicTower T = build_tower(*c, MetricKind::path, th("b.b.b:(a)"), th("a.a.b:(a)"), 10);
    for (double kappa : {0.5, 2.0, 3.0}) {
        TauTable tau = tau_parametrize(T, [kappa](double) { return kappa; }, 16, {T.length() / 3});
        EXPECT_NEAR(tau.tau_end, kappa * T.length(), 0.02 * kappa * T.length());
        EXPECT_NEAR(tau.tau[0], kappa * T.length() / 3, 0.02 * kappa * T.length());
    }
}

TEST(Tau, ZeroLengthTowerIsZero) {
    auto c = make_circle();
    GeodesicTower D = build_tower(*c, MetricKind::path, th("a.b:(a)"), th("a.b:(a)"), 4);
    TauTable tau = tau_parametrize(D, [](double) { return 1.0; }, 4, {0.0});
    EXPECT_EQ(tau.tau_end, 0.0);
    EXPECT_EQ(tau.tau, std::vector<double>{0.0});
}
