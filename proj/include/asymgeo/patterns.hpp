#pragma once

// Built-in patterns: interval, circle, unit square, torus, Klein bottle, the
// curvature transforms of the circle, and a name-keyed registry.

#include <charconv>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asymgeo/circle_family.hpp"
#include "asymgeo/sequence.hpp"

namespace asymgeo {

// ---------------------------------------------------------------------------
// Grid patterns

class GridPattern : public Pattern {
public:
    using Pattern::Pattern;
    bool has_faces() const override { return true; }
    bool one_dimensional() const override { return false; }
    int max_level() const override { return 10; }
};

// Lattice points of the unit square subdivided into 2^k x 2^k cells. The
// first label symbol gives the coarse digit pair in {0,1,2}^2, later symbols
// the remaining binary digits; symbol index = dx + 3*dy.
class SquarePattern : public GridPattern {
public:
    SquarePattern()
        : GridPattern("square", Alphabet({"a", "b", "c", "d", "e", "f", "g", "h", "i"}), PatternKind::square) {}

    static LabelPath lattice_label(int k, int x, int y) {
        LabelPath l;
        l.push_back(Symbol((x >> (k - 1)) + 3 * (y >> (k - 1))));
        for (int b = k - 2; b >= 0; --b) l.push_back(Symbol(((x >> b) & 1) + 3 * ((y >> b) & 1)));
        return l;
    }

protected:
    ApproxGraph make_level(int k, const ApproxGraph* prev) const override {
        const int n = 1 << k;
        GridInfo gi{GridInfo::Topology::lattice, n};
        GraphBuilder gb(k);
        for (int y = 0; y <= n; ++y)
            for (int x = 0; x <= n; ++x) gb.add_vertex(lattice_label(k, x, y));
        for (int y = 0; y <= n; ++y)
            for (int x = 0; x <= n; ++x) {
                if (x < n) gb.add_edge(gi.id(x, y), gi.id(x + 1, y));
                if (y < n) gb.add_edge(gi.id(x, y), gi.id(x, y + 1));
                if (x < n && y < n) gb.add_face({gi.id(x, y), gi.id(x + 1, y), gi.id(x + 1, y + 1), gi.id(x, y + 1)});
            }
        if (prev) {
            GridInfo lo{GridInfo::Topology::lattice, n / 2};
            std::vector<VertexId> parents(gb.vertex_count());
            for (int y = 0; y <= n; ++y)
                for (int x = 0; x <= n; ++x) parents[gi.id(x, y)] = lo.id(x >> 1, y >> 1);
            gb.set_parents(std::move(parents));
        }
        gb.set_grid(gi);
        gb.set_diameter(2 * n);
        return gb.finish();
    }
};

// Cells of a 2^k x 2^k grid, periodic in x and in y (torus) or periodic in y
// with the reflection x -> n-1-x across the top/bottom seam (Klein bottle).
// Symbols a,b,c,d are the quadrants (0,0),(1,0),(0,1),(1,1).
class CellGridPattern : public GridPattern {
public:
    explicit CellGridPattern(bool klein)
        : GridPattern(klein ? "klein" : "torus", Alphabet({"a", "b", "c", "d"}),
                      klein ? PatternKind::klein : PatternKind::torus),
          klein_(klein) {}

    bool klein() const { return klein_; }

    static LabelPath cell_label(int k, int x, int y) {
        LabelPath l;
        for (int b = k - 1; b >= 0; --b) l.push_back(Symbol(((x >> b) & 1) + 2 * ((y >> b) & 1)));
        return l;
    }

    // Cell one step up from (x, y), crossing the seam when y = n-1.
    std::pair<int, int> up(int n, int x, int y) const {
        if (y + 1 < n) return {x, y + 1};
        return {klein_ ? n - 1 - x : x, 0};
    }
    // Cell one step down from (x, y).
    std::pair<int, int> down(int n, int x, int y) const {
        if (y > 0) return {x, y - 1};
        return {klein_ ? n - 1 - x : x, n - 1};
    }

protected:
    ApproxGraph make_level(int k, const ApproxGraph* prev) const override {
        const int n = 1 << k;
        GridInfo gi{klein_ ? GridInfo::Topology::klein : GridInfo::Topology::torus, n};
        GraphBuilder gb(k);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) gb.add_vertex(cell_label(k, x, y));
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                gb.add_edge(gi.id(x, y), gi.id((x + 1) % n, y));
                auto [ux, uy] = up(n, x, y);
                gb.add_edge(gi.id(x, y), gi.id(ux, uy));
            }
        // One face per tessellation vertex: the ring of four cells around the
        // corner shared by (x-1, y-1) and (x, y).
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                int xl = (x + n - 1) % n;
                auto [ax, ay] = down(n, xl, y);
                auto [bx, by] = down(n, x, y);
                gb.add_face({gi.id(ax, ay), gi.id(bx, by), gi.id(x, y), gi.id(xl, y)});
            }
        if (prev) {
            GridInfo lo{gi.topology, n / 2};
            std::vector<VertexId> parents(gb.vertex_count());
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) parents[gi.id(x, y)] = lo.id(x >> 1, y >> 1);
            gb.set_parents(std::move(parents));
        }
        gb.set_grid(gi);
        // The Klein grid is vertex-transitive, so one eccentricity gives the diameter.
        if (klein_) gb.set_diameter_from_first_vertex();
        else gb.set_diameter(n);
        return gb.finish();
    }

private:
    bool klein_;
};

// ---------------------------------------------------------------------------
// A base pattern with one edge removed at one level. Used as a negative
// fixture for the regularity checks.
class DroppedEdgePattern : public Pattern {
public:
    DroppedEdgePattern(std::shared_ptr<const Pattern> base, int lvl, LabelPath x, LabelPath y)
        : Pattern("broken-" + base->name(), base->alphabet(), base->kind()),
          base_(std::move(base)), lvl_(lvl), x_(std::move(x)), y_(std::move(y)) {}

    int max_level() const override { return base_->max_level(); }
    bool has_faces() const override { return base_->has_faces(); }
    bool one_dimensional() const override { return base_->one_dimensional(); }

protected:
    ApproxGraph make_level(int k, const ApproxGraph*) const override {
        const ApproxGraph& g = base_->level(k);
        VertexId dx = kNoVertex, dy = kNoVertex;
        if (k == lvl_) {
            dx = g.require(x_);
            dy = g.require(y_);
            if (!g.adjacent(dx, dy) || dx == dy) throw StructuralError("dropped edge is not an edge");
        }
        GraphBuilder gb(k);
        for (VertexId v = 0; v < g.vertex_count(); ++v) gb.add_vertex(g.label(v));
        for (VertexId v = 0; v < g.vertex_count(); ++v)
            for (VertexId w : g.neighbors(v)) {
                if (w < v || (v == std::min(dx, dy) && w == std::max(dx, dy))) continue;
                for (int m = 0; m < g.multiplicity(v, w); ++m) gb.add_edge(v, w);
            }
        if (k > 1) gb.set_parents(g.parents());
        if (g.grid()) gb.set_grid(*g.grid());
        return gb.finish();
    }

private:
    std::shared_ptr<const Pattern> base_;
    int lvl_;
    LabelPath x_, y_;
};

// ---------------------------------------------------------------------------
// Builders

inline std::shared_ptr<CircleFamily> make_interval() {
    return std::make_shared<CircleFamily>("interval", false, TransformSpec{});
}
inline std::shared_ptr<CircleFamily> make_circle() {
    return std::make_shared<CircleFamily>("circle", true, TransformSpec{});
}
inline std::shared_ptr<SquarePattern> make_square() { return std::make_shared<SquarePattern>(); }
inline std::shared_ptr<CellGridPattern> make_torus() { return std::make_shared<CellGridPattern>(false); }
inline std::shared_ptr<CellGridPattern> make_klein() { return std::make_shared<CellGridPattern>(true); }

inline std::shared_ptr<Pattern> make_broken_circle() {
    return std::make_shared<DroppedEdgePattern>(make_circle(), 3, LabelPath{0, 1, 1}, LabelPath{1, 0, 0});
}

// ā and b̄: the point 0 of the circle seen from both sides.
inline std::pair<ThreadSpec, ThreadSpec> default_marked_pair() {
    return {ThreadSpec({}, LabelPath{0}), ThreadSpec({}, LabelPath{1})};
}

namespace detail {

inline void require_flat_base(const CircleFamily& base, const std::pair<ThreadSpec, ThreadSpec>& marked) {
    if (base.transform().kind != TransformKind::none)
        throw InvalidTransform("transforms apply to the flat circle or interval only");
    // Marked threads must stay adjacent; a single failing level is decisive.
    for (int k = 1; k <= 12; ++k) {
        const ApproxGraph& g = base.level(k);
        if (!g.adjacent(base.locate(k, marked.first), base.locate(k, marked.second)))
            throw InvalidTransform("marked threads are not adjacent at level " + std::to_string(k));
    }
}

inline std::string base_suffix(const CircleFamily& base) { return base.closed() ? "circle" : "interval"; }

}  // namespace detail

inline std::shared_ptr<CircleFamily> apply_elliptic(const CircleFamily& base,
                                                    std::pair<ThreadSpec, ThreadSpec> marked = default_marked_pair(),
                                                    int weight = 2) {
    detail::require_flat_base(base, marked);
    TransformSpec s{TransformKind::elliptic, weight, {{marked.first, 2}, {marked.second, 2}}};
    return std::make_shared<CircleFamily>("elliptic-" + detail::base_suffix(base) + "(" + std::to_string(weight) + ")",
                                          base.closed(), std::move(s));
}

inline std::shared_ptr<CircleFamily> apply_weak_hyperbolic(const CircleFamily& base,
                                                           std::pair<ThreadSpec, ThreadSpec> marked = default_marked_pair(),
                                                           int alpha = 2) {
    detail::require_flat_base(base, marked);
    TransformSpec s{TransformKind::weak_hyperbolic, alpha, {{marked.first, 2}, {marked.second, 2}}};
    return std::make_shared<CircleFamily>(
        "weak-hyperbolic-" + detail::base_suffix(base) + "(" + std::to_string(alpha) + ")", base.closed(), std::move(s));
}

inline std::shared_ptr<CircleFamily> apply_strong_hyperbolic(const CircleFamily& base,
                                                             std::pair<ThreadSpec, ThreadSpec> marked = default_marked_pair(),
                                                             int beta = 2, bool extreme = false) {
    detail::require_flat_base(base, marked);
    if (beta < 2) throw InvalidTransform("beta must be >= 2");
    TransformSpec s{extreme ? TransformKind::extreme_hyperbolic : TransformKind::strong_hyperbolic, beta,
                    {{marked.first, 2}, {marked.second, 2}}};
    std::string name = "strong-hyperbolic-" + detail::base_suffix(base) + "(" + std::to_string(beta) +
                       (extreme ? ",extreme)" : ")");
    return std::make_shared<CircleFamily>(std::move(name), base.closed(), std::move(s));
}

// Points marked by the dense schedule. Round 1 (from level 2) marks the wrap
// point {ā, b̄} and the midpoint {a.b̄, b.ā}. Round k >= 2 marks x.b̄ ~ y.ā for
// consecutive x < y among the length-k labels, from level 6 (k = 2) or 2k.
// Threads already marked by an earlier round keep their earlier level.
inline std::vector<MarkedThread> dense_schedule(int max_round) {
    std::vector<MarkedThread> out;
    auto add = [&](ThreadSpec t, int from) {
        t = t.normalized();
        for (auto& m : out)
            if (m.thread == t) return;
        out.push_back({std::move(t), from});
    };
    add(ThreadSpec({}, LabelPath{0}), 2);
    add(ThreadSpec({}, LabelPath{1}), 2);
    for (int k = 1; k <= max_round; ++k) {
        int from = k == 1 ? 2 : (k == 2 ? 6 : 2 * k);
        for (std::uint32_t x = 0; x + 1 < (1u << k); ++x) {
            LabelPath lx, ly;
            for (int b = k - 1; b >= 0; --b) {
                lx.push_back(Symbol((x >> b) & 1));
                ly.push_back(Symbol(((x + 1) >> b) & 1));
            }
            add(ThreadSpec(lx, LabelPath{1}), from);
            add(ThreadSpec(ly, LabelPath{0}), from);
        }
    }
    return out;
}

enum class DenseKind { hyperbolic, elliptic };

// Rounds activating beyond level 16 are not generated.
inline std::shared_ptr<CircleFamily> apply_dense_schedule(const CircleFamily& base, DenseKind kind, int parameter = 2,
                                                          int max_round = 8) {
    if (base.transform().kind != TransformKind::none || !base.closed())
        throw InvalidTransform("the dense schedule applies to the flat circle");
    TransformSpec s{kind == DenseKind::hyperbolic ? TransformKind::weak_hyperbolic : TransformKind::elliptic, parameter,
                    dense_schedule(max_round)};
    std::string name = std::string(kind == DenseKind::hyperbolic ? "dense-hyperbolic-circle" : "dense-elliptic-circle") +
                       "(" + std::to_string(parameter) + ")";
    return std::make_shared<CircleFamily>(std::move(name), true, std::move(s));
}

// ---------------------------------------------------------------------------
// Registry: "circle", "elliptic-circle(2)", "strong-hyperbolic-circle(2,extreme)", ...

inline std::vector<std::string> pattern_names() {
    return {"interval", "circle", "square", "torus", "klein", "elliptic-circle", "weak-hyperbolic-circle",
            "strong-hyperbolic-circle", "dense-hyperbolic-circle", "dense-elliptic-circle", "broken-circle"};
}

inline std::shared_ptr<Pattern> make_pattern(std::string_view spec) {
    std::string name(spec);
    std::vector<std::string> args;
    if (auto lp = spec.find('('); lp != std::string_view::npos) {
        if (spec.back() != ')') throw UsageError("bad pattern '" + std::string(spec) + "'");
        name = std::string(spec.substr(0, lp));
        std::string_view inner = spec.substr(lp + 1, spec.size() - lp - 2);
        while (!inner.empty()) {
            auto c = inner.find(',');
            args.emplace_back(inner.substr(0, c));
            if (c == std::string_view::npos) break;
            inner.remove_prefix(c + 1);
        }
    }
    auto int_arg = [&](std::size_t i, int dflt) {
        if (i >= args.size() || args[i].empty()) return dflt;
        int v = 0;
        auto [p, ec] = std::from_chars(args[i].data(), args[i].data() + args[i].size(), v);
        if (ec != std::errc() || p != args[i].data() + args[i].size())
            throw UsageError("pattern parameter '" + args[i] + "' is not an integer");
        return v;
    };
    auto no_args = [&] {
        if (!args.empty()) throw UsageError("pattern '" + name + "' takes no parameters");
    };
    if (name == "interval") return no_args(), make_interval();
    if (name == "circle") return no_args(), make_circle();
    if (name == "square") return no_args(), make_square();
    if (name == "torus") return no_args(), make_torus();
    if (name == "klein") return no_args(), make_klein();
    if (name == "broken-circle") return no_args(), make_broken_circle();
    auto circle = make_circle();
    if (name == "elliptic-circle") return apply_elliptic(*circle, default_marked_pair(), int_arg(0, 2));
    if (name == "weak-hyperbolic-circle") return apply_weak_hyperbolic(*circle, default_marked_pair(), int_arg(0, 2));
    if (name == "strong-hyperbolic-circle") {
        bool extreme = args.size() > 1 && (args[1] == "extreme" || args[1] == "true" || args[1] == "1");
        if (args.size() > 1 && !extreme && args[1] != "false" && args[1] != "0")
            throw UsageError("second parameter of strong-hyperbolic-circle must be 'extreme' or 'false'");
        return apply_strong_hyperbolic(*circle, default_marked_pair(), int_arg(0, 2), extreme);
    }
    if (name == "dense-hyperbolic-circle") return apply_dense_schedule(*circle, DenseKind::hyperbolic, int_arg(0, 2));
    if (name == "dense-elliptic-circle") return apply_dense_schedule(*circle, DenseKind::elliptic, int_arg(0, 2));
    throw UsageError("unknown pattern '" + std::string(spec) + "'");
}

}  // namespace asymgeo
