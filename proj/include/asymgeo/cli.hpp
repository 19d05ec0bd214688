#pragma once

// The asymgeo command line. Kept in a header so tests can drive it in-process.
// Exit codes: 0 success, 1 a check failed, 2 usage error, 3 the computation
// raised (undefined curvature, broken tower, enumeration overflow, ...).

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asymgeo/export.hpp"
#include "asymgeo/patterns.hpp"

namespace asymgeo {

struct RunConfig {
    std::string pattern = "circle";
    std::string param;
    std::string metric = "path";
    std::optional<int> level;
    std::string levels;  // "a..b"
    std::string from, to, point;
    double tol = 1e-3;
    unsigned seed = 1;
    std::string format = "text";
    std::string out;
    // command specific
    int points = 8;
    int steps = 8;
    std::optional<double> constant;
    std::optional<int> at;
    int samples = 20;
};

namespace cli_detail {

struct LevelRange {
    int lo, hi;
};

inline LevelRange parse_levels(const std::string& s) {
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            int k = std::stoi(s);
            return {k, k};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw UsageError("--levels expects a..b, got '" + s + "'");
    }
}

// --levels wins over --level; otherwise the fallback range.
inline LevelRange level_range(const RunConfig& c, LevelRange fallback) {
    LevelRange r = fallback;
    if (!c.levels.empty()) r = parse_levels(c.levels);
    else if (c.level) r = {*c.level, *c.level};
    if (r.lo < 1 || r.hi < r.lo) throw UsageError("bad level range " + std::to_string(r.lo) + ".." + std::to_string(r.hi));
    return r;
}

inline std::shared_ptr<Pattern> pattern_of(const RunConfig& c) {
    std::string spec = c.pattern;
    if (!c.param.empty()) {
        if (spec.find('(') != std::string::npos) throw UsageError("give parameters either in --pattern or --param, not both");
        spec += "(" + c.param + ")";
    }
    return make_pattern(spec);
}

inline MetricKind metric_of(const RunConfig& c, const Pattern& p) {
    MetricKind k;
    try {
        k = parse_metric_kind(c.metric);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (k == MetricKind::euclidean && !p.has_faces())
        throw UsageError(p.name() + " has no faces; the euclidean metric needs a face structure");
    return k;
}

inline ThreadSpec thread_arg(const std::string& text, const char* flag, const Pattern& p) {
    if (text.empty()) throw UsageError(std::string(flag) + " is required");
    try {
        return parse_thread(text, p.alphabet());
    } catch (const ParseError& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

inline void require_format(const RunConfig& c, std::initializer_list<const char*> allowed) {
    for (const char* f : allowed)
        if (c.format == f) return;
    std::string list;
    for (const char* f : allowed) list += std::string(list.empty() ? "" : ", ") + f;
    throw UsageError("--format must be one of: " + list);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- commands; each returns (exit code, text) ----

struct Result {
    int code = 0;
    std::string text;
};

inline Result cmd_build(const RunConfig& c) {
    auto p = pattern_of(c);
    require_format(c, {"json", "dot", "text"});
    LevelRange r = level_range(c, {1, 1});
    const Alphabet& a = p->alphabet();
    Result res;
    if (c.format == "dot") {
        for (int k = r.lo; k <= r.hi; ++k) res.text += graph_dot(p->level(k), a);
    } else if (c.format == "json") {
        Json levels = Json::array();
        for (int k = r.lo; k <= r.hi; ++k) levels.push_back(graph_json(p->level(k), a));
        res.text = dump({{"pattern", p->name()}, {"levels", std::move(levels)}});
    } else {
        for (int k = r.lo; k <= r.hi; ++k) {
            const ApproxGraph& g = p->level(k);
            res.text += "level " + std::to_string(k) + ": " + std::to_string(g.vertex_count()) + " vertices, " +
                        std::to_string(g.edge_count()) + " edges, diameter " + std::to_string(g.diameter_steps()) + "\n";
        }
    }
    return res;
}

inline Result cmd_dist(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "csv", "json"});
    ThreadSpec u = thread_arg(c.from, "--from", *p), v = thread_arg(c.to, "--to", *p);
    LevelRange r = level_range(c, {1, std::min(10, p->max_level())});
    PseudoMetricEstimate e = pseudo_metric_estimate(*p, kind, u, v, r.lo, r.hi, c.tol);
    if (c.format == "csv") return {0, distance_csv(e)};
    if (c.format == "json") return {0, dump(distance_json(e, p->alphabet()))};
    std::string s = "level  distance\n";
    for (auto& x : e.samples) s += std::to_string(x.level) + "  " + fmt_double(x.distance) + "\n";
    s += "limit " + fmt_double(e.fit.limit) + (e.fit.converged ? " (converged)" : " (not converged)") + "\n";
    return {0, s};
}

inline Result cmd_converge(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "json"});
    LevelRange r = level_range(c, {1, std::min(10, p->max_level())});
    std::mt19937 rng(c.seed);
    std::uniform_int_distribution<int> sym(0, int(p->alphabet().size()) - 1), len(0, 4);
    auto random_thread = [&] {
        std::vector<Symbol> h(len(rng)), cyc(1 + len(rng) % 2);
        for (auto& s : h) s = Symbol(sym(rng));
        for (auto& s : cyc) s = Symbol(sym(rng));
        return ThreadSpec(LabelPath(h), LabelPath(cyc));
    };
    Json pairs = Json::array();
    double worst = 0;
    int converged = 0, tried = 0;
    for (int i = 0; i < c.samples; ++i) {
        ThreadSpec u = random_thread(), v = random_thread();
        try {
            PseudoMetricEstimate e = pseudo_metric_estimate(*p, kind, u, v, r.lo, r.hi, c.tol);
            worst = std::max(worst, e.refinement_constant);
            converged += e.fit.converged;
            ++tried;
            pairs.push_back({{"from", format_thread(u, p->alphabet())},
                             {"to", format_thread(v, p->alphabet())},
                             {"limit", e.fit.limit},
                             {"converged", e.fit.converged},
                             {"refinement_constant", e.refinement_constant}});
        } catch (const ThreadError&) {
        }
    }
    if (c.format == "json")
        return {0, dump({{"pattern", p->name()},
                         {"metric", to_string(kind)},
                         {"pairs", std::move(pairs)},
                         {"converged", converged},
                         {"max_refinement_constant", worst}})};
    std::string s;
    for (auto& x : pairs)
        s += x["from"].get<std::string>() + " " + x["to"].get<std::string>() + "  " + fmt_double(x["limit"]) +
             (x["converged"].get<bool>() ? "" : " (not converged)") + "\n";
    s += std::to_string(converged) + "/" + std::to_string(tried) + " converged; max |d_{k+1}-d_k|*2^k = " + fmt_double(worst) + "\n";
    return {0, s};
}

inline Result cmd_geodesics(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "json"});
    int k = level_range(c, {2, 2}).hi;
    ThreadSpec u = thread_arg(c.from, "--from", *p), v = thread_arg(c.to, "--to", *p);
    const ApproxGraph& g = p->level(k);
    MetricTable d = make_metric(g, kind);
    auto paths = find_geodesics(d, p->locate(k, u), p->locate(k, v));
    if (c.format == "json") {
        Json arr = Json::array();
        for (auto& q : paths) arr.push_back(path_json(q, g, p->alphabet()));
        return {0, dump({{"level", k}, {"metric", to_string(kind)}, {"count", paths.size()}, {"geodesics", std::move(arr)}})};
    }
    std::string s = std::to_string(paths.size()) + " geodesics at level " + std::to_string(k) + "\n";
    for (auto& q : paths) {
        for (std::size_t i = 0; i < q.vertices.size(); ++i)
            s += (i ? " " : "") + format_label(g.label(q.vertices[i]), p->alphabet());
        s += "\n";
    }
    return {0, s};
}

inline GeodesicTower tower_of(const RunConfig& c, const Pattern& p, MetricKind kind, int fallback_depth) {
    ThreadSpec u = thread_arg(c.from, "--from", p), v = thread_arg(c.to, "--to", p);
    LevelRange r = level_range(c, {0, std::min(fallback_depth, p.max_level())});
    TowerOptions opt;
    if (!c.levels.empty()) opt.start_level = r.lo;
    return build_tower(p, kind, u, v, r.hi, opt);
}

inline Result cmd_tower(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "json"});
    GeodesicTower T = tower_of(c, *p, kind, 8);
    if (c.format == "json") return {0, dump(tower_json(T))};
    std::string s;
    for (int k = T.start_level; k <= T.depth(); ++k)
        s += "level " + std::to_string(k) + ": " + std::to_string(T.at(k).size()) + " vertices, d_k = " +
             fmt_double(T.lengths[k - T.start_level]) + "\n";
    s += "length " + fmt_double(T.length()) + (T.length_fit.converged ? "" : " (not converged)") + "\n";
    return {0, s};
}

inline Result cmd_curvature(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "csv", "json"});
    ThreadSpec r = thread_arg(c.point, "--point", *p);
    ThreadSpec u = thread_arg(c.from, "--from", *p), v = thread_arg(c.to, "--to", *p);
    int K = level_range(c, {1, std::min(14, p->max_level())}).hi;
    CurvatureOptions opt;
    opt.tol = c.tol;
    CurvatureEstimate e = curvature_at(*p, kind, r, u, v, K, opt);
    if (c.format == "csv") return {0, curvature_csv(e)};
    if (c.format == "json") return {0, dump(curvature_json(e, p->alphabet()))};
    std::string s = "window  base  length  exponent  derivative\n";
    for (auto& x : e.samples)
        s += std::to_string(x.window) + "  " + std::to_string(x.base_level) + "  " + fmt_double(x.length) + "  " +
             fmt_double(x.exponent) + "  " + fmt_double(x.derivative) + "\n";
    s += "curvature " + fmt_double(e.value()) + (e.converged() ? " (converged)" : " (not converged)") + "\n";
    return {0, s};
}

inline Result cmd_tau(const RunConfig& c) {
    auto p = pattern_of(c);
    MetricKind kind = metric_of(c, *p);
    require_format(c, {"text", "csv", "json"});
    if (c.points < 1 || c.steps < 1) throw UsageError("--points and --steps must be positive");
    GeodesicTower T = tower_of(c, *p, kind, 12);
    double l = T.length();
    std::vector<double> arcs;
    for (int i = 0; i <= c.points; ++i) arcs.push_back(l * i / c.points);
    CurvatureFn kappa = c.constant ? CurvatureFn([k = *c.constant](double) { return k; }) : tower_curvature_fn(T);
    TauTable t = tau_parametrize(T, kappa, c.steps, arcs);
    if (c.format == "csv") return {0, tau_csv(t)};
    if (c.format == "json") return {0, dump(tau_json(t))};
    std::string s = "arc  tau\n";
    for (std::size_t i = 0; i < t.arc.size(); ++i) s += fmt_double(t.arc[i]) + "  " + fmt_double(t.tau[i]) + "\n";
    s += "length " + fmt_double(t.length) + ", tau(end) " + fmt_double(t.tau_end) + "\n";
    return {0, s};
}

inline Result cmd_classes(const RunConfig& c) {
    auto p = pattern_of(c);
    require_format(c, {"text", "json"});
    ThreadSpec u = thread_arg(c.from, "--from", *p);
    int K = level_range(c, {1, std::min(10, p->max_level())}).hi;
    ThreadClass cu = equivalence_class(*p, u, K);
    const Alphabet& a = p->alphabet();
    Json j = {{"class", class_json(cu, a)}};
    std::optional<NeighborhoodAnswer> nb;
    if (!c.to.empty()) {
        ThreadSpec v = thread_arg(c.to, "--to", *p);
        int k = c.at.value_or(K);
        if (k < 1 || k > K) throw UsageError("--at must lie in 1..depth");
        ThreadClass cv = equivalence_class(*p, v, K);
        nb = neighborhood_contains(*p, cu, cv, k);
        j["candidate"] = class_json(cv, a);
        j["adjacent"] = threads_adjacent(*p, u, v, K);
        j["neighborhood"] = {{"level", k}, {"contains", nb->contains}, {"complete", nb->complete}};
    }
    if (c.format == "json") return {0, dump(j)};
    std::string s = "class of size " + std::to_string(cu.size()) + " at depth " + std::to_string(K) +
                    (cu.complete ? "" : " (incomplete)") + ":\n";
    for (auto& t : cu.representatives) s += "  " + format_thread(t, a) + "\n";
    if (nb)
        s += std::string("in neighbourhood at level ") + std::to_string(c.at.value_or(K)) + ": " +
             (nb->contains ? "yes" : "no") + (nb->complete ? "" : " (incomplete)") + "\n";
    return {0, s};
}

inline Result check_one(const Pattern& p, std::optional<int> level, const std::string& metric, unsigned seed) {
    int K = level.value_or(p.one_dimensional() ? 8 : 5);
    Result res;
    auto fail = [&](const std::string& what) {
        res.code = 1;
        res.text += "  FAIL " + what + "\n";
    };
    // Explicit graphs up to the materialisation limit, the block form beyond it.
    auto* cf = dynamic_cast<const CircleFamily*>(&p);
    if (!cf) K = std::min(K, p.max_level());
    const int top = K;
    RegularityReport reg = check_regularity(p, std::min(K, p.max_level()));
    std::string how;
    if (cf && K > p.max_level()) {
        RegularityReport blk = check_block_regularity(*cf, K);
        reg.connectedness_ok = reg.connectedness_ok && blk.connectedness_ok;
        reg.consistency_ok = reg.consistency_ok && blk.consistency_ok;
        reg.counterexamples.insert(reg.counterexamples.end(), blk.counterexamples.begin(), blk.counterexamples.end());
        how = " (block form above level " + std::to_string(p.max_level()) + ")";
    }
    K = std::min(K, p.max_level());
    res.text += p.name() + " levels 1.." + std::to_string(top) + how +
                ": connectedness " + (reg.connectedness_ok ? "ok" : "FAIL") + ", consistency " +
                (reg.consistency_ok ? "ok" : "FAIL") + "\n";
    if (!reg.ok()) res.code = 1;
    for (auto& ce : reg.counterexamples)
        res.text += "  counterexample at level " + std::to_string(ce.level) + ": " + ce.x + " " + ce.y + " (" + ce.what + ")\n";
    if (!reg.ok()) return res;

    std::vector<MetricKind> kinds{MetricKind::path};
    if (p.has_faces() && metric != "path") kinds.push_back(MetricKind::euclidean);
    if (metric == "euclidean" && !p.has_faces()) throw UsageError(p.name() + " has no faces");
    // The contract check reads every pair, so very large levels are left to the sampled tests.
    constexpr std::size_t kMaxMetricVertices = 4096;
    int metric_top = 0;
    while (metric_top < K && p.level(metric_top + 1).vertex_count() <= kMaxMetricVertices) ++metric_top;
    if (metric_top < K)
        res.text += "  metric checks stop at level " + std::to_string(metric_top) + " (level " +
                    std::to_string(metric_top + 1) + " has " + std::to_string(p.level(metric_top + 1).vertex_count()) +
                    " vertices)\n";
    for (MetricKind kind : kinds) {
        for (int k = 1; k <= metric_top; ++k) {
            if (kind == MetricKind::euclidean && k == 1 && p.kind() != PatternKind::square) continue;
            MetricTable d = make_metric(p.level(k), kind);
            std::string where = std::string(to_string(kind)) + " level " + std::to_string(k);
            if (!metric_contract_check(d).ok) fail(where + ": minimum distance off the edges");
            std::size_t n = p.level(k).vertex_count();
            AxiomReport ax = metric_axioms_check(d, n <= 48 ? 0 : 20000, seed + k);
            if (!ax.ok) fail(where + ": " + ax.first_failure);
            if (kind == MetricKind::euclidean) {
                DiagonalReport dr = face_diagonal_check(d);
                if (!dr.ok) fail(where + ": face diagonal ratio outside (1, 2]");
            }
        }
    }
    if (res.code == 0) res.text += "  metric contract and axioms ok\n";
    return res;
}

inline Result cmd_check(const RunConfig& c, bool pattern_given) {
    std::vector<std::shared_ptr<Pattern>> ps;
    if (pattern_given) ps.push_back(pattern_of(c));
    else
        for (const std::string& n : pattern_names())
            if (n != "broken-circle") ps.push_back(make_pattern(n));
    Result all;
    for (auto& p : ps) {
        Result r = check_one(*p, c.level, c.metric, c.seed);
        all.code = std::max(all.code, r.code);
        all.text += r.text;
    }
    all.text += all.code ? "FAILED\n" : "all checks passed\n";
    return all;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"Geometry of inverse sequences of finite graphs", "asymgeo"};
    app.require_subcommand(1);
    RunConfig c;

    auto common = [&](CLI::App* s, bool metric, bool threads) {
        s->add_option("--pattern", c.pattern, "pattern name, e.g. circle, torus, elliptic-circle(2)");
        s->add_option("--param", c.param, "pattern parameters (alternative to name(params))");
        if (metric) s->add_option("--metric", c.metric, "path or euclidean");
        s->add_option("--level", c.level, "level, or deepest level");
        s->add_option("--levels", c.levels, "level range a..b");
        if (threads) {
            s->add_option("--from", c.from, "thread prefix:(cycle) or label");
            s->add_option("--to", c.to, "thread prefix:(cycle) or label");
        }
        s->add_option("--tol", c.tol, "extrapolation tolerance");
        s->add_option("--seed", c.seed, "seed for sampled checks");
        s->add_option("--format", c.format, "text, json, csv or dot (per command)");
        s->add_option("--out", c.out, "write to this file instead of stdout");
    };
    auto* build = app.add_subcommand("build", "export level graphs");
    common(build, false, false);
    auto* dist = app.add_subcommand("dist", "d_k(u(k), v(k)) per level and its limit");
    common(dist, true, true);
    auto* conv = app.add_subcommand("converge", "pseudo-metric convergence on sampled thread pairs");
    common(conv, true, false);
    conv->add_option("--samples", c.samples, "number of pairs");
    auto* geo = app.add_subcommand("geodesics", "all (G_k, d_k)-geodesics between two vertices");
    common(geo, true, true);
    auto* tower = app.add_subcommand("tower", "geodesic tower between two threads");
    common(tower, true, true);
    auto* curv = app.add_subcommand("curvature", "curvature at a point of a tower");
    common(curv, true, true);
    curv->add_option("--point", c.point, "thread of the point");
    auto* tau = app.add_subcommand("tau", "curvature-weighted parametrisation of a tower");
    common(tau, true, true);
    tau->add_option("--points", c.points, "number of arc-length intervals to report");
    tau->add_option("--steps", c.steps, "midpoint rule steps");
    tau->add_option("--constant", c.constant, "use this constant curvature instead of estimating it");
    auto* classes = app.add_subcommand("classes", "equivalence class of a thread, and neighbourhood membership");
    common(classes, false, true);
    classes->add_option("--at", c.at, "level of the neighbourhood test (needs --to)");
    auto* check = app.add_subcommand("check", "regularity, metric contract and triangle inequality");
    common(check, true, false);

    std::vector<const char*> argv{"asymgeo"};
    for (auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    Result res;
    try {
        if (*build) res = cmd_build(c);
        else if (*dist) res = cmd_dist(c);
        else if (*conv) res = cmd_converge(c);
        else if (*geo) res = cmd_geodesics(c);
        else if (*tower) res = cmd_tower(c);
        else if (*curv) res = cmd_curvature(c);
        else if (*tau) res = cmd_tau(c);
        else if (*classes) res = cmd_classes(c);
        else if (*check) res = cmd_check(c, check->count("--pattern") > 0);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const EnumerationOverflow& e) {
        err << "error: " << e.what() << " (raise ASYMGEO_MAX_PATHS)\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }

    if (c.out.empty()) {
        out << res.text;
    } else {
        std::ofstream f(c.out, std::ios::binary);
        if (!f) {
            err << "error: cannot write " << c.out << "\n";
            return 3;
        }
        f << res.text;
    }
    return res.code;
}

}  // namespace asymgeo
