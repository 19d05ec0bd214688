#pragma once

// Serialisers for level graphs, distance tables, towers and curvature runs.
// Output is deterministic: vertices in id order, floats printed with %.17g.

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "asymgeo/curvature.hpp"
#include "asymgeo/quotient.hpp"

namespace asymgeo {

using Json = nlohmann::ordered_json;

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline Json graph_json(const ApproxGraph& g, const Alphabet& a) {
    Json vs = Json::array(), es = Json::array();
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        Json x = {{"id", v}, {"label", format_label(g.label(v), a)}};
        if (g.parent(v) != kNoVertex) x["parent"] = g.parent(v);
        vs.push_back(std::move(x));
    }
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        for (VertexId w : g.neighbors(v))
            if (v < w) es.push_back({{"a", v}, {"b", w}, {"multiplicity", g.multiplicity(v, w)}});
    Json out = {{"level", g.level()}, {"vertex_count", g.vertex_count()}, {"edge_count", g.edge_count()},
                {"vertices", std::move(vs)}, {"edges", std::move(es)}};
    if (g.has_faces()) {
        Json fs = Json::array();
        for (const Face& f : g.faces()) fs.push_back({f[0], f[1], f[2], f[3]});
        out["faces"] = std::move(fs);
    }
    return out;
}

// Parallel edges are written once per multiplicity.
inline std::string graph_dot(const ApproxGraph& g, const Alphabet& a) {
    std::ostringstream os;
    os << "graph level" << g.level() << " {\n";
    for (VertexId v = 0; v < g.vertex_count(); ++v) os << "  v" << v << " [label=\"" << format_label(g.label(v), a) << "\"];\n";
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        for (VertexId w : g.neighbors(v))
            if (v < w)
                for (int m = 0; m < g.multiplicity(v, w); ++m) os << "  v" << v << " -- v" << w << ";\n";
    os << "}\n";
    return os.str();
}

inline Json extrapolation_json(const Extrapolation& e) {
    return {{"limit", e.limit}, {"converged", e.converged}, {"rate", e.rate}, {"last_delta", e.last_delta}};
}

inline std::string distance_csv(const PseudoMetricEstimate& e) {
    std::string s = "level,distance\n";
    for (auto& x : e.samples) s += std::to_string(x.level) + "," + fmt_double(x.distance) + "\n";
    return s;
}

inline Json distance_json(const PseudoMetricEstimate& e, const Alphabet& a) {
    Json rows = Json::array();
    for (auto& x : e.samples) rows.push_back({{"level", x.level}, {"distance", x.distance}});
    return {{"from", format_thread(e.u, a)}, {"to", format_thread(e.v, a)},     {"metric", to_string(e.kind)},
            {"levels", std::move(rows)},    {"fit", extrapolation_json(e.fit)}, {"refinement_constant", e.refinement_constant}};
}

inline Json path_json(const GraphPath& p, const ApproxGraph& g, const Alphabet& a) {
    Json labels = Json::array();
    for (VertexId v : p.vertices) labels.push_back(format_label(g.label(v), a));
    return {{"level", p.level}, {"vertices", std::move(labels)}, {"length", p.step_length}};
}

// Per level: the path's labels, its normalised length and d_k of the endpoints.
inline Json tower_json(const GeodesicTower& T) {
    const Alphabet& a = T.pattern->alphabet();
    Json levels = Json::array();
    for (int k = T.start_level; k <= T.depth(); ++k) {
        Json x = path_json(T.at(k), T.pattern->level(k), a);
        x["endpoint_distance"] = T.lengths[k - T.start_level];
        levels.push_back(std::move(x));
    }
    return {{"pattern", T.pattern->name()}, {"metric", to_string(T.kind)},  {"from", format_thread(T.u, a)},
            {"to", format_thread(T.v, a)},  {"start_level", T.start_level}, {"depth", T.depth()},
            {"length", T.length()},         {"length_fit", extrapolation_json(T.length_fit)},
            {"backtracks", T.backtracks},   {"levels", std::move(levels)}};
}

inline std::string curvature_csv(const CurvatureEstimate& e) {
    std::string s = "window,base_level,length,exponent,derivative\n";
    for (auto& x : e.samples)
        s += std::to_string(x.window) + "," + std::to_string(x.base_level) + "," + fmt_double(x.length) + "," +
             fmt_double(x.exponent) + "," + fmt_double(x.derivative) + "\n";
    return s;
}

inline Json curvature_json(const CurvatureEstimate& e, const Alphabet& a) {
    Json ws = Json::array();
    for (auto& x : e.samples)
        ws.push_back({{"window", x.window},
                      {"base_level", x.base_level},
                      {"length", x.length},
                      {"exponent", x.exponent},
                      {"derivative", x.derivative}});
    return {{"point", format_thread(e.point, a)}, {"value", e.value()}, {"converged", e.converged()},
            {"fit", extrapolation_json(e.fit)},   {"windows", std::move(ws)}};
}

inline std::string tau_csv(const TauTable& t) {
    std::string s = "arc,tau\n";
    for (std::size_t i = 0; i < t.arc.size(); ++i) s += fmt_double(t.arc[i]) + "," + fmt_double(t.tau[i]) + "\n";
    return s;
}

inline Json tau_json(const TauTable& t) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < t.arc.size(); ++i) rows.push_back({{"arc", t.arc[i]}, {"tau", t.tau[i]}});
    return {{"length", t.length}, {"tau_end", t.tau_end}, {"points", std::move(rows)}};
}

inline Json class_json(const ThreadClass& c, const Alphabet& a) {
    Json reps = Json::array();
    for (auto& t : c.representatives) reps.push_back(format_thread(t, a));
    return {{"size", c.size()}, {"depth_verified", c.depth_verified}, {"rational", c.rational},
            {"complete", c.complete}, {"representatives", std::move(reps)}};
}

}  // namespace asymgeo
