#pragma once

// One level of an inverse sequence: a finite graph with labelled vertices,
// reflexive adjacency, edge multiplicities and optional quadrilateral faces.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asymgeo/error.hpp"
#include "asymgeo/labels.hpp"

namespace asymgeo {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

using Face = std::array<VertexId, 4>;

// Coordinates for grid-shaped levels. Lattice: (n+1)^2 points, id = y*(n+1)+x.
// Torus and Klein: n*n cells, id = y*n+x.
struct GridInfo {
    enum class Topology { lattice, torus, klein };
    Topology topology = Topology::lattice;
    int n = 0;

    int width() const { return topology == Topology::lattice ? n + 1 : n; }
    std::pair<int, int> coord(VertexId v) const { return {int(v % width()), int(v / width())}; }
    VertexId id(int x, int y) const { return VertexId(y * width() + x); }
};

class ApproxGraph {
public:
    int level() const { return level_; }
    std::size_t vertex_count() const { return offsets_.size() - 1; }

    std::span<const Symbol> label(VertexId v) const {
        check(v);
        return std::span<const Symbol>(symbols_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
    }
    LabelPath label_path(VertexId v) const { return LabelPath(label(v)); }

    // Distinct neighbours, sorted by id, self excluded.
    std::span<const VertexId> neighbors(VertexId v) const {
        check(v);
        return std::span<const VertexId>(adj_).subspan(adj_off_[v], adj_off_[v + 1] - adj_off_[v]);
    }
    bool adjacent(VertexId a, VertexId b) const {
        if (a == b) return true;
        auto n = neighbors(a);
        return std::binary_search(n.begin(), n.end(), b);
    }
    int multiplicity(VertexId a, VertexId b) const {
        auto n = neighbors(a);
        auto it = std::lower_bound(n.begin(), n.end(), b);
        if (it == n.end() || *it != b) return 0;
        return mult_[adj_off_[a] + (it - n.begin())];
    }
    std::size_t edge_count() const { return adj_.size() / 2; }

    std::optional<VertexId> find(std::span<const Symbol> lab) const {
        auto it = std::lower_bound(sorted_.begin(), sorted_.end(), lab, [&](VertexId v, std::span<const Symbol> l) {
            auto x = label(v);
            return std::lexicographical_compare(x.begin(), x.end(), l.begin(), l.end());
        });
        if (it == sorted_.end()) return std::nullopt;
        auto x = label(*it);
        if (!std::equal(x.begin(), x.end(), lab.begin(), lab.end())) return std::nullopt;
        return *it;
    }
    std::optional<VertexId> find(const LabelPath& l) const { return find(l.span()); }
    VertexId require(const LabelPath& l) const {
        auto v = find(l);
        if (!v) throw LookupError("no vertex with that label at level " + std::to_string(level_));
        return *v;
    }

    bool has_faces() const { return !faces_.empty(); }
    const std::vector<Face>& faces() const { return faces_; }
    std::span<const std::uint32_t> faces_of(VertexId v) const {
        check(v);
        if (faces_.empty()) return {};
        return std::span<const std::uint32_t>(vf_).subspan(vf_off_[v], vf_off_[v + 1] - vf_off_[v]);
    }

    // Image of v under the inverse map to the previous level; kNoVertex at level 1.
    VertexId parent(VertexId v) const {
        check(v);
        return parents_.empty() ? kNoVertex : parents_[v];
    }
    const std::vector<VertexId>& parents() const { return parents_; }

    const std::optional<GridInfo>& grid() const { return grid_; }

    int diameter_steps() const {
        std::call_once(*diam_once_, [&] {
            if (diameter_hint_ > 0) {
                diameter_ = diameter_hint_;
                return;
            }
            int best = 0;
            std::vector<int> dist;
            for (VertexId s = 0; s < vertex_count(); ++s) {
                bfs(s, dist);
                best = std::max(best, *std::max_element(dist.begin(), dist.end()));
            }
            diameter_ = best;
        });
        return diameter_;
    }

    // Unweighted distances from s; -1 marks unreachable.
    void bfs(VertexId s, std::vector<int>& dist) const {
        dist.assign(vertex_count(), -1);
        std::vector<VertexId> queue{s};
        queue.reserve(vertex_count());
        dist[s] = 0;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            VertexId v = queue[h];
            for (VertexId w : neighbors(v))
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
        }
    }

private:
    friend class GraphBuilder;
    void check(VertexId v) const {
        if (v >= vertex_count()) throw LookupError("vertex id " + std::to_string(v) + " not in level " + std::to_string(level_));
    }

    int level_ = 0;
    std::vector<Symbol> symbols_;
    std::vector<std::uint32_t> offsets_{0};
    std::vector<std::uint32_t> adj_off_;
    std::vector<VertexId> adj_;
    std::vector<std::uint16_t> mult_;
    std::vector<VertexId> sorted_;
    std::vector<Face> faces_;
    std::vector<std::uint32_t> vf_off_, vf_;
    std::vector<VertexId> parents_;
    std::optional<GridInfo> grid_;
    int diameter_hint_ = 0;
    mutable int diameter_ = 0;
    std::unique_ptr<std::once_flag> diam_once_ = std::make_unique<std::once_flag>();
};

class GraphBuilder {
public:
    explicit GraphBuilder(int level) { g_.level_ = level; }

    VertexId add_vertex(std::span<const Symbol> lab) {
        g_.symbols_.insert(g_.symbols_.end(), lab.begin(), lab.end());
        g_.offsets_.push_back(std::uint32_t(g_.symbols_.size()));
        return VertexId(g_.offsets_.size() - 2);
    }
    VertexId add_vertex(const LabelPath& l) { return add_vertex(l.span()); }

    // Repeated calls raise the multiplicity; loops are dropped (adjacency is reflexive anyway).
    void add_edge(VertexId a, VertexId b) {
        if (a == b) return;
        edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    void add_face(Face f) { g_.faces_.push_back(f); }
    void set_parents(std::vector<VertexId> p) { g_.parents_ = std::move(p); }
    void set_grid(GridInfo gi) { g_.grid_ = gi; }
    void set_diameter(int d) { g_.diameter_hint_ = d; }
    // For vertex-transitive graphs: the eccentricity of vertex 0.
    void set_diameter_from_first_vertex() { eccentric_ = true; }
    std::size_t vertex_count() const { return g_.offsets_.size() - 1; }

    ApproxGraph finish() {
        const std::size_t n = vertex_count();
        std::sort(edges_.begin(), edges_.end());
        std::vector<std::pair<std::pair<VertexId, VertexId>, int>> uniq;
        for (auto& e : edges_) {
            if (!uniq.empty() && uniq.back().first == e) ++uniq.back().second;
            else uniq.push_back({e, 1});
        }
        edges_.clear();
        edges_.shrink_to_fit();
        std::vector<std::uint32_t> deg(n + 1, 0);
        for (auto& [e, m] : uniq) {
            if (e.second >= n) throw StructuralError("edge endpoint out of range");
            ++deg[e.first];
            ++deg[e.second];
        }
        g_.adj_off_.assign(n + 1, 0);
        for (std::size_t v = 0; v < n; ++v) g_.adj_off_[v + 1] = g_.adj_off_[v] + deg[v];
        g_.adj_.resize(g_.adj_off_[n]);
        g_.mult_.resize(g_.adj_off_[n]);
        std::vector<std::uint32_t> fill(g_.adj_off_.begin(), g_.adj_off_.end() - 1);
        for (auto& [e, m] : uniq) {
            g_.adj_[fill[e.first]] = e.second;
            g_.mult_[fill[e.first]++] = std::uint16_t(m);
            g_.adj_[fill[e.second]] = e.first;
            g_.mult_[fill[e.second]++] = std::uint16_t(m);
        }
        // uniq is sorted, so every row is already in increasing order.

        g_.sorted_.resize(n);
        for (std::size_t v = 0; v < n; ++v) g_.sorted_[v] = VertexId(v);
        std::sort(g_.sorted_.begin(), g_.sorted_.end(), [&](VertexId a, VertexId b) {
            auto x = g_.label(a), y = g_.label(b);
            return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
        });
        for (std::size_t i = 1; i < n; ++i) {
            auto x = g_.label(g_.sorted_[i - 1]), y = g_.label(g_.sorted_[i]);
            if (std::equal(x.begin(), x.end(), y.begin(), y.end()))
                throw StructuralError("duplicate vertex label at level " + std::to_string(g_.level_));
        }

        if (!g_.faces_.empty()) {
            std::vector<std::uint32_t> cnt(n + 1, 0);
            for (auto& f : g_.faces_)
                for (VertexId v : f) ++cnt[v];
            g_.vf_off_.assign(n + 1, 0);
            for (std::size_t v = 0; v < n; ++v) g_.vf_off_[v + 1] = g_.vf_off_[v] + cnt[v];
            g_.vf_.resize(g_.vf_off_[n]);
            std::vector<std::uint32_t> pos(g_.vf_off_.begin(), g_.vf_off_.end() - 1);
            for (std::uint32_t i = 0; i < g_.faces_.size(); ++i)
                for (VertexId v : g_.faces_[i]) g_.vf_[pos[v]++] = i;
        }

        if (n == 0) throw StructuralError("empty level graph");
        std::vector<int> dist;
        g_.bfs(0, dist);
        if (std::find(dist.begin(), dist.end(), -1) != dist.end())
            throw StructuralError("level " + std::to_string(g_.level_) + " graph is disconnected");
        if (eccentric_) g_.diameter_hint_ = *std::max_element(dist.begin(), dist.end());
        return std::move(g_);
    }

private:
    ApproxGraph g_;
    std::vector<std::pair<VertexId, VertexId>> edges_;
    bool eccentric_ = false;
};

}  // namespace asymgeo
