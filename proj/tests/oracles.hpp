#pragma once

// Independent reference computations used by the tests.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "asymgeo/sequence.hpp"

namespace oracle {

using namespace asymgeo;

inline bool label_extends(std::span<const Symbol> longer, std::span<const Symbol> shorter) {
    return shorter.size() <= longer.size() && std::equal(shorter.begin(), shorter.end(), longer.begin());
}

// Adj(x@n, y@k) by scanning every level-k vertex whose label extends x's.
inline bool cross_adjacent(const Pattern& p, int n, VertexId x, int k, VertexId y) {
    if (n > k) return cross_adjacent(p, k, y, n, x);
    const ApproxGraph& gn = p.level(n);
    const ApproxGraph& gk = p.level(k);
    for (VertexId d = 0; d < gk.vertex_count(); ++d)
        if (label_extends(gk.label(d), gn.label(x)) && gk.adjacent(d, y)) return true;
    return false;
}

// Plain BFS over an explicit adjacency matrix rebuilt from labels.
inline std::vector<int> bfs(const ApproxGraph& g, VertexId s) {
    std::vector<int> d(g.vertex_count(), -1);
    std::queue<VertexId> q;
    d[s] = 0;
    q.push(s);
    while (!q.empty()) {
        VertexId v = q.front();
        q.pop();
        for (VertexId w = 0; w < g.vertex_count(); ++w)
            if (w != v && g.adjacent(v, w) && d[w] < 0) {
                d[w] = d[v] + 1;
                q.push(w);
            }
    }
    return d;
}

inline double binomial(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Flat torus distance between points of [0,1)^2: min over integer shifts.
inline double torus_distance(double x1, double y1, double x2, double y2) {
    double best = 1e9;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) best = std::min(best, std::hypot(x2 + i - x1, y2 + j - y1));
    return best;
}

}  // namespace oracle
