#include "facegen/mesh/connectivity.hpp"

#include <algorithm>
#include <string>

#include "facegen/error.hpp"

namespace facegen {

int MeshConnectivity::edge_index(int a, int b) const {
    const Edge key = a < b ? Edge{a, b} : Edge{b, a};
    const auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key) return -1;
    return static_cast<int>(it - edges.begin());
}

bool MeshConnectivity::is_closed() const {
    return std::none_of(boundary_edge.begin(), boundary_edge.end(), [](bool b) { return b; });
}

MeshConnectivity build_connectivity(const QuadMesh& mesh) {
    mesh.validate();
    MeshConnectivity c;
    c.vertex_count = mesh.vertex_count();
    c.face_count = mesh.face_count();

    std::vector<Edge> all;
    all.reserve(mesh.quads.size() * 4);
    for (const Quad& q : mesh.quads) {
        for (int i = 0; i < 4; ++i) {
            const int a = q[i], b = q[(i + 1) % 4];
            all.push_back(a < b ? Edge{a, b} : Edge{b, a});
        }
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    c.edges = std::move(all);

    c.edge_faces.assign(c.edges.size(), {-1, -1});
    c.face_edges.resize(mesh.quads.size());
    c.vertex_faces.assign(c.vertex_count, {});
    for (int f = 0; f < c.face_count; ++f) {
        const Quad& q = mesh.quads[f];
        for (int i = 0; i < 4; ++i) {
            const int e = c.edge_index(q[i], q[(i + 1) % 4]);
            c.face_edges[f][i] = e;
            auto& slots = c.edge_faces[e];
            if (slots[0] < 0) {
                slots[0] = f;
            } else if (slots[1] < 0) {
                slots[1] = f;
            } else {
                fail(ErrorCode::NonManifoldEdge, "edge (" + std::to_string(c.edges[e][0]) + ", " +
                                                     std::to_string(c.edges[e][1]) + ") has more than two faces");
            }
            c.vertex_faces[q[i]].push_back(f);
        }
    }

    c.vertex_neighbors.assign(c.vertex_count, {});
    c.boundary_edge.assign(c.edges.size(), false);
    c.boundary_vertex.assign(c.vertex_count, false);
    for (std::size_t e = 0; e < c.edges.size(); ++e) {
        const auto [a, b] = c.edges[e];
        c.vertex_neighbors[a].push_back(b);
        c.vertex_neighbors[b].push_back(a);
        if (c.edge_faces[e][1] < 0) {
            c.boundary_edge[e] = true;
            c.boundary_vertex[a] = true;
            c.boundary_vertex[b] = true;
        }
    }
    c.valence.resize(c.vertex_count);
    for (int v = 0; v < c.vertex_count; ++v) {
        std::sort(c.vertex_neighbors[v].begin(), c.vertex_neighbors[v].end());
        c.valence[v] = static_cast<int>(c.vertex_neighbors[v].size());
    }
    return c;
}

}  // namespace facegen
