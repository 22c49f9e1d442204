#pragma once

#include <array>
#include <vector>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen {

using Edge = std::array<int, 2>;

/// Incidence tables derived from a quad list. Edges are stored with the lower
/// vertex index first and sorted lexicographically.
struct MeshConnectivity {
    int vertex_count = 0;
    int face_count = 0;
    std::vector<Edge> edges;
    /// Incident faces per edge; the second slot is -1 on boundary edges.
    std::vector<std::array<int, 2>> edge_faces;
    /// Edge index of side (corner i -> corner i+1) for each quad.
    std::vector<std::array<int, 4>> face_edges;
    std::vector<std::vector<int>> vertex_faces;
    /// Edge-adjacent vertices, sorted ascending.
    std::vector<std::vector<int>> vertex_neighbors;
    std::vector<int> valence;
    std::vector<bool> boundary_edge;
    std::vector<bool> boundary_vertex;

    int edge_count() const { return static_cast<int>(edges.size()); }
    /// -1 when (a, b) is not an edge.
    int edge_index(int a, int b) const;
    int euler_characteristic() const { return vertex_count - edge_count() + face_count; }
    bool is_closed() const;
};

/// Throws NonManifoldEdge when an edge has more than two incident faces and
/// DegenerateQuad when a quad repeats a vertex.
MeshConnectivity build_connectivity(const QuadMesh& mesh);

}  // namespace facegen
