#pragma once

#include <span>
#include <vector>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen {

/// Catmull-Clark refinement applied `levels` times. Boundaries use the cubic
/// B-spline curve rules. Output vertex order per level: original vertices,
/// then edge points (in connectivity edge order), then face points. UVs are
/// carried along bilinearly when present.
QuadMesh subdivide_catmull_clark(const QuadMesh& mesh, int levels);

/// Vertex count after `levels` refinements of a closed or open quad mesh with
/// the given combinatorics.
long long subdivided_vertex_count(long long vertices, long long edges, long long faces, int levels);

/// Ids, in the refined mesh, of the vertices that depend only on members of
/// `ids`: their own vertex points, points of edges between two members and
/// points of faces whose corners are all members. Sorted ascending.
std::vector<int> refine_vertex_set(const QuadMesh& mesh, std::span<const int> ids, int levels);

}  // namespace facegen
