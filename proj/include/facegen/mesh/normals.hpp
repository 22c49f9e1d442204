#pragma once

#include <span>
#include <vector>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen {

struct NormalField {
    Points normals;
    /// Faces whose diagonal cross product fell below 1e-15; they contribute
    /// nothing to their vertices.
    std::vector<int> zero_area_faces;
};

/// Per-vertex normal = normalized sum of incident face normals, where a face
/// normal is the normalized cross product of the quad diagonals.
NormalField vertex_normals(const QuadMesh& mesh);
NormalField vertex_normals(const Points& positions, std::span<const Quad> quads);

/// Vector-Jacobian product of vertex_normals: given dL/dnormals, returns
/// dL/dpositions.
Points vertex_normals_backward(const Points& positions, std::span<const Quad> quads, const Points& grad_normals);

}  // namespace facegen
