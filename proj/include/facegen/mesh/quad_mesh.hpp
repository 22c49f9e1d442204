#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace facegen {

/// V x 3 positions, xyz interleaved and contiguous per vertex.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Quad = std::array<int, 4>;
using QuadUvs = std::array<Eigen::Vector2d, 4>;

/// Fixed-topology quad mesh. `uvs` is either empty or holds one entry per quad
/// (one uv per face corner).
struct QuadMesh {
    Points vertices;
    std::vector<Quad> quads;
    std::vector<QuadUvs> uvs;

    int vertex_count() const { return static_cast<int>(vertices.rows()); }
    int face_count() const { return static_cast<int>(quads.size()); }
    bool has_uvs() const { return !uvs.empty(); }

    /// Index range and distinct-corner checks. Manifoldness is checked by
    /// build_connectivity.
    void validate() const;
};

bool same_topology(const QuadMesh& a, const QuadMesh& b);

/// Unit cube [0,1]^3 with outward-facing quads.
QuadMesh make_unit_cube();
/// Planar z=0 grid of (nx+1) x (ny+1) vertices spanning [0,sx] x [0,sy].
QuadMesh make_grid(int nx, int ny, double sx = 1.0, double sy = 1.0);
/// Closed quad torus with `major` x `minor` faces.
QuadMesh make_torus(int major, int minor, double major_radius = 1.0, double minor_radius = 0.35);

}  // namespace facegen
