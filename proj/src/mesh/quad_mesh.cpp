#include "facegen/mesh/quad_mesh.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "facegen/error.hpp"

namespace facegen {

void QuadMesh::validate() const {
    const int n = vertex_count();
    for (std::size_t f = 0; f < quads.size(); ++f) {
        const Quad& q = quads[f];
        for (int i = 0; i < 4; ++i) {
            require(q[i] >= 0 && q[i] < n, ErrorCode::IndexOutOfRange,
                    "quad " + std::to_string(f) + " references vertex " + std::to_string(q[i]));
            for (int j = i + 1; j < 4; ++j) {
                require(q[i] != q[j], ErrorCode::DegenerateQuad,
                        "quad " + std::to_string(f) + " repeats vertex " + std::to_string(q[i]));
            }
        }
    }
    require(uvs.empty() || uvs.size() == quads.size(), ErrorCode::DimensionMismatch,
            "uv table must have one entry per quad");
}

bool same_topology(const QuadMesh& a, const QuadMesh& b) {
    return a.vertex_count() == b.vertex_count() && a.quads == b.quads;
}

QuadMesh make_unit_cube() {
    QuadMesh m;
    m.vertices.resize(8, 3);
    for (int i = 0; i < 8; ++i) {
        m.vertices.row(i) << (i & 1), ((i >> 1) & 1), ((i >> 2) & 1);
    }
    // Counter-clockwise seen from outside.
    m.quads = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    return m;
}

QuadMesh make_grid(int nx, int ny, double sx, double sy) {
    QuadMesh m;
    m.vertices.resize((nx + 1) * (ny + 1), 3);
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            m.vertices.row(j * (nx + 1) + i) << sx * i / nx, sy * j / ny, 0.0;
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = j * (nx + 1) + i;
            m.quads.push_back({a, a + 1, a + nx + 2, a + nx + 1});
            m.uvs.push_back({Eigen::Vector2d(double(i) / nx, double(j) / ny),
                             Eigen::Vector2d(double(i + 1) / nx, double(j) / ny),
                             Eigen::Vector2d(double(i + 1) / nx, double(j + 1) / ny),
                             Eigen::Vector2d(double(i) / nx, double(j + 1) / ny)});
        }
    }
    return m;
}

QuadMesh make_torus(int major, int minor, double major_radius, double minor_radius) {
    QuadMesh m;
    m.vertices.resize(major * minor, 3);
    for (int i = 0; i < major; ++i) {
        const double u = 2.0 * std::numbers::pi * i / major;
        for (int j = 0; j < minor; ++j) {
            const double v = 2.0 * std::numbers::pi * j / minor;
            const double r = major_radius + minor_radius * std::cos(v);
            m.vertices.row(i * minor + j) << r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v);
        }
    }
    for (int i = 0; i < major; ++i) {
        for (int j = 0; j < minor; ++j) {
            const int i1 = (i + 1) % major, j1 = (j + 1) % minor;
            m.quads.push_back({i * minor + j, i1 * minor + j, i1 * minor + j1, i * minor + j1});
        }
    }
    return m;
}

}  // namespace facegen
