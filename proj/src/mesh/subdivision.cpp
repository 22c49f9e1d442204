#include "facegen/mesh/subdivision.hpp"

#include <string>

#include "facegen/error.hpp"
#include "facegen/mesh/connectivity.hpp"

namespace facegen {

namespace {

QuadMesh subdivide_once(const QuadMesh& mesh) {
    const MeshConnectivity c = build_connectivity(mesh);
    const int nv = c.vertex_count;
    const int ne = c.edge_count();
    const int nf = c.face_count;
    const Points& p = mesh.vertices;

    QuadMesh out;
    out.vertices.resize(nv + ne + nf, 3);

    Points face_points(nf, 3);
    for (int f = 0; f < nf; ++f) {
        const Quad& q = mesh.quads[f];
        face_points.row(f) = 0.25 * (p.row(q[0]) + p.row(q[1]) + p.row(q[2]) + p.row(q[3]));
    }

    for (int e = 0; e < ne; ++e) {
        const auto [a, b] = c.edges[e];
        const auto [f0, f1] = c.edge_faces[e];
        if (f1 < 0) {
            out.vertices.row(nv + e) = 0.5 * (p.row(a) + p.row(b));
        } else {
            out.vertices.row(nv + e) = 0.25 * (p.row(a) + p.row(b) + face_points.row(f0) + face_points.row(f1));
        }
    }

    for (int v = 0; v < nv; ++v) {
        const auto& nbrs = c.vertex_neighbors[v];
        if (c.boundary_vertex[v]) {
            Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
            int count = 0;
            for (int u : nbrs) {
                if (c.boundary_edge[c.edge_index(u, v)]) {
                    sum += p.row(u);
                    ++count;
                }
            }
            // Vertices where more than one boundary curve meets are kept in place.
            out.vertices.row(v) = count == 2 ? Eigen::RowVector3d(0.75 * p.row(v) + 0.125 * sum)
                                             : Eigen::RowVector3d(p.row(v));
            continue;
        }
        const auto n = static_cast<double>(nbrs.size());
        if (nbrs.empty()) {
            out.vertices.row(v) = p.row(v);
            continue;
        }
        Eigen::RowVector3d q = Eigen::RowVector3d::Zero();
        for (int f : c.vertex_faces[v]) q += face_points.row(f);
        q /= static_cast<double>(c.vertex_faces[v].size());
        Eigen::RowVector3d r = Eigen::RowVector3d::Zero();
        for (int u : nbrs) r += 0.5 * (p.row(u) + p.row(v));
        r /= n;
        out.vertices.row(v) = (q + 2.0 * r + (n - 3.0) * p.row(v)) / n;
    }

    out.vertices.bottomRows(nf) = face_points;

    out.quads.reserve(4 * nf);
    if (mesh.has_uvs()) out.uvs.reserve(4 * nf);
    for (int f = 0; f < nf; ++f) {
        const Quad& q = mesh.quads[f];
        const auto& fe = c.face_edges[f];
        const int fp = nv + ne + f;
        for (int i = 0; i < 4; ++i) {
            const int prev = (i + 3) % 4;
            out.quads.push_back({q[i], nv + fe[i], fp, nv + fe[prev]});
            if (mesh.has_uvs()) {
                const QuadUvs& uv = mesh.uvs[f];
                const Eigen::Vector2d centre = 0.25 * (uv[0] + uv[1] + uv[2] + uv[3]);
                out.uvs.push_back({uv[i], 0.5 * (uv[i] + uv[(i + 1) % 4]), centre, 0.5 * (uv[prev] + uv[i])});
            }
        }
    }
    return out;
}

}  // namespace

QuadMesh subdivide_catmull_clark(const QuadMesh& mesh, int levels) {
    require(levels >= 0, ErrorCode::InvalidParam, "subdivision levels must be non-negative");
    if (levels == 0) {
        build_connectivity(mesh);
        return mesh;
    }
    QuadMesh current = subdivide_once(mesh);
    for (int l = 1; l < levels; ++l) current = subdivide_once(current);
    return current;
}

long long subdivided_vertex_count(long long vertices, long long edges, long long faces, int levels) {
    for (int l = 0; l < levels; ++l) {
        // Each level: V' = V + E + F, E' = 2E + 4F, F' = 4F.
        const long long v = vertices + edges + faces;
        const long long e = 2 * edges + 4 * faces;
        vertices = v;
        edges = e;
        faces = 4 * faces;
    }
    return vertices;
}

std::vector<int> refine_vertex_set(const QuadMesh& mesh, std::span<const int> ids, int levels) {
    require(levels >= 0, ErrorCode::InvalidParam, "subdivision levels must be non-negative");
    QuadMesh m;
    m.vertices = mesh.vertices;
    m.quads = mesh.quads;
    std::vector<char> member(static_cast<std::size_t>(m.vertex_count()), 0);
    for (int id : ids) {
        require(id >= 0 && id < m.vertex_count(), ErrorCode::IndexOutOfRange,
                "vertex id " + std::to_string(id) + " out of range");
        member[static_cast<std::size_t>(id)] = 1;
    }
    for (int level = 0; level < levels; ++level) {
        const auto conn = build_connectivity(m);
        std::vector<char> next(member);
        for (const auto& e : conn.edges) next.push_back(member[e[0]] && member[e[1]]);
        for (int f = 0; f < conn.face_count; ++f) {
            const auto& q = m.quads[static_cast<std::size_t>(f)];
            next.push_back(member[q[0]] && member[q[1]] && member[q[2]] && member[q[3]]);
        }
        m = subdivide_catmull_clark(m, 1);
        member = std::move(next);
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < member.size(); ++i) {
        if (member[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace facegen
