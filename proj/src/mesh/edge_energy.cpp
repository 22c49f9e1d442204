#include "facegen/mesh/edge_energy.hpp"

#include "facegen/error.hpp"

namespace facegen {

EnergyWithGradient edge_length_energy(const QuadMesh& mesh, const QuadMesh& reference) {
    require(same_topology(mesh, reference), ErrorCode::TopologyMismatch, "edge energy needs identical topology");
    return edge_length_energy(mesh.vertices, reference.vertices, build_connectivity(mesh));
}

EnergyWithGradient edge_length_energy(const Points& x, const Points& ref, const MeshConnectivity& c) {
    require(x.rows() == c.vertex_count && ref.rows() == c.vertex_count, ErrorCode::TopologyMismatch,
            "edge energy vertex count mismatch");
    EnergyWithGradient out;
    out.gradient = Points::Zero(x.rows(), 3);
    for (const auto& [a, b] : c.edges) {
        const Eigen::RowVector3d e = x.row(b) - x.row(a);
        const double len = e.norm();
        const double diff = len - (ref.row(b) - ref.row(a)).norm();
        out.value += diff * diff;
        if (len > 0.0) {
            const Eigen::RowVector3d g = (2.0 * diff / len) * e;
            out.gradient.row(b) += g;
            out.gradient.row(a) -= g;
        }
    }
    return out;
}

}  // namespace facegen
