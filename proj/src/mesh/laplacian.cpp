#include "facegen/mesh/laplacian.hpp"

#include <string>

#include "facegen/error.hpp"

namespace facegen {

namespace {

void check(const MeshConnectivity& c, const Points& field) {
    require(field.rows() == c.vertex_count, ErrorCode::DimensionMismatch,
            "field has " + std::to_string(field.rows()) + " rows for " + std::to_string(c.vertex_count) +
                " vertices");
    for (int v = 0; v < c.vertex_count; ++v) {
        require(c.valence[v] > 0, ErrorCode::IsolatedVertex, "vertex " + std::to_string(v) + " has no neighbours");
    }
}

}  // namespace

Points uniform_laplacian_apply(const MeshConnectivity& c, const Points& field) {
    check(c, field);
    Points out(field.rows(), 3);
    for (int v = 0; v < c.vertex_count; ++v) {
        Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
        for (int u : c.vertex_neighbors[v]) sum += field.row(u);
        out.row(v) = sum / static_cast<double>(c.valence[v]) - field.row(v);
    }
    return out;
}

Points uniform_laplacian_apply_transpose(const MeshConnectivity& c, const Points& field) {
    check(c, field);
    Points out = -field;
    for (int v = 0; v < c.vertex_count; ++v) {
        const Eigen::RowVector3d share = field.row(v) / static_cast<double>(c.valence[v]);
        for (int u : c.vertex_neighbors[v]) out.row(u) += share;
    }
    return out;
}

}  // namespace facegen
