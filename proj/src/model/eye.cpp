#include "facegen/model/eye.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "facegen/error.hpp"

namespace facegen::model {

void EyeGeometryParams::validate() const {
    require(sclera_radius > 0 && cornea_radius > 0 && pupil_radius > 0, ErrorCode::InvalidParam,
            "eye radii must be positive");
    require(iris_flatten_depth >= 0 && iris_flatten_depth < sclera_radius, ErrorCode::InvalidParam,
            "iris flatten depth must lie in [0, sclera radius)");
    require(cornea_refraction_index >= 1.0, ErrorCode::InvalidParam, "refraction index below 1");
}

namespace {

QuadMesh uv_sphere(double radius, const Eigen::Vector3d& center, int lat, int lon) {
    QuadMesh m;
    m.vertices.resize(lat * lon + 2, 3);
    m.vertices.row(0) = (center + Eigen::Vector3d(0, 0, radius)).transpose();
    m.vertices.row(lat * lon + 1) = (center - Eigen::Vector3d(0, 0, radius)).transpose();
    for (int k = 0; k < lat; ++k) {
        const double theta = std::numbers::pi * (k + 1) / (lat + 1);
        for (int j = 0; j < lon; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / lon;
            const Eigen::Vector3d dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                      std::cos(theta));
            m.vertices.row(1 + k * lon + j) = (center + radius * dir).transpose();
        }
    }
    const int north = 0;
    const int south = lat * lon + 1;
    auto ring = [lon](int k, int j) { return 1 + k * lon + (j % lon); };
    for (int j = 0; j < lon; j += 2) m.quads.push_back({north, ring(0, j), ring(0, j + 1), ring(0, j + 2)});
    for (int k = 0; k + 1 < lat; ++k) {
        for (int j = 0; j < lon; ++j) m.quads.push_back({ring(k, j), ring(k + 1, j), ring(k + 1, j + 1), ring(k, j + 1)});
    }
    for (int j = 0; j < lon; j += 2) {
        m.quads.push_back({ring(lat - 1, j), south, ring(lat - 1, j + 2), ring(lat - 1, j + 1)});
    }
    return m;
}

}  // namespace

EyeMeshes build_eye(const EyeGeometryParams& params, int lat, int lon) {
    params.validate();
    require(lat >= 4 && lon >= 4, ErrorCode::InvalidParam, "eye sphere needs at least 4 segments per direction");
    require(lon % 2 == 0, ErrorCode::InvalidParam, "longitude segments must be even");

    const double r = params.sclera_radius;
    EyeMeshes eye;
    eye.refraction_index = params.cornea_refraction_index;
    eye.iris_plane = r - params.iris_flatten_depth;
    eye.sclera = uv_sphere(r, Eigen::Vector3d::Zero(), lat, lon);
    if (params.iris_flatten_depth > 0.0) {
        for (Eigen::Index v = 0; v < eye.sclera.vertices.rows(); ++v) {
            if (eye.sclera.vertices(v, 2) > eye.iris_plane) eye.sclera.vertices(v, 2) = eye.iris_plane;
        }
    }
    // The cornea passes through the rim of the iris disc when it is wide enough.
    const double iris_radius_sq = r * r - eye.iris_plane * eye.iris_plane;
    const double cr = params.cornea_radius;
    const double offset = std::sqrt(std::max(0.0, cr * cr - iris_radius_sq));
    eye.cornea = uv_sphere(cr, Eigen::Vector3d(0, 0, eye.iris_plane - offset), lat, lon);
    return eye;
}

Points shrinkwrap_eyelids(const Points& face_vertices, std::span<const int> ids, const Eigen::Vector3d& center,
                          double radius, double capture_distance) {
    require(radius > 0.0, ErrorCode::InvalidParam, "sclera radius must be positive");
    require(capture_distance >= 0.0, ErrorCode::InvalidParam, "capture distance must be non-negative");
    Points out = face_vertices;
    for (int id : ids) {
        require(id >= 0 && id < face_vertices.rows(), ErrorCode::IndexOutOfRange,
                "eyelid vertex id " + std::to_string(id) + " out of range");
        const Eigen::Vector3d offset = face_vertices.row(id).transpose() - center;
        const double dist = offset.norm();
        require(dist > 0.0, ErrorCode::DegenerateProjection,
                "eyelid vertex " + std::to_string(id) + " coincides with the sclera centre");
        if (dist == radius || dist > radius + capture_distance) continue;
        out.row(id) = (center + offset * (radius / dist)).transpose();
    }
    return out;
}

}  // namespace facegen::model
