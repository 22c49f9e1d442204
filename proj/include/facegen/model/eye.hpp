#pragma once

#include <span>

#include <Eigen/Core>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen::model {

struct EyeGeometryParams {
    double sclera_radius = 0.012;
    double cornea_radius = 0.008;
    /// Depth of the cap cut off the sclera along the gaze axis (+z) to form the
    /// iris plane.
    double iris_flatten_depth = 0.0015;
    double cornea_refraction_index = 1.376;
    double pupil_radius = 0.002;

    void validate() const;
};

struct EyeMeshes {
    QuadMesh sclera;
    QuadMesh cornea;
    double refraction_index = 1.376;
    /// z of the iris plane in eye-local coordinates.
    double iris_plane = 0.0;
};

/// UV spheres centred at the origin looking down +z: `lat_segments` rings of
/// `lon_segments` vertices plus two poles. Pole caps use quads spanning two
/// ring intervals, so `lon_segments` must be even.
EyeMeshes build_eye(const EyeGeometryParams& params, int lat_segments, int lon_segments);

/// Default capture distance as a fraction of the sclera radius.
inline constexpr double kDefaultShrinkwrapCapture = 0.15;

/// Listed vertices inside the sphere, or outside but within `capture_distance`
/// of its surface, are moved radially onto the surface. Other vertices are
/// returned unchanged.
Points shrinkwrap_eyelids(const Points& face_vertices, std::span<const int> eyelid_vertex_ids,
                          const Eigen::Vector3d& sclera_center, double sclera_radius, double capture_distance);

}  // namespace facegen::model
