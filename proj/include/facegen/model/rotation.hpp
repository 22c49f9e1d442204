#pragma once

#include <array>

#include <Eigen/Core>

namespace facegen::model {

/// Intrinsic XYZ Euler rotation: R = Rx(angles.x) * Ry(angles.y) * Rz(angles.z).
/// Zero angles give the identity exactly.
Eigen::Matrix3d euler_xyz(const Eigen::Vector3d& angles);

/// dR/d(angle_k) for k = 0, 1, 2.
std::array<Eigen::Matrix3d, 3> euler_xyz_derivatives(const Eigen::Vector3d& angles);

/// Angles (x, y, z) with euler_xyz(angles) == r, y in [-pi/2, pi/2].
Eigen::Vector3d euler_xyz_angles(const Eigen::Matrix3d& r);

}  // namespace facegen::model
