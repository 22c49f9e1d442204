#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen::model {

enum Joint : int { kNeck = 0, kJaw = 1, kEyeLeft = 2, kEyeRight = 3 };
inline constexpr int kJointCount = 4;
inline constexpr int kJointAngleCount = 3 * kJointCount;  // 12
/// 4 joints x 3 Euler angles followed by 3 global rotation angles.
inline constexpr int kPoseDim = kJointAngleCount + 3;  // 15

using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;

struct AngleRange {
    double min = 0.0;
    double max = 0.0;
};

struct JointRecord {
    std::string name;
    int parent = -1;
    /// Joint pivot in the template skeleton.
    Eigen::Vector3d template_translation = Eigen::Vector3d::Zero();
    /// 3 x m map from identity coefficients to a pivot offset.
    Eigen::MatrixXd identity_offset;
    std::array<AngleRange, 3> rotation_limits{};
};

/// Neck is the root; jaw and both eyes hang off it.
struct Skeleton {
    std::array<JointRecord, kJointCount> joints;

    int identity_dim() const { return static_cast<int>(joints[0].identity_offset.cols()); }
    /// Pivot t_i = t0_i + a_i * alpha.
    Eigen::Vector3d pivot(int joint, const Eigen::VectorXd& alpha) const;
    void validate(int identity_dim) const;
    /// Copy with identity offsets resized to `m` columns (new columns zero).
    Skeleton with_identity_dim(int m) const;
};

/// Skeleton placed from the bounding box of a head-like template: neck at the
/// bottom back, jaw below the centre, eyes in the upper front. Identity offsets
/// are zero.
Skeleton make_default_skeleton(const Points& template_vertices, int identity_dim);

struct JointTransform {
    /// World rotation R_world of the bone.
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    /// Identity-adjusted pivot in the unposed mesh.
    Eigen::Vector3d rest_pivot = Eigen::Vector3d::Zero();
    /// Where that pivot ends up after posing the parent chain.
    Eigen::Vector3d posed_pivot = Eigen::Vector3d::Zero();

    /// x -> R_world (x - rest_pivot) + posed_pivot
    Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * (x - rest_pivot) + posed_pivot; }
    bool is_identity() const;
};

enum class LimitCheck { Enforce, Ignore };

/// World-space skinning transforms for the 4 joints. `pose` holds 12 joint
/// angles (the global rotation entries, if present, are not used here).
std::array<JointTransform, kJointCount> joint_transforms(const Skeleton& skeleton, const Eigen::VectorXd& alpha,
                                                         const PoseVector& pose,
                                                         LimitCheck check = LimitCheck::Enforce);

}  // namespace facegen::model
