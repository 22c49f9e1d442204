#include "facegen/model/skeleton.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "facegen/error.hpp"
#include "facegen/model/rotation.hpp"

namespace facegen::model {

namespace {

const std::array<const char*, kJointCount> kJointNames = {"neck", "jaw", "eye_left", "eye_right"};
const std::array<const char*, 3> kAxisNames = {"x", "y", "z"};

}  // namespace

Eigen::Vector3d Skeleton::pivot(int joint, const Eigen::VectorXd& alpha) const {
    const JointRecord& j = joints[joint];
    if (alpha.size() == 0 || j.identity_offset.cols() == 0) return j.template_translation;
    return j.template_translation + j.identity_offset * alpha;
}

void Skeleton::validate(int m) const {
    for (int i = 0; i < kJointCount; ++i) {
        const JointRecord& j = joints[i];
        require(j.parent == (i == kNeck ? -1 : kNeck), ErrorCode::InvalidParam,
                "joint " + std::to_string(i) + " must be parented to the neck");
        require(j.identity_offset.rows() == 3 && j.identity_offset.cols() == m, ErrorCode::DimensionMismatch,
                "joint '" + j.name + "' identity offset must be 3 x " + std::to_string(m));
        for (int a = 0; a < 3; ++a) {
            const AngleRange& r = j.rotation_limits[a];
            require(r.min < r.max, ErrorCode::InvalidParam, "joint '" + j.name + "' has empty limit range");
            require(std::abs(r.min) < std::numbers::pi && std::abs(r.max) < std::numbers::pi,
                    ErrorCode::InvalidParam, "joint '" + j.name + "' limit reaches pi");
        }
    }
}

Skeleton Skeleton::with_identity_dim(int m) const {
    Skeleton s = *this;
    for (auto& j : s.joints) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, m);
        const auto keep = std::min<Eigen::Index>(m, j.identity_offset.cols());
        if (keep > 0) a.leftCols(keep) = j.identity_offset.leftCols(keep);
        j.identity_offset = std::move(a);
    }
    return s;
}

Skeleton make_default_skeleton(const Points& v, int m) {
    const Eigen::Vector3d lo = v.colwise().minCoeff().transpose();
    const Eigen::Vector3d hi = v.colwise().maxCoeff().transpose();
    const Eigen::Vector3d ext = hi - lo;
    const Eigen::Vector3d mid = 0.5 * (lo + hi);

    Skeleton s;
    const std::array<Eigen::Vector3d, kJointCount> pivots = {
        Eigen::Vector3d(mid.x(), lo.y() + 0.1 * ext.y(), mid.z() - 0.2 * ext.z()),
        Eigen::Vector3d(mid.x(), lo.y() + 0.45 * ext.y(), mid.z() - 0.1 * ext.z()),
        Eigen::Vector3d(mid.x() + 0.18 * ext.x(), lo.y() + 0.62 * ext.y(), mid.z() + 0.3 * ext.z()),
        Eigen::Vector3d(mid.x() - 0.18 * ext.x(), lo.y() + 0.62 * ext.y(), mid.z() + 0.3 * ext.z()),
    };
    const std::array<std::array<AngleRange, 3>, kJointCount> limits = {{
        {{{-0.6, 0.6}, {-1.2, 1.2}, {-0.5, 0.5}}},
        {{{-0.05, 0.5}, {-0.15, 0.15}, {-0.1, 0.1}}},
        {{{-0.5, 0.5}, {-0.7, 0.7}, {-0.05, 0.05}}},
        {{{-0.5, 0.5}, {-0.7, 0.7}, {-0.05, 0.05}}},
    }};
    for (int i = 0; i < kJointCount; ++i) {
        s.joints[i].name = kJointNames[i];
        s.joints[i].parent = i == kNeck ? -1 : kNeck;
        s.joints[i].template_translation = pivots[i];
        s.joints[i].identity_offset = Eigen::MatrixXd::Zero(3, m);
        s.joints[i].rotation_limits = limits[i];
    }
    return s;
}

bool JointTransform::is_identity() const {
    return rotation == Eigen::Matrix3d::Identity() && rest_pivot == posed_pivot;
}

std::array<JointTransform, kJointCount> joint_transforms(const Skeleton& skeleton, const Eigen::VectorXd& alpha,
                                                         const PoseVector& pose, LimitCheck check) {
    if (check == LimitCheck::Enforce) {
        for (int j = 0; j < kJointCount; ++j) {
            for (int a = 0; a < 3; ++a) {
                const double angle = pose(3 * j + a);
                const AngleRange& r = skeleton.joints[j].rotation_limits[a];
                if (angle < r.min || angle > r.max) {
                    fail(ErrorCode::PoseLimitViolation, "joint '" + skeleton.joints[j].name + "' axis " +
                                                            kAxisNames[a] + " angle " + std::to_string(angle) +
                                                            " outside [" + std::to_string(r.min) + ", " +
                                                            std::to_string(r.max) + "]");
                }
            }
        }
    }
    std::array<JointTransform, kJointCount> out;
    for (int j = 0; j < kJointCount; ++j) {
        const Eigen::Matrix3d local = euler_xyz(pose.segment<3>(3 * j));
        JointTransform& t = out[j];
        t.rest_pivot = skeleton.pivot(j, alpha);
        if (j == kNeck) {
            t.rotation = local;
            t.posed_pivot = t.rest_pivot;
        } else {
            const JointTransform& parent = out[kNeck];
            t.rotation = parent.rotation * local;
            // An unrotated parent leaves the pivot exactly where it was.
            t.posed_pivot = parent.rotation == Eigen::Matrix3d::Identity() ? t.rest_pivot : parent.apply(t.rest_pivot);
        }
    }
    return out;
}

}  // namespace facegen::model
