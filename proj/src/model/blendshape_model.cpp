#include "facegen/model/blendshape_model.hpp"

#include <cmath>
#include <string>

#include "facegen/error.hpp"
#include "facegen/model/rotation.hpp"
#include "facegen/simd/kernels.hpp"

namespace facegen::model {

ModelParams ModelParams::zeros(int identity_dim, int expression_dim) {
    ModelParams p;
    p.alpha = Eigen::VectorXd::Zero(identity_dim);
    p.beta = Eigen::VectorXd::Zero(expression_dim);
    return p;
}

void BlendshapeModel::validate() const {
    template_mesh.validate();
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(vertex_count());
    require(identity_basis.cols() == n3 || identity_basis.rows() == 0, ErrorCode::DimensionMismatch,
            "identity basis width does not match the template");
    require(expression_basis.cols() == n3 || expression_basis.rows() == 0, ErrorCode::DimensionMismatch,
            "expression basis width does not match the template");
    require(skinning_weights.rows() == vertex_count(), ErrorCode::DimensionMismatch,
            "skinning weights need one row per vertex");
    for (Eigen::Index v = 0; v < skinning_weights.rows(); ++v) {
        require((skinning_weights.row(v).array() >= 0.0).all(), ErrorCode::InvalidParam,
                "negative skinning weight at vertex " + std::to_string(v));
        require(std::abs(skinning_weights.row(v).sum() - 1.0) <= 1e-9, ErrorCode::InvalidParam,
                "skinning weights of vertex " + std::to_string(v) + " do not sum to 1");
    }
    skeleton.validate(identity_dim());
}

SkinningWeights procedural_skinning_weights(const Points& vertices, const Skeleton& skeleton, double temperature) {
    require(temperature > 0.0, ErrorCode::InvalidParam, "skinning temperature must be positive");
    SkinningWeights w(vertices.rows(), kJointCount);
    for (Eigen::Index v = 0; v < vertices.rows(); ++v) {
        std::array<double, kJointCount> logits{};
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < kJointCount; ++j) {
            logits[j] = -(vertices.row(v).transpose() - skeleton.joints[j].template_translation).norm() / temperature;
            best = std::max(best, logits[j]);
        }
        double total = 0.0;
        for (int j = 0; j < kJointCount; ++j) {
            w(v, j) = std::exp(logits[j] - best);
            total += w(v, j);
        }
        w.row(v) /= total;
    }
    return w;
}

Points evaluate_unposed(const BlendshapeModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    require(alpha.size() == model.identity_dim(), ErrorCode::DimensionMismatch,
            "alpha has " + std::to_string(alpha.size()) + " entries, model has " +
                std::to_string(model.identity_dim()) + " identity shapes");
    require(beta.size() == model.expression_dim(), ErrorCode::DimensionMismatch,
            "beta has " + std::to_string(beta.size()) + " entries, model has " +
                std::to_string(model.expression_dim()) + " expression shapes");
    Points out = model.template_mesh.vertices;
    const std::size_t n = static_cast<std::size_t>(out.size());
    const auto& k = simd::active();
    for (Eigen::Index i = 0; i < alpha.size(); ++i) k.axpy(alpha(i), model.identity_basis.row(i).data(), out.data(), n);
    for (Eigen::Index j = 0; j < beta.size(); ++j) k.axpy(beta(j), model.expression_basis.row(j).data(), out.data(), n);
    return out;
}

namespace {

struct GlobalTransform {
    Eigen::Matrix3d rotation;
    Eigen::Vector3d translation;
    bool identity() const { return rotation == Eigen::Matrix3d::Identity() && translation.isZero(0.0); }
};

}  // namespace

Points apply_pose(const BlendshapeModel& model, const Eigen::VectorXd& alpha, const PoseVector& pose,
                  const Eigen::Vector3d& translation, const Points& unposed, LimitCheck check) {
    require(unposed.rows() == model.vertex_count(), ErrorCode::DimensionMismatch,
            "unposed vertex count does not match the model");
    require(model.skinning_weights.rows() == model.vertex_count(), ErrorCode::DimensionMismatch,
            "skinning weights need one row per vertex");
    const auto bones = joint_transforms(model.skeleton, alpha, pose, check);
    std::array<bool, kJointCount> identity{};
    for (int j = 0; j < kJointCount; ++j) identity[j] = bones[j].is_identity();
    const GlobalTransform global{euler_xyz(pose.tail<3>()), translation};
    const bool global_identity = global.identity();

    Points out(unposed.rows(), 3);
    for (Eigen::Index v = 0; v < unposed.rows(); ++v) {
        const Eigen::Vector3d x = unposed.row(v).transpose();
        bool rigid_identity = true;
        for (int j = 0; j < kJointCount; ++j) {
            if (model.skinning_weights(v, j) != 0.0 && !identity[j]) rigid_identity = false;
        }
        Eigen::Vector3d y = x;
        if (!rigid_identity) {
            y.setZero();
            for (int j = 0; j < kJointCount; ++j) {
                const double w = model.skinning_weights(v, j);
                if (w != 0.0) y += w * bones[j].apply(x);
            }
        }
        if (!global_identity) y = global.rotation * y + global.translation;
        out.row(v) = y.transpose();
    }
    return out;
}

QuadMesh evaluate(const BlendshapeModel& model, const ModelParams& params) {
    QuadMesh mesh = model.template_mesh;
    mesh.vertices = apply_pose(model, params.alpha, params.pose, params.translation,
                               evaluate_unposed(model, params.alpha, params.beta));
    return mesh;
}

ParamGradients evaluate_backward(const BlendshapeModel& model, const ModelParams& params, const Points& grad_posed) {
    require(grad_posed.rows() == model.vertex_count(), ErrorCode::DimensionMismatch,
            "gradient vertex count does not match the model");
    const Points unposed = evaluate_unposed(model, params.alpha, params.beta);
    const auto bones = joint_transforms(model.skeleton, params.alpha, params.pose, LimitCheck::Ignore);
    const Eigen::Vector3d global_angles = params.pose.tail<3>();
    const Eigen::Matrix3d rg = euler_xyz(global_angles);

    ParamGradients g;
    g.unposed.resize(unposed.rows(), 3);
    Eigen::Matrix3d grad_rg = Eigen::Matrix3d::Zero();
    // Per-bone sums: S_j = sum_v w_vj gy_v (x_v - p_j)^T and h_j = sum_v w_vj gy_v.
    std::array<Eigen::Matrix3d, kJointCount> s;
    std::array<Eigen::Vector3d, kJointCount> h;
    s.fill(Eigen::Matrix3d::Zero());
    h.fill(Eigen::Vector3d::Zero());

    for (Eigen::Index v = 0; v < unposed.rows(); ++v) {
        const Eigen::Vector3d x = unposed.row(v).transpose();
        const Eigen::Vector3d gz = grad_posed.row(v).transpose();
        Eigen::Vector3d y = Eigen::Vector3d::Zero();
        Eigen::Matrix3d blend = Eigen::Matrix3d::Zero();
        for (int j = 0; j < kJointCount; ++j) {
            const double w = model.skinning_weights(v, j);
            y += w * bones[j].apply(x);
            blend += w * bones[j].rotation;
        }
        grad_rg += gz * y.transpose();
        g.translation += gz;
        const Eigen::Vector3d gy = rg.transpose() * gz;
        g.unposed.row(v) = (blend.transpose() * gy).transpose();
        for (int j = 0; j < kJointCount; ++j) {
            const double w = model.skinning_weights(v, j);
            s[j] += (w * gy) * (x - bones[j].rest_pivot).transpose();
            h[j] += w * gy;
        }
    }

    // Bone level: R_world_j = R_neck R_j, posed_pivot_j = R_neck (p_j - p_neck) + p_neck.
    std::array<Eigen::Matrix3d, kJointCount> local;
    for (int j = 0; j < kJointCount; ++j) local[j] = euler_xyz(params.pose.segment<3>(3 * j));
    const Eigen::Matrix3d& rn = local[kNeck];
    const Eigen::Vector3d& pn = bones[kNeck].rest_pivot;

    std::array<Eigen::Matrix3d, kJointCount> grad_local;
    std::array<Eigen::Vector3d, kJointCount> grad_pivot;
    grad_local.fill(Eigen::Matrix3d::Zero());
    grad_pivot.fill(Eigen::Vector3d::Zero());
    for (int j = 0; j < kJointCount; ++j) {
        const Eigen::Matrix3d& grad_world = s[j];
        const Eigen::Vector3d grad_posed_pivot = h[j];
        grad_pivot[j] -= bones[j].rotation.transpose() * h[j];
        if (j == kNeck) {
            grad_local[kNeck] += grad_world;
            grad_pivot[kNeck] += grad_posed_pivot;
        } else {
            const Eigen::Vector3d& pj = bones[j].rest_pivot;
            grad_local[kNeck] += grad_world * local[j].transpose();
            grad_local[j] += rn.transpose() * grad_world;
            grad_local[kNeck] += grad_posed_pivot * (pj - pn).transpose();
            const Eigen::Vector3d rt_g = rn.transpose() * grad_posed_pivot;
            grad_pivot[j] += rt_g;
            grad_pivot[kNeck] += grad_posed_pivot - rt_g;
        }
    }

    for (int j = 0; j < kJointCount; ++j) {
        const auto d = euler_xyz_derivatives(params.pose.segment<3>(3 * j));
        for (int a = 0; a < 3; ++a) g.pose(3 * j + a) = (grad_local[j].array() * d[a].array()).sum();
    }
    const auto dg = euler_xyz_derivatives(global_angles);
    for (int a = 0; a < 3; ++a) g.pose(kJointAngleCount + a) = (grad_rg.array() * dg[a].array()).sum();

    const std::size_t n = static_cast<std::size_t>(g.unposed.size());
    const auto& k = simd::active();
    g.alpha.resize(model.identity_dim());
    for (int i = 0; i < model.identity_dim(); ++i) {
        g.alpha(i) = k.dot(model.identity_basis.row(i).data(), g.unposed.data(), n);
    }
    for (int j = 0; j < kJointCount; ++j) {
        const auto& a = model.skeleton.joints[j].identity_offset;
        if (a.cols() == model.identity_dim() && a.cols() > 0) g.alpha += a.transpose() * grad_pivot[j];
    }
    g.beta.resize(model.expression_dim());
    for (int i = 0; i < model.expression_dim(); ++i) {
        g.beta(i) = k.dot(model.expression_basis.row(i).data(), g.unposed.data(), n);
    }
    return g;
}

}  // namespace facegen::model
