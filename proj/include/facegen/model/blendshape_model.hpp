#pragma once

#include <array>

#include <Eigen/Core>

#include "facegen/mesh/quad_mesh.hpp"
#include "facegen/model/skeleton.hpp"

namespace facegen::model {

/// k x 3V basis, one blendshape per row with xyz interleaved per vertex.
using Basis = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SkinningWeights = Eigen::Matrix<double, Eigen::Dynamic, kJointCount, Eigen::RowMajor>;

inline constexpr int kDefaultExpressionCount = 51;

struct ModelParams {
    Eigen::VectorXd alpha;  // identity
    Eigen::VectorXd beta;   // expression, each in [0, 1]
    PoseVector pose = PoseVector::Zero();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static ModelParams zeros(int identity_dim, int expression_dim);
};

struct BlendshapeModel {
    QuadMesh template_mesh;
    Basis identity_basis;
    Basis expression_basis;
    Skeleton skeleton;
    SkinningWeights skinning_weights;

    int vertex_count() const { return template_mesh.vertex_count(); }
    int identity_dim() const { return static_cast<int>(identity_basis.rows()); }
    int expression_dim() const { return static_cast<int>(expression_basis.rows()); }

    void validate() const;
};

/// Softmax over negative distances to the joint pivots; lower temperature
/// gives sharper bone regions. Rows sum to one.
SkinningWeights procedural_skinning_weights(const Points& vertices, const Skeleton& skeleton, double temperature);

/// V0 + sum alpha_i phi_i + sum beta_j psi_j, accumulated in basis order.
Points evaluate_unposed(const BlendshapeModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

/// Linear-blend skinning about identity-adjusted pivots followed by the
/// global rotation (pose entries 12..14) and translation. Vertices whose
/// influencing bones are all identity transforms are copied unchanged.
Points apply_pose(const BlendshapeModel& model, const Eigen::VectorXd& alpha, const PoseVector& pose,
                  const Eigen::Vector3d& translation, const Points& unposed,
                  LimitCheck check = LimitCheck::Enforce);

QuadMesh evaluate(const BlendshapeModel& model, const ModelParams& params);

struct ParamGradients {
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    PoseVector pose = PoseVector::Zero();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    /// dL/d(unposed vertices); the identity-basis gradient is alpha_i times this.
    Points unposed;
};

/// Reverse-mode derivative of evaluate: given dL/d(posed vertices), returns
/// the gradient with respect to every entry of ModelParams. Limits are not
/// enforced so callers may differentiate outside the admissible range.
ParamGradients evaluate_backward(const BlendshapeModel& model, const ModelParams& params, const Points& grad_posed);

}  // namespace facegen::model
