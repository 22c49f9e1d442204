#pragma once

#include <cmath>
#include <random>

#include "facegen/mesh/subdivision.hpp"
#include "facegen/model/blendshape_model.hpp"
#include "test_support.hpp"

namespace facegen::testing {

/// Smooth random displacement field: a sum of two low-frequency sinusoids of
/// the rest position, amplitude ~ `scale`.
inline Eigen::RowVectorXd smooth_field(std::mt19937_64& rng, const Points& rest, double scale) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(rest.size());
    for (int term = 0; term < 2; ++term) {
        const Eigen::Vector3d k(nd(rng) * 8, nd(rng) * 8, nd(rng) * 8);
        const Eigen::Vector3d amp(nd(rng) * scale, nd(rng) * scale, nd(rng) * scale);
        const double ph = phase(rng);
        for (Eigen::Index v = 0; v < rest.rows(); ++v) {
            const double s = std::sin(rest.row(v).dot(k.transpose()) + ph);
            for (int c = 0; c < 3; ++c) out(3 * v + c) += amp(c) * s;
        }
    }
    return out;
}

/// Random model on top of an arbitrary template: smooth bases of amplitude
/// ~1 cm, the default skeleton and procedural skinning weights.
inline model::BlendshapeModel model_on_mesh(std::mt19937_64& rng, QuadMesh mesh, int identity_dim,
                                            int expression_dim, bool identity_offsets = true) {
    model::BlendshapeModel m;
    m.template_mesh = std::move(mesh);
    const Points& rest = m.template_mesh.vertices;
    m.identity_basis.resize(identity_dim, rest.size());
    for (int i = 0; i < identity_dim; ++i) m.identity_basis.row(i) = smooth_field(rng, rest, 0.01);
    m.expression_basis.resize(expression_dim, rest.size());
    for (int i = 0; i < expression_dim; ++i) m.expression_basis.row(i) = smooth_field(rng, rest, 0.01);
    m.skeleton = model::make_default_skeleton(rest, identity_dim);
    if (identity_offsets) {
        std::normal_distribution<double> nd(0.0, 0.003);
        for (auto& j : m.skeleton.joints) {
            for (Eigen::Index i = 0; i < j.identity_offset.size(); ++i) j.identity_offset.data()[i] = nd(rng);
        }
    }
    m.skinning_weights = model::procedural_skinning_weights(rest, m.skeleton, 0.02);
    return m;
}

/// Head-sized (0.2 m) jittered cube, refined `subdivision_levels` times.
inline model::BlendshapeModel random_model(std::mt19937_64& rng, int identity_dim, int expression_dim,
                                           int subdivision_levels = 1, bool identity_offsets = true) {
    QuadMesh mesh = subdivide_catmull_clark(make_unit_cube(), subdivision_levels);
    mesh.vertices = (mesh.vertices.array() - 0.5) * 0.2;
    perturb(mesh, rng, 0.002);
    return model_on_mesh(rng, std::move(mesh), identity_dim, expression_dim, identity_offsets);
}

/// Head-sized torus with exactly major * minor vertices.
inline model::BlendshapeModel random_torus_model(std::mt19937_64& rng, int major, int minor, int identity_dim,
                                                 int expression_dim, bool identity_offsets = true) {
    QuadMesh mesh = make_torus(major, minor, 0.1, 0.04);
    perturb(mesh, rng, 0.002);
    return model_on_mesh(rng, std::move(mesh), identity_dim, expression_dim, identity_offsets);
}

/// Pose inside the default skeleton limits (global rotation up to +-0.3 rad).
inline model::PoseVector random_pose(std::mt19937_64& rng, const model::Skeleton& s, double fraction = 0.8) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    model::PoseVector pose;
    for (int j = 0; j < model::kJointCount; ++j) {
        for (int a = 0; a < 3; ++a) {
            const auto& r = s.joints[j].rotation_limits[a];
            const double mid = 0.5 * (r.min + r.max), half = 0.5 * (r.max - r.min);
            pose(3 * j + a) = mid + fraction * half * u(rng);
        }
    }
    for (int a = 0; a < 3; ++a) pose(model::kJointAngleCount + a) = 0.3 * u(rng);
    return pose;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

inline Eigen::VectorXd random_unit_interval(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

}  // namespace facegen::testing
