#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "facegen/error.hpp"
#include "facegen/mesh/connectivity.hpp"
#include "facegen/mesh/normals.hpp"
#include "facegen/model/eye.hpp"
#include "facegen/model/model_io.hpp"
#include "facegen/model/rotation.hpp"
#include "model_fixtures.hpp"

using namespace facegen;
using namespace facegen::model;
using namespace facegen::testing;

namespace {

// Independent per-vertex loop for V0 + sum alpha_i phi_i + sum beta_j psi_j.
Points naive_unposed(const BlendshapeModel& m, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    Points out(m.vertex_count(), 3);
    for (int v = 0; v < m.vertex_count(); ++v) {
        for (int c = 0; c < 3; ++c) {
            double x = m.template_mesh.vertices(v, c);
            for (int i = 0; i < alpha.size(); ++i) x += alpha(i) * m.identity_basis(i, 3 * v + c);
            for (int j = 0; j < beta.size(); ++j) x += beta(j) * m.expression_basis(j, 3 * v + c);
            out(v, c) = x;
        }
    }
    return out;
}

// Independent LBS: builds 4x4 homogeneous bone matrices from scratch.
Points naive_lbs(const BlendshapeModel& m, const Eigen::VectorXd& alpha, const PoseVector& pose,
                 const Eigen::Vector3d& translation, const Points& unposed) {
    auto homogeneous = [](const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
        Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
        h.topLeftCorner<3, 3>() = r;
        h.topRightCorner<3, 1>() = t;
        return h;
    };
    std::array<Eigen::Matrix4d, kJointCount> world{}, rest{};
    for (int j = 0; j < kJointCount; ++j) {
        const Eigen::Vector3d p = m.skeleton.joints[j].template_translation + m.skeleton.joints[j].identity_offset * alpha;
        const Eigen::Matrix3d r = euler_xyz(pose.segment<3>(3 * j));
        rest[j] = homogeneous(Eigen::Matrix3d::Identity(), p);
        if (j == kNeck) {
            world[j] = homogeneous(r, p);
        } else {
            const Eigen::Vector3d pn = m.skeleton.joints[kNeck].template_translation +
                                       m.skeleton.joints[kNeck].identity_offset * alpha;
            world[j] = world[kNeck] * homogeneous(r, p - pn);
        }
    }
    const Eigen::Matrix4d global = homogeneous(euler_xyz(pose.tail<3>()), translation);
    Points out(unposed.rows(), 3);
    for (Eigen::Index v = 0; v < unposed.rows(); ++v) {
        Eigen::Vector4d x(unposed(v, 0), unposed(v, 1), unposed(v, 2), 1.0);
        Eigen::Vector4d y = Eigen::Vector4d::Zero();
        for (int j = 0; j < kJointCount; ++j) y += m.skinning_weights(v, j) * (world[j] * rest[j].inverse() * x);
        out.row(v) = (global * y).head<3>().transpose();
    }
    return out;
}

}  // namespace

TEST_CASE("evaluate_unposed") {
    std::mt19937_64 rng(1);
    const auto m = random_model(rng, 3, 5);
    const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(3), b0 = Eigen::VectorXd::Zero(5);
    CHECK(evaluate_unposed(m, a0, b0) == m.template_mesh.vertices);

    Eigen::VectorXd e1 = a0;
    e1(1) = 1.0;
    const Points one_hot = evaluate_unposed(m, e1, b0);
    const Points expected = m.template_mesh.vertices + unflatten(m.identity_basis.row(1).transpose());
    CHECK(one_hot == expected);

    for (int trial = 0; trial < 5; ++trial) {
        const auto alpha = random_vector(rng, 3), beta = random_unit_interval(rng, 5);
        CHECK(evaluate_unposed(m, alpha, beta) == naive_unposed(m, alpha, beta));
    }
    CHECK_THROWS_WITH_AS(evaluate_unposed(m, Eigen::VectorXd::Zero(2), b0), doctest::Contains("DimensionMismatch"),
                         Error);
}

TEST_CASE("joint transforms") {
    std::mt19937_64 rng(2);
    const auto m = random_model(rng, 3, 2);
    const auto& s = m.skeleton;
    SUBCASE("zero pose and identity") {
        const auto t = joint_transforms(s, Eigen::VectorXd::Zero(3), PoseVector::Zero());
        for (int j = 0; j < kJointCount; ++j) {
            CHECK(t[j].rotation == Eigen::Matrix3d::Identity());
            CHECK(t[j].posed_pivot == s.joints[j].template_translation);
        }
    }
    SUBCASE("neck yaw carries children rigidly") {
        PoseVector pose = PoseVector::Zero();
        pose(1) = 0.3;
        const auto t = joint_transforms(s, Eigen::VectorXd::Zero(3), pose);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()).toRotationMatrix();
        const Eigen::Vector3d pn = s.joints[kNeck].template_translation;
        for (int j : {kJaw, kEyeLeft, kEyeRight}) {
            const Eigen::Vector3d expected = r * (s.joints[j].template_translation - pn) + pn;
            CHECK((t[j].posed_pivot - expected).norm() < 1e-15);
            CHECK((t[j].rotation - r).norm() < 1e-15);
        }
    }
    SUBCASE("pivot follows the identity law") {
        const auto alpha = random_vector(rng, 3);
        const auto t = joint_transforms(s, alpha, PoseVector::Zero());
        for (int j = 0; j < kJointCount; ++j) {
            const Eigen::Vector3d expected = s.joints[j].template_translation + s.joints[j].identity_offset * alpha;
            CHECK(t[j].rest_pivot == expected);
        }
    }
    SUBCASE("limit violation names the joint and axis") {
        PoseVector pose = PoseVector::Zero();
        pose(3 * kJaw + 0) = 1.5;
        CHECK_THROWS_WITH_AS(joint_transforms(s, Eigen::VectorXd::Zero(3), pose),
                             doctest::Contains("'jaw' axis x"), Error);
        CHECK_NOTHROW(joint_transforms(s, Eigen::VectorXd::Zero(3), pose, LimitCheck::Ignore));
    }
    CHECK(euler_xyz(Eigen::Vector3d::Zero()) == Eigen::Matrix3d::Identity());
}

TEST_CASE("Euler decomposition inverts euler_xyz") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector3d a = random_vector(rng, 3, 0.5);
        CHECK((euler_xyz_angles(euler_xyz(a)) - a).norm() < 1e-12);
    }
}

TEST_CASE("apply_pose") {
    std::mt19937_64 rng(4);
    auto m = random_model(rng, 3, 2);
    const auto alpha = random_vector(rng, 3);
    const Points unposed = evaluate_unposed(m, alpha, Eigen::VectorXd::Zero(2));

    CHECK(apply_pose(m, alpha, PoseVector::Zero(), Eigen::Vector3d::Zero(), unposed) == unposed);

    SUBCASE("single-bone skinning is rigid") {
        auto rigid = m;
        rigid.skinning_weights.setZero();
        rigid.skinning_weights.col(kNeck).setOnes();
        PoseVector pose = PoseVector::Zero();
        pose.segment<3>(0) << 0.2, -0.4, 0.1;
        const Points posed = apply_pose(rigid, alpha, pose, Eigen::Vector3d::Zero(), unposed);
        const Eigen::Matrix3d r = euler_xyz(pose.segment<3>(0));
        const Eigen::Vector3d p = rigid.skeleton.pivot(kNeck, alpha);
        for (Eigen::Index v = 0; v < posed.rows(); ++v) {
            const Eigen::Vector3d expected = r * (unposed.row(v).transpose() - p) + p;
            CHECK((posed.row(v).transpose() - expected).norm() < 1e-12);
        }
    }
    SUBCASE("random poses match an independent homogeneous-matrix LBS") {
        for (int trial = 0; trial < 5; ++trial) {
            const PoseVector pose = random_pose(rng, m.skeleton);
            const Eigen::Vector3d t = random_vector(rng, 3, 0.05);
            const Points posed = apply_pose(m, alpha, pose, t, unposed);
            CHECK((posed - naive_lbs(m, alpha, pose, t, unposed)).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SUBCASE("posed vertices are convex combinations of the per-bone images") {
        const PoseVector pose = random_pose(rng, m.skeleton);
        const auto bones = joint_transforms(m.skeleton, alpha, pose);
        PoseVector local_only = pose;
        local_only.tail<3>().setZero();
        const Points posed = apply_pose(m, alpha, local_only, Eigen::Vector3d::Zero(), unposed);
        for (Eigen::Index v = 0; v < posed.rows(); ++v) {
            Eigen::Vector3d combo = Eigen::Vector3d::Zero();
            for (int j = 0; j < kJointCount; ++j) {
                CHECK(m.skinning_weights(v, j) >= 0.0);
                combo += m.skinning_weights(v, j) * bones[j].apply(unposed.row(v).transpose());
            }
            CHECK((combo - posed.row(v).transpose()).norm() < 1e-14);
        }
    }
}

TEST_CASE("evaluate composes the two stages") {
    std::mt19937_64 rng(5);
    const auto m = random_model(rng, 2, 3);
    ModelParams zero = ModelParams::zeros(2, 3);
    CHECK(evaluate(m, zero).vertices == m.template_mesh.vertices);

    ModelParams p = zero;
    p.alpha = random_vector(rng, 2);
    p.beta = random_unit_interval(rng, 3);
    p.pose = random_pose(rng, m.skeleton);
    p.translation = random_vector(rng, 3, 0.01);
    const Points composed = apply_pose(m, p.alpha, p.pose, p.translation, evaluate_unposed(m, p.alpha, p.beta));
    CHECK(evaluate(m, p).vertices == composed);
    CHECK(evaluate(m, p).quads == m.template_mesh.quads);
}

TEST_CASE("evaluate is linear in the coefficients when offsets vanish") {
    std::mt19937_64 rng(6);
    const auto m = random_model(rng, 3, 3, 1, /*identity_offsets=*/false);
    const PoseVector pose = random_pose(rng, m.skeleton);
    auto f = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        ModelParams p = ModelParams::zeros(3, 3);
        p.alpha = a;
        p.beta = b;
        p.pose = pose;
        return Points(evaluate(m, p).vertices);
    };
    const Eigen::VectorXd a1 = random_vector(rng, 3), a2 = random_vector(rng, 3);
    const Eigen::VectorXd b1 = random_unit_interval(rng, 3), b2 = random_unit_interval(rng, 3);
    const Eigen::VectorXd za = Eigen::VectorXd::Zero(3);
    const Points base = f(za, za);
    const Points lhs = f(a1 + a2, b1 + b2) - base;
    const Points rhs = (f(a1, b1) - base) + (f(a2, b2) - base);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("evaluate_backward matches finite differences for every parameter block") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 4; ++trial) {
        const auto m = random_model(rng, 2, 3);
        ModelParams p = ModelParams::zeros(2, 3);
        p.alpha = random_vector(rng, 2);
        p.beta = random_unit_interval(rng, 3);
        p.pose = random_pose(rng, m.skeleton);
        p.translation = random_vector(rng, 3, 0.01);
        const Points weights = random_points(rng, m.vertex_count());
        auto loss = [&](const ModelParams& q) {
            const Points x = apply_pose(m, q.alpha, q.pose, q.translation, evaluate_unposed(m, q.alpha, q.beta),
                                        LimitCheck::Ignore);
            return (x.array() * weights.array()).sum();
        };
        const auto g = evaluate_backward(m, p, weights);

        auto fd = [&](auto setter, const Eigen::VectorXd& x0) {
            return finite_difference_gradient(
                [&](const Eigen::VectorXd& x) {
                    ModelParams q = p;
                    setter(q, x);
                    return loss(q);
                },
                x0);
        };
        CHECK(relative_error(g.alpha, fd([](ModelParams& q, const Eigen::VectorXd& x) { q.alpha = x; }, p.alpha)) < 1e-5);
        CHECK(relative_error(g.beta, fd([](ModelParams& q, const Eigen::VectorXd& x) { q.beta = x; }, p.beta)) < 1e-5);
        CHECK(relative_error(g.pose, fd([](ModelParams& q, const Eigen::VectorXd& x) { q.pose = x; }, p.pose)) < 1e-5);
        CHECK(relative_error(g.translation,
                             fd([](ModelParams& q, const Eigen::VectorXd& x) { q.translation = x; }, p.translation)) <
              1e-5);
    }
}

TEST_CASE("rigid-motion equivariance") {
    std::mt19937_64 rng(8);
    const auto m = random_model(rng, 2, 2);
    const Eigen::Matrix3d g = Eigen::AngleAxisd(0.9, Eigen::Vector3d(0.3, -1, 0.5).normalized()).toRotationMatrix();
    const Eigen::Vector3d tg(0.1, -0.2, 0.05);

    BlendshapeModel moved = m;
    moved.template_mesh.vertices = (m.template_mesh.vertices * g.transpose()).rowwise() + tg.transpose();
    for (Eigen::Index i = 0; i < m.identity_dim(); ++i) {
        moved.identity_basis.row(i) = flatten(unflatten(m.identity_basis.row(i).transpose()) * g.transpose());
    }
    for (Eigen::Index i = 0; i < m.expression_dim(); ++i) {
        moved.expression_basis.row(i) = flatten(unflatten(m.expression_basis.row(i).transpose()) * g.transpose());
    }
    for (auto& j : moved.skeleton.joints) {
        j.template_translation = g * j.template_translation + tg;
        j.identity_offset = g * j.identity_offset;
    }

    ModelParams p = ModelParams::zeros(2, 2);
    p.alpha = random_vector(rng, 2);
    p.beta = random_unit_interval(rng, 2);
    p.pose = random_pose(rng, m.skeleton, 0.5);
    p.translation = random_vector(rng, 3, 0.01);

    // Conjugate every rotation by g and fix up the translation.
    ModelParams q = p;
    for (int j = 0; j < kJointCount + 1; ++j) {
        q.pose.segment<3>(3 * j) = euler_xyz_angles(g * euler_xyz(p.pose.segment<3>(3 * j)) * g.transpose());
    }
    const Eigen::Matrix3d rg = euler_xyz(q.pose.tail<3>());
    q.translation = g * p.translation + tg - rg * tg;

    const Points a = apply_pose(m, p.alpha, p.pose, p.translation, evaluate_unposed(m, p.alpha, p.beta));
    const Points b = apply_pose(moved, q.alpha, q.pose, q.translation, evaluate_unposed(moved, q.alpha, q.beta),
                                LimitCheck::Ignore);
    const Points expected = (a * g.transpose()).rowwise() + tg.transpose();
    CHECK((b - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("model validation and serialization") {
    std::mt19937_64 rng(9);
    auto m = random_model(rng, 3, 4);
    CHECK_NOTHROW(m.validate());
    const auto back = from_container(to_container(m));
    CHECK(back.template_mesh.vertices == m.template_mesh.vertices);
    CHECK(back.identity_basis == m.identity_basis);
    CHECK(back.expression_basis == m.expression_basis);
    CHECK(back.skinning_weights == m.skinning_weights);
    for (int j = 0; j < kJointCount; ++j) {
        CHECK(back.skeleton.joints[j].identity_offset == m.skeleton.joints[j].identity_offset);
        CHECK(back.skeleton.joints[j].rotation_limits[1].max == m.skeleton.joints[j].rotation_limits[1].max);
    }
    auto container = to_container(m);
    container.attributes().erase("model_version");
    CHECK_THROWS_WITH_AS(from_container(container), doctest::Contains("model_version"), Error);

    auto bad = m;
    bad.skinning_weights(0, 0) += 0.1;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.skeleton.joints[kJaw].rotation_limits[0] = {0.2, 0.1};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("eye geometry") {
    EyeGeometryParams params;
    params.iris_flatten_depth = 0.0;
    const auto round = build_eye(params, 8, 12);
    CHECK(round.sclera.vertex_count() == 8 * 12 + 2);
    for (Eigen::Index v = 0; v < round.sclera.vertices.rows(); ++v) {
        CHECK(std::abs(round.sclera.vertices.row(v).norm() - params.sclera_radius) < 1e-12);
    }
    CHECK(round.refraction_index == 1.376);
    const auto c = build_connectivity(round.sclera);
    CHECK(c.is_closed());
    CHECK(c.euler_characteristic() == 2);
    const auto normals = vertex_normals(round.sclera).normals;
    for (Eigen::Index v = 0; v < normals.rows(); ++v) CHECK(normals.row(v).dot(round.sclera.vertices.row(v)) > 0.0);

    params.iris_flatten_depth = params.sclera_radius / 4;
    const auto flat = build_eye(params, 8, 12);
    const double plane = params.sclera_radius - params.sclera_radius / 4;
    CHECK(flat.sclera.vertices.col(2).maxCoeff() <= plane + 1e-12);
    CHECK(flat.cornea.vertex_count() == 8 * 12 + 2);

    CHECK_THROWS_AS(build_eye(params, 3, 12), Error);
    CHECK_THROWS_AS(build_eye(params, 8, 11), Error);
    params.sclera_radius = -1;
    CHECK_THROWS_WITH_AS(build_eye(params, 8, 12), doctest::Contains("InvalidParam"), Error);
}

TEST_CASE("eyelid shrinkwrap") {
    const double r = 0.012;
    const Eigen::Vector3d centre(0.01, 0.02, 0.03);
    const Eigen::Vector3d dir = Eigen::Vector3d(1, 2, -1).normalized();
    Points face(4, 3);
    face.row(0) = (centre + r * dir).transpose();
    face.row(1) = (centre + 1.1 * r * dir).transpose();
    face.row(2) = (centre + 0.5 * r * dir).transpose();
    face.row(3) = (centre + 1.1 * r * dir).transpose();
    const int ids[] = {0, 1, 2};
    const Points out = shrinkwrap_eyelids(face, ids, centre, r, 0.2 * r);
    CHECK(out.row(0) == face.row(0));
    CHECK(std::abs((out.row(1).transpose() - centre).norm() - r) < 1e-15);
    CHECK(((out.row(1).transpose() - centre).normalized() - dir).norm() < 1e-14);
    CHECK(std::abs((out.row(2).transpose() - centre).norm() - r) < 1e-15);
    CHECK(out.row(3) == face.row(3));  // not listed

    const Points far = shrinkwrap_eyelids(face, ids, centre, r, 0.05 * r);
    CHECK(far.row(1) == face.row(1));

    Points bad = face;
    bad.row(0) = centre.transpose();
    CHECK_THROWS_WITH_AS(shrinkwrap_eyelids(bad, ids, centre, r, 0.2 * r), doctest::Contains("DegenerateProjection"),
                         Error);
}
