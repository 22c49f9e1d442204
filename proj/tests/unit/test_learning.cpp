#include <algorithm>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "doctest.h"
#include "facegen/error.hpp"
#include "facegen/learning/adam.hpp"
#include "facegen/learning/fit.hpp"
#include "facegen/mesh/laplacian.hpp"
#include "learning_fixtures.hpp"

using namespace facegen;
using namespace facegen::learning;
using namespace facegen::testing;
using model::ModelParams;

TEST_CASE("barrier4") {
    CHECK(barrier4(0.5, 0, 1).value == 0.0);
    CHECK(barrier4(0.5, 0, 1).derivative == 0.0);
    CHECK(barrier4(1.5, 0, 1).value == 0.0625);
    CHECK(barrier4(-0.5, 0, 1).value == 0.0625);
    CHECK(barrier4(0.0, 0, 1).value == 0.0);
    CHECK(barrier4(1.0, 0, 1).value == 0.0);
    for (double x : {-0.3, 0.2, 1.7}) {
        const double h = 1e-6;
        const double fd = (barrier4(x + h, 0, 1).value - barrier4(x - h, 0, 1).value) / (2 * h);
        CHECK(std::abs(fd - barrier4(x, 0, 1).derivative) <= 1e-8);
    }
}

TEST_CASE("data_term") {
    LossWeights w;
    const QuadMesh grid = make_grid(4, 3, 1.0, 1.0);
    const auto zero = data_term(grid, grid, w);
    CHECK(zero.value == 0.0);
    CHECK(zero.gradient.isZero(0.0));

    QuadMesh shifted = grid;
    const double eps = 0.01;
    shifted.vertices.col(0).array() += eps;
    const auto t = data_term(grid, shifted, w);
    CHECK(t.vertex == doctest::Approx(eps * eps).epsilon(1e-12));
    CHECK(std::abs(t.normal) < 1e-15);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        QuadMesh target = make_torus(5, 4, 0.1, 0.04);
        perturb(target, rng, 0.005);
        QuadMesh gen = target;
        perturb(gen, rng, 0.01);
        const auto d = data_term(gen, target, w);
        const auto fd = finite_difference_gradient(
            [&](const Eigen::VectorXd& x) {
                QuadMesh g = gen;
                g.vertices = unflatten(x);
                return data_term(g, target, w).value;
            },
            flatten(gen.vertices));
        CHECK(relative_error(flatten(d.gradient), fd) < 1e-5);
    }
    QuadMesh other = make_grid(3, 3);
    CHECK_THROWS_WITH_AS(data_term(other, grid, w), doctest::Contains("TopologyMismatch"), Error);
}

TEST_CASE("total_loss") {
    LossWeights w;
    SUBCASE("template scans with zero parameters cost nothing") {
        std::mt19937_64 rng(12);
        auto model = random_torus_model(rng, 5, 4, 2, 3);
        model.identity_basis.setZero();
        const ScanSet scans = {{"a", model.template_mesh}, {"b", model.template_mesh}};
        const std::vector<ModelParams> thetas(2, ModelParams::zeros(2, 3));
        const auto r = total_loss(model, thetas, scans, w);
        CHECK(r.total == 0.0);
        for (double v : r.breakdown.values()) CHECK(v == 0.0);
    }

    SUBCASE("breakdown is linear in the weights and sums to the total") {
        std::mt19937_64 rng(13);
        auto inst = random_loss_instance(rng, 5, 4, 2, 2, 3);
        const auto r1 = total_loss(inst.model, inst.thetas, inst.scans, w);
        LossWeights w2 = w;
        w2.laplacian *= 2;
        const auto r2 = total_loss(inst.model, inst.thetas, inst.scans, w2);
        CHECK(r1.breakdown.laplacian > 0.0);
        CHECK(r2.breakdown.laplacian == 2.0 * r1.breakdown.laplacian);
        CHECK(r2.breakdown.vertex == r1.breakdown.vertex);
        double sum = 0.0;
        for (double v : r1.breakdown.values()) sum += v;
        CHECK(std::abs(sum - r1.total) <= 1e-9 * std::abs(r1.total));
    }

    SUBCASE("barriers vanish inside the limits") {
        std::mt19937_64 rng(14);
        auto inst = random_loss_instance(rng, 5, 4, 2, 2, 3);
        for (auto& t : inst.thetas) {
            t.beta = random_unit_interval(rng, 3);
            t.pose = random_pose(rng, inst.model.skeleton, 0.99);
        }
        const auto r = total_loss(inst.model, inst.thetas, inst.scans, w);
        CHECK(r.breakdown.barrier_expr == 0.0);
        CHECK(r.breakdown.barrier_pose == 0.0);
    }

    SUBCASE("invariant to scan order") {
        std::mt19937_64 rng(15);
        auto inst = random_loss_instance(rng, 5, 4, 5, 2, 3);
        const auto a = total_loss(inst.model, inst.thetas, inst.scans, w);
        auto scans = inst.scans;
        auto thetas = inst.thetas;
        std::reverse(scans.begin(), scans.end());
        std::reverse(thetas.begin(), thetas.end());
        const auto b = total_loss(inst.model, thetas, scans, w);
        CHECK(a.total == b.total);
        CHECK(a.identity_basis == b.identity_basis);
        CHECK(a.thetas[0].alpha == b.thetas[4].alpha);
    }

    SUBCASE("thread count does not change the result") {
        std::mt19937_64 rng(16);
        auto inst = random_loss_instance(rng, 5, 4, 7, 2, 3);
        const LossContext ctx(inst.model, inst.scans);
        const auto a = total_loss(ctx, inst.model, inst.thetas, w, {}, 1);
        const auto b = total_loss(ctx, inst.model, inst.thetas, w, {}, 3);
        CHECK(a.total == b.total);
        CHECK(a.identity_basis == b.identity_basis);
    }

    SUBCASE("frozen blocks have zero gradient") {
        std::mt19937_64 rng(17);
        auto inst = random_loss_instance(rng, 5, 4, 2, 2, 3);
        const LossContext ctx(inst.model, inst.scans);
        const auto r = total_loss(ctx, inst.model, inst.thetas, w, Freeze{true, true});
        for (const auto& g : r.thetas) {
            CHECK(g.beta.isZero(0.0));
            CHECK(g.pose.isZero(0.0));
            CHECK(g.translation.isZero(0.0));
        }
    }

    SUBCASE("dimension errors") {
        std::mt19937_64 rng(18);
        auto inst = random_loss_instance(rng, 5, 4, 2, 2, 3);
        inst.thetas.pop_back();
        CHECK_THROWS_WITH_AS(total_loss(inst.model, inst.thetas, inst.scans, w),
                             doctest::Contains("DimensionMismatch"), Error);
    }
}

TEST_CASE("total_loss gradients match finite differences for every block") {
    const LossWeights w;
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 3; ++trial) {
        auto inst = random_loss_instance(rng, 5, 4, 2, 2, 3);
        const LossContext ctx(inst.model, inst.scans);
        const auto r = total_loss(ctx, inst.model, inst.thetas, w);
        auto loss_with = [&](auto mutate) {
            return [&, mutate](const Eigen::VectorXd& x) {
                auto model = inst.model;
                auto thetas = inst.thetas;
                mutate(model, thetas, x);
                return total_loss(ctx, model, thetas, w).total;
            };
        };
        const Eigen::Map<const Eigen::VectorXd> phi(inst.model.identity_basis.data(), inst.model.identity_basis.size());
        const auto fd_phi = finite_difference_gradient(
            loss_with([](model::BlendshapeModel& m, auto&, const Eigen::VectorXd& x) {
                Eigen::Map<Eigen::VectorXd>(m.identity_basis.data(), x.size()) = x;
            }),
            phi);
        CHECK(relative_error(Eigen::Map<const Eigen::VectorXd>(r.identity_basis.data(), r.identity_basis.size()),
                             fd_phi) < 1e-5);
        for (std::size_t k = 0; k < inst.scans.size(); ++k) {
            const auto fd_alpha = finite_difference_gradient(
                loss_with([k](auto&, std::vector<ModelParams>& t, const Eigen::VectorXd& x) { t[k].alpha = x; }),
                inst.thetas[k].alpha);
            const auto fd_beta = finite_difference_gradient(
                loss_with([k](auto&, std::vector<ModelParams>& t, const Eigen::VectorXd& x) { t[k].beta = x; }),
                inst.thetas[k].beta);
            const auto fd_pose = finite_difference_gradient(
                loss_with([k](auto&, std::vector<ModelParams>& t, const Eigen::VectorXd& x) { t[k].pose = x; }),
                inst.thetas[k].pose);
            const auto fd_t = finite_difference_gradient(
                loss_with([k](auto&, std::vector<ModelParams>& t, const Eigen::VectorXd& x) { t[k].translation = x; }),
                inst.thetas[k].translation);
            CHECK(relative_error(r.thetas[k].alpha, fd_alpha) < 1e-5);
            CHECK(relative_error(r.thetas[k].beta, fd_beta) < 1e-5);
            CHECK(relative_error(r.thetas[k].pose, fd_pose) < 1e-5);
            CHECK(relative_error(r.thetas[k].translation, fd_t) < 1e-5);
        }
    }
}

TEST_CASE("adam_step") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        AdamState s(3);
        Eigen::VectorXd x(3);
        x << 1, -2, 0.5;
        const Eigen::VectorXd before = x;
        adam_step(s, x, Eigen::VectorXd::Zero(3), 0.1);
        CHECK(x == before);
    }
    SUBCASE("first step against the hand-evaluated formula") {
        AdamState s(1);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
        Eigen::VectorXd g = Eigen::VectorXd::Ones(1);
        adam_step(s, x, g, 0.1);
        CHECK(x(0) == doctest::Approx(-0.1 / (1 + 1e-8)).epsilon(1e-15));
        CHECK(x(0) == doctest::Approx(-0.09999999).epsilon(1e-8));
    }
    SUBCASE("two constant-gradient steps follow a scalar trace") {
        // Scripted by hand: m1=0.1g, v1=0.001g^2, m2=0.19g, v2=0.001999g^2.
        const double g = 0.5, lr = 0.01, eps = 1e-8;
        double expected = 1.0;
        const double m1 = 0.1 * g, v1 = 0.001 * g * g;
        expected -= lr * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + eps);
        const double m2 = 0.19 * g, v2 = 0.001999 * g * g;
        expected -= lr * (m2 / 0.19) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + eps);
        AdamState s(1);
        Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
        const Eigen::VectorXd gv = Eigen::VectorXd::Constant(1, g);
        adam_step(s, x, gv, lr);
        adam_step(s, x, gv, lr);
        CHECK(x(0) == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("lr = 0 is bit-identical") {
        AdamState s(4);
        Eigen::VectorXd x(4);
        x << -0.0, 1e-300, 3, -7;
        const Eigen::VectorXd before = x;
        std::mt19937_64 rng(20);
        for (int i = 0; i < 5; ++i) adam_step(s, x, random_vector(rng, 4), 0.0);
        for (int i = 0; i < 4; ++i) CHECK(std::signbit(x(i)) == std::signbit(before(i)));
        CHECK(x == before);
    }
    SUBCASE("shape mismatch") {
        AdamState s(2);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_WITH_AS(adam_step(s, x, Eigen::VectorXd::Zero(3), 0.1), doctest::Contains("ShapeMismatch"),
                             Error);
    }
}

TEST_CASE("fit recovers a known two-shape model") {
    std::mt19937_64 rng(21);
    const auto truth = random_torus_model(rng, 10, 5, 2, 4, false);
    const auto scans = scans_from_model(rng, truth, 10);
    // The default priors bias the fit by roughly this tolerance, so they are
    // weakened to test recovery itself.
    FitConfig config;
    config.freeze = {true, true};
    config.weights.id_coeff = config.weights.id_basis = 1e-7;
    config.weights.laplacian = config.weights.edge = 0.0;
    const auto result = fit(scans, truth, 2, config);
    const Points& rest = truth.template_mesh.vertices;
    const double diag = (rest.colwise().maxCoeff() - rest.colwise().minCoeff()).norm();
    for (std::size_t k = 0; k < scans.size(); ++k) {
        const auto mesh = model::evaluate(result.model, result.thetas[k]);
        const double rms = std::sqrt((mesh.vertices - scans[k].mesh.vertices).squaredNorm() / rest.rows());
        CHECK(rms < 1e-3 * diag);
        CHECK(result.report.scan_residual_rms[k] == doctest::Approx(rms).epsilon(1e-6));
    }
    CHECK(result.report.iterations == static_cast<int>(result.report.trajectory.size()));
    CHECK(result.report.trajectory.size() <= 2000);
    CHECK(max_principal_angle(result.model.identity_basis, truth.identity_basis) < 0.05);
}

TEST_CASE("fit on template copies shrinks the basis") {
    std::mt19937_64 rng(22);
    const auto base = random_torus_model(rng, 5, 4, 2, 3, false);
    const ScanSet scans = {{"a", base.template_mesh}, {"b", base.template_mesh}, {"c", base.template_mesh}};
    FitConfig config;
    config.init = InitMode::Random;
    config.schedule.iterations = 300;
    config.schedule.stop_tolerance = 0;
    const auto result = fit(scans, base, 2, config);
    std::mt19937_64 init_rng(config.seed);
    std::normal_distribution<double> nd(0.0, config.random_init_sigma);
    double init_norm = 0.0;
    for (Eigen::Index i = 0; i < result.model.identity_basis.size(); ++i) init_norm += std::pow(nd(init_rng), 2);
    CHECK(result.model.identity_basis.squaredNorm() < 0.5 * init_norm);
    CHECK(result.report.trajectory.back().total() < result.report.trajectory.front().total());
}

TEST_CASE("fit descends from a random init") {
    std::mt19937_64 rng(23);
    auto inst = random_loss_instance(rng, 6, 4, 4, 2, 3);
    FitConfig config;
    config.init = InitMode::Random;
    config.schedule.iterations = 201;
    config.schedule.stop_tolerance = 0;
    const auto result = fit(inst.scans, inst.model, 2, config);
    CHECK(result.report.trajectory[200].total() < result.report.trajectory[0].total());
}

TEST_CASE("fit is deterministic and validates inputs") {
    std::mt19937_64 rng(24);
    const auto truth = random_torus_model(rng, 6, 4, 2, 3, false);
    const auto scans = scans_from_model(rng, truth, 4);
    FitConfig config;
    config.schedule.iterations = 30;
    config.freeze.beta = true;
    const auto a = fit(scans, truth, 2, config);
    const auto b = fit(scans, truth, 2, config);
    CHECK(a.model.identity_basis == b.model.identity_basis);
    CHECK(a.report.final_total == b.report.final_total);
    config.threads = 3;
    const auto c = fit(scans, truth, 2, config);
    CHECK(a.model.identity_basis == c.model.identity_basis);

    CHECK_THROWS_AS(fit(scans, truth, 5, config), Error);
    CHECK_THROWS_AS(fit(ScanSet(scans.begin(), scans.begin() + 1), truth, 1, config), Error);
    config.weights.edge = -1;
    CHECK_THROWS_WITH_AS(fit(scans, truth, 2, config), doctest::Contains("InvalidParam"), Error);
}

TEST_CASE("fit reports divergence") {
    std::mt19937_64 rng(25);
    const auto truth = random_torus_model(rng, 6, 4, 2, 3, false);
    auto scans = scans_from_model(rng, truth, 3);
    scans[1].mesh.vertices(0, 0) = std::numeric_limits<double>::quiet_NaN();
    FitConfig config;
    config.schedule.iterations = 5;
    CHECK_THROWS_WITH_AS(fit(scans, truth, 2, config), doctest::Contains("Diverged"), Error);
}

TEST_CASE("fit config and report serialization") {
    const auto c = fit_config_from_json(nlohmann::json::parse(
        R"({"weights": {"edge": 0.5}, "schedule": {"iterations": 7}, "init": {"mode": "random"},
            "seed": 3, "freeze": {"beta": true}})"));
    CHECK(c.weights.edge == 0.5);
    CHECK(c.weights.vertex == 1.0);
    CHECK(c.schedule.iterations == 7);
    CHECK(c.init == InitMode::Random);
    CHECK(c.seed == 3);
    CHECK(c.freeze.beta);
    CHECK_FALSE(c.freeze.pose);
    CHECK(to_json(fit_config_from_json(to_json(c))) == to_json(c));
    CHECK_THROWS_WITH_AS(fit_config_from_json(nlohmann::json::parse(R"({"weight": {}})")),
                         doctest::Contains("unknown key"), Error);
    CHECK_THROWS_AS(fit_config_from_json(nlohmann::json::parse(R"({"weights": {"vertex": "x"}})")), Error);

    FitReport r;
    r.trajectory.resize(2);
    r.trajectory[0].vertex = 1.5;
    r.trajectory[1].vertex = 0.25;
    r.iterations = 2;
    const std::string csv = trajectory_csv(r);
    CHECK(csv.rfind("iteration,total,vertex,normal,", 0) == 0);
    CHECK(csv.find("\n1,0.25,0.25,") != std::string::npos);
    CHECK(to_json(r)["loss_trajectory"].size() == 2);
}

TEST_CASE("identity projection and PCA init") {
    std::mt19937_64 rng(26);
    const auto truth = random_torus_model(rng, 6, 4, 3, 2, false);
    model::ModelParams p = model::ModelParams::zeros(3, 2);
    p.alpha = random_vector(rng, 3);
    const auto scan = model::evaluate(truth, p);
    CHECK((project_identity(truth, scan) - p.alpha).norm() < 1e-9);

    const auto scans = scans_from_model(rng, truth, 6);
    const auto basis = pca_identity_basis(scans, truth.template_mesh, 3);
    CHECK(max_principal_angle(basis, truth.identity_basis) < 1e-6);
}
