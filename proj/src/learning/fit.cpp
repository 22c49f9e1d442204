#include "facegen/learning/fit.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "facegen/error.hpp"
#include "facegen/learning/adam.hpp"
#include "facegen/mesh/obj_io.hpp"

namespace facegen::learning {

using model::BlendshapeModel;
using model::ModelParams;

void FitConfig::validate() const {
    weights.validate();
    require(schedule.iterations >= 0, ErrorCode::InvalidParam, "iteration count must be non-negative");
    require(schedule.lr >= 0.0 && schedule.length_lr >= 0.0, ErrorCode::InvalidParam,
            "learning rates must be non-negative");
    require(schedule.stop_tolerance >= 0.0 && schedule.stop_window >= 1, ErrorCode::InvalidParam,
            "early-stop settings out of range");
    require(pca_scale > 0.0 && random_init_sigma > 0.0, ErrorCode::InvalidParam, "init scales must be positive");
    require(threads >= 1, ErrorCode::InvalidParam, "thread count must be at least 1");
}

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), ErrorCode::ParseError, where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        require(known, ErrorCode::ParseError, "unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

FitConfig fit_config_from_json(const nlohmann::json& j) {
    FitConfig c;
    check_keys(j, {"weights", "schedule", "init", "seed", "freeze", "threads"}, "fit config");
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        check_keys(w, {"vertex", "normal", "barrier_expr", "barrier_pose", "id_coeff", "id_basis", "laplacian", "edge"},
                   "weights");
        read_if(w, "vertex", c.weights.vertex);
        read_if(w, "normal", c.weights.normal);
        read_if(w, "barrier_expr", c.weights.barrier_expr);
        read_if(w, "barrier_pose", c.weights.barrier_pose);
        read_if(w, "id_coeff", c.weights.id_coeff);
        read_if(w, "id_basis", c.weights.id_basis);
        read_if(w, "laplacian", c.weights.laplacian);
        read_if(w, "edge", c.weights.edge);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        check_keys(s, {"iterations", "lr", "length_lr", "stop_tolerance", "stop_window"}, "schedule");
        read_if(s, "iterations", c.schedule.iterations);
        read_if(s, "lr", c.schedule.lr);
        read_if(s, "length_lr", c.schedule.length_lr);
        read_if(s, "stop_tolerance", c.schedule.stop_tolerance);
        read_if(s, "stop_window", c.schedule.stop_window);
    }
    if (j.contains("init")) {
        const auto& i = j.at("init");
        check_keys(i, {"mode", "pca_scale", "sigma"}, "init");
        std::string mode = "pca";
        read_if(i, "mode", mode);
        require(mode == "pca" || mode == "random", ErrorCode::ParseError, "init mode must be 'pca' or 'random'");
        c.init = mode == "pca" ? InitMode::Pca : InitMode::Random;
        read_if(i, "pca_scale", c.pca_scale);
        read_if(i, "sigma", c.random_init_sigma);
    }
    read_if(j, "seed", c.seed);
    if (j.contains("freeze")) {
        const auto& f = j.at("freeze");
        check_keys(f, {"beta", "pose"}, "freeze");
        read_if(f, "beta", c.freeze.beta);
        read_if(f, "pose", c.freeze.pose);
    }
    read_if(j, "threads", c.threads);
    c.validate();
    return c;
}

nlohmann::json to_json(const FitConfig& c) {
    return {
        {"weights",
         {{"vertex", c.weights.vertex},
          {"normal", c.weights.normal},
          {"barrier_expr", c.weights.barrier_expr},
          {"barrier_pose", c.weights.barrier_pose},
          {"id_coeff", c.weights.id_coeff},
          {"id_basis", c.weights.id_basis},
          {"laplacian", c.weights.laplacian},
          {"edge", c.weights.edge}}},
        {"schedule",
         {{"iterations", c.schedule.iterations},
          {"lr", c.schedule.lr},
          {"length_lr", c.schedule.length_lr},
          {"stop_tolerance", c.schedule.stop_tolerance},
          {"stop_window", c.schedule.stop_window}}},
        {"init",
         {{"mode", c.init == InitMode::Pca ? "pca" : "random"},
          {"pca_scale", c.pca_scale},
          {"sigma", c.random_init_sigma}}},
        {"seed", c.seed},
        {"freeze", {{"beta", c.freeze.beta}, {"pose", c.freeze.pose}}},
        {"threads", c.threads},
    };
}

nlohmann::json to_json(const FitReport& r) {
    nlohmann::json breakdown = nlohmann::json::object();
    const auto values = r.final_breakdown.values();
    for (std::size_t i = 0; i < values.size(); ++i) breakdown[LossBreakdown::names()[i]] = values[i];
    nlohmann::json totals = nlohmann::json::array();
    for (const auto& b : r.trajectory) totals.push_back(b.total());
    nlohmann::json scans = nlohmann::json::array();
    for (std::size_t k = 0; k < r.scan_ids.size(); ++k) {
        scans.push_back({{"id", r.scan_ids[k]}, {"residual_rms_m", r.scan_residual_rms[k]}});
    }
    return {{"iterations", r.iterations},     {"early_stopped", r.early_stopped},
            {"final_total", r.final_total},   {"final_breakdown", breakdown},
            {"loss_trajectory", totals},      {"scans", scans},
            {"wall_time_s", r.wall_time_seconds}};
}

std::string trajectory_csv(const FitReport& r) {
    std::ostringstream out;
    out << "iteration,total";
    for (const auto& n : LossBreakdown::names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        out << i << ',' << format_double(r.trajectory[i].total());
        for (double v : r.trajectory[i].values()) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

model::Basis pca_identity_basis(const ScanSet& scans, const QuadMesh& template_mesh, int m) {
    require(!scans.empty(), ErrorCode::InvalidParam, "no scans");
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(template_mesh.vertex_count());
    Eigen::MatrixXd d(static_cast<Eigen::Index>(scans.size()), n3);
    for (std::size_t k = 0; k < scans.size(); ++k) {
        require(scans[k].mesh.vertex_count() == template_mesh.vertex_count(), ErrorCode::TopologyMismatch,
                "scan '" + scans[k].id + "' has the wrong vertex count");
        const Points diff = scans[k].mesh.vertices - template_mesh.vertices;
        d.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::RowVectorXd>(diff.data(), n3);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinV);
    model::Basis basis = model::Basis::Zero(m, n3);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(scans.size()));
    const Eigen::Index available = std::min<Eigen::Index>(m, svd.singularValues().size());
    for (Eigen::Index i = 0; i < available; ++i) {
        basis.row(i) = (svd.singularValues()(i) * inv_sqrt_n) * svd.matrixV().col(i).transpose();
    }
    return basis;
}

Eigen::VectorXd project_identity(const BlendshapeModel& model, const QuadMesh& scan) {
    require(scan.vertex_count() == model.vertex_count(), ErrorCode::TopologyMismatch,
            "scan vertex count does not match the model");
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(model.vertex_count());
    const Points diff = scan.vertices - model.template_mesh.vertices;
    const Eigen::Map<const Eigen::VectorXd> d(diff.data(), n3);
    const Eigen::MatrixXd a = model.identity_basis.transpose();
    return a.completeOrthogonalDecomposition().solve(d);
}

namespace {

// Packs alpha, beta and the pose of every scan into one dimensionless vector.
struct CoefficientLayout {
    Eigen::Index m, ne, stride;
    CoefficientLayout(int m_, int ne_) : m(m_), ne(ne_), stride(m_ + ne_ + model::kPoseDim) {}

    void pack(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const model::PoseVector& p, Eigen::VectorXd& out,
              std::size_t k) const {
        const Eigen::Index o = stride * static_cast<Eigen::Index>(k);
        out.segment(o, m) = a;
        out.segment(o + m, ne) = b;
        out.segment(o + m + ne, model::kPoseDim) = p;
    }
    void unpack(const Eigen::VectorXd& in, std::size_t k, ModelParams& theta) const {
        const Eigen::Index o = stride * static_cast<Eigen::Index>(k);
        theta.alpha = in.segment(o, m);
        theta.beta = in.segment(o + m, ne);
        theta.pose = in.segment(o + m + ne, model::kPoseDim);
    }
};

}  // namespace

FitResult fit(const ScanSet& scans, const BlendshapeModel& base, int m, const FitConfig& config) {
    config.validate();
    require(scans.size() >= 2, ErrorCode::InvalidParam, "fitting needs at least two scans");
    require(m >= 1 && static_cast<std::size_t>(m) <= scans.size(), ErrorCode::InvalidParam,
            "identity basis size must lie in [1, number of scans]");
    const auto start = std::chrono::steady_clock::now();

    FitResult result;
    BlendshapeModel& model = result.model;
    model = base;
    // The learned basis has no relation to any previous one, so joint offsets
    // start from zero.
    model.skeleton = base.skeleton.with_identity_dim(0).with_identity_dim(m);
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(model.vertex_count());
    if (config.init == InitMode::Pca) {
        model.identity_basis = config.pca_scale * pca_identity_basis(scans, model.template_mesh, m);
    } else {
        std::mt19937_64 rng(config.seed);
        std::normal_distribution<double> normal(0.0, config.random_init_sigma);
        model.identity_basis.resize(m, n3);
        for (Eigen::Index i = 0; i < model.identity_basis.size(); ++i) model.identity_basis.data()[i] = normal(rng);
    }
    model.validate();

    const std::size_t n = scans.size();
    const int ne = model.expression_dim();
    result.thetas.assign(n, ModelParams::zeros(m, ne));
    const LossContext context(model, scans);

    const CoefficientLayout layout(m, ne);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(layout.stride * static_cast<Eigen::Index>(n));
    Eigen::VectorXd coeff_grad(coeffs.size());
    Eigen::VectorXd translations = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(n));
    Eigen::VectorXd translation_grad(translations.size());
    Eigen::Map<Eigen::VectorXd> phi(model.identity_basis.data(), model.identity_basis.size());
    AdamState phi_state(phi.size()), coeff_state(coeffs.size()), translation_state(translations.size());

    auto& report = result.report;
    const auto& sched = config.schedule;
    for (int it = 0; it < sched.iterations; ++it) {
        const LossResult loss = total_loss(context, model, result.thetas, config.weights, config.freeze,
                                           config.threads);
        if (!std::isfinite(loss.total)) {
            fail(ErrorCode::Diverged, "loss became non-finite at iteration " + std::to_string(it));
        }
        report.trajectory.push_back(loss.breakdown);
        if (sched.stop_tolerance > 0.0 && it >= sched.stop_window) {
            const double before = report.trajectory[it - sched.stop_window].total();
            if (before - loss.total <= sched.stop_tolerance * std::abs(before)) {
                report.early_stopped = true;
                break;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            const auto& g = loss.thetas[k];
            layout.pack(g.alpha, g.beta, g.pose, coeff_grad, k);
            translation_grad.segment<3>(3 * static_cast<Eigen::Index>(k)) = g.translation;
        }
        const Eigen::Map<const Eigen::VectorXd> phi_grad(loss.identity_basis.data(), loss.identity_basis.size());
        adam_step(phi_state, phi, phi_grad, sched.length_lr);
        adam_step(coeff_state, coeffs, coeff_grad, sched.lr);
        adam_step(translation_state, translations, translation_grad, sched.length_lr);
        for (std::size_t k = 0; k < n; ++k) {
            layout.unpack(coeffs, k, result.thetas[k]);
            result.thetas[k].translation = translations.segment<3>(3 * static_cast<Eigen::Index>(k));
        }
    }

    const LossResult final_loss = total_loss(context, model, result.thetas, config.weights, config.freeze,
                                             config.threads);
    if (!std::isfinite(final_loss.total)) {
        fail(ErrorCode::Diverged, "final loss is non-finite after " + std::to_string(report.trajectory.size()) +
                                      " iterations");
    }
    report.iterations = static_cast<int>(report.trajectory.size());
    report.final_breakdown = final_loss.breakdown;
    report.final_total = final_loss.total;
    for (std::size_t k = 0; k < n; ++k) {
        report.scan_ids.push_back(scans[k].id);
        report.scan_residual_rms.push_back(std::sqrt(final_loss.scan_vertex_mse[k]));
    }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace facegen::learning
