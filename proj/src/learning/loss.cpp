#include "facegen/learning/loss.hpp"

#include <algorithm>
#include <numeric>

#include "facegen/error.hpp"
#include "facegen/mesh/edge_energy.hpp"
#include "facegen/mesh/laplacian.hpp"
#include "facegen/mesh/normals.hpp"
#include "facegen/util/parallel.hpp"

namespace facegen::learning {

using model::BlendshapeModel;
using model::ModelParams;
using model::ParamGradients;

void LossWeights::validate() const {
    for (double w : {vertex, normal, barrier_expr, barrier_pose, id_coeff, id_basis, laplacian, edge}) {
        require(w >= 0.0, ErrorCode::InvalidParam, "loss weights must be non-negative");
    }
}

Barrier barrier4(double x, double lo, double hi) {
    if (x > hi) {
        const double d = x - hi;
        return {d * d * d * d, 4.0 * d * d * d};
    }
    if (x < lo) {
        const double d = lo - x;
        return {d * d * d * d, -4.0 * d * d * d};
    }
    return {};
}

DataTerm data_term(const QuadMesh& generated, const QuadMesh& target, const LossWeights& weights) {
    require(same_topology(generated, target), ErrorCode::TopologyMismatch,
            "generated mesh and target differ in topology");
    return data_term(generated.vertices, target, vertex_normals(target).normals, weights);
}

DataTerm data_term(const Points& generated, const QuadMesh& target, const Points& target_normals,
                   const LossWeights& weights) {
    require(generated.rows() == target.vertex_count(), ErrorCode::TopologyMismatch,
            "generated positions and target differ in vertex count");
    const double inv_v = 1.0 / static_cast<double>(generated.rows());
    DataTerm out;
    const Points diff = generated - target.vertices;
    out.vertex = diff.squaredNorm() * inv_v;
    out.gradient = (2.0 * weights.vertex * inv_v) * diff;

    if (weights.normal != 0.0) {
        const Points normals = vertex_normals(generated, target.quads).normals;
        // Half the squared distance between unit normals, which is 1 - cos
        // but exactly zero for identical normals.
        const Points normal_diff = normals - target_normals;
        out.normal = 0.5 * normal_diff.squaredNorm() * inv_v;
        const Points grad_normals = (weights.normal * inv_v) * normal_diff;
        out.gradient += vertex_normals_backward(generated, target.quads, grad_normals);
    }
    out.value = weights.vertex * out.vertex + weights.normal * out.normal;
    return out;
}

double LossBreakdown::total() const {
    const auto v = values();
    return std::accumulate(v.begin(), v.end(), 0.0);
}

const std::vector<std::string>& LossBreakdown::names() {
    static const std::vector<std::string> n = {"vertex",   "normal",   "barrier_expr", "barrier_pose",
                                               "id_coeff", "id_basis", "laplacian",    "edge"};
    return n;
}

std::vector<double> LossBreakdown::values() const {
    return {vertex, normal, barrier_expr, barrier_pose, id_coeff, id_basis, laplacian, edge};
}

LossContext::LossContext(const BlendshapeModel& model, const ScanSet& scans)
    : scans_(&scans), connectivity_(build_connectivity(model.template_mesh)) {
    target_normals_.reserve(scans.size());
    for (const auto& scan : scans) {
        require(same_topology(scan.mesh, model.template_mesh), ErrorCode::TopologyMismatch,
                "scan '" + scan.id + "' is not in template topology");
        target_normals_.push_back(vertex_normals(scan.mesh).normals);
    }
    order_.resize(scans.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return scans[a].id < scans[b].id; });
}

namespace {

// Everything one scan contributes; reduced later in canonical order.
struct ScanTerms {
    LossBreakdown breakdown;
    ParamGradients grad;
    double vertex_mse = 0.0;
};

ScanTerms scan_terms(const LossContext& context, const BlendshapeModel& model, const ModelParams& theta,
                     std::size_t k, const LossWeights& weights, const Freeze& freeze) {
    const auto& scan = context.scans()[k];
    const Points unposed = model::evaluate_unposed(model, theta.alpha, theta.beta);
    const Points posed =
        model::apply_pose(model, theta.alpha, theta.pose, theta.translation, unposed, model::LimitCheck::Ignore);

    ScanTerms out;
    DataTerm data = data_term(posed, scan.mesh, context.target_normals(k), weights);
    out.breakdown.vertex = weights.vertex * data.vertex;
    out.breakdown.normal = weights.normal * data.normal;
    out.vertex_mse = data.vertex;
    Points grad_posed = std::move(data.gradient);

    if (weights.edge != 0.0) {
        const auto e = edge_length_energy(posed, model.template_mesh.vertices, context.connectivity());
        out.breakdown.edge = weights.edge * e.value;
        grad_posed += weights.edge * e.gradient;
    }

    out.grad = model::evaluate_backward(model, theta, grad_posed);

    out.breakdown.id_coeff = weights.id_coeff * theta.alpha.squaredNorm();
    out.grad.alpha += (2.0 * weights.id_coeff) * theta.alpha;

    for (Eigen::Index j = 0; j < theta.beta.size(); ++j) {
        const Barrier b = barrier4(theta.beta(j), 0.0, 1.0);
        out.breakdown.barrier_expr += weights.barrier_expr * b.value;
        out.grad.beta(j) += weights.barrier_expr * b.derivative;
    }
    // Only the joint angles carry limits; the global head rotation is free.
    for (int j = 0; j < model::kJointCount; ++j) {
        const auto& limits = model.skeleton.joints[j].rotation_limits;
        for (int axis = 0; axis < 3; ++axis) {
            const Barrier b = barrier4(theta.pose(3 * j + axis), limits[axis].min, limits[axis].max);
            out.breakdown.barrier_pose += weights.barrier_pose * b.value;
            out.grad.pose(3 * j + axis) += weights.barrier_pose * b.derivative;
        }
    }

    if (freeze.beta) out.grad.beta.setZero();
    if (freeze.pose) {
        out.grad.pose.setZero();
        out.grad.translation.setZero();
    }
    return out;
}

}  // namespace

LossResult total_loss(const LossContext& context, const BlendshapeModel& model, std::span<const ModelParams> thetas,
                      const LossWeights& weights, const Freeze& freeze, int threads) {
    const auto& scans = context.scans();
    require(thetas.size() == scans.size(), ErrorCode::DimensionMismatch,
            "need one parameter set per scan, got " + std::to_string(thetas.size()) + " for " +
                std::to_string(scans.size()) + " scans");
    const int m = model.identity_dim();
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(model.vertex_count());
    require(model.identity_basis.cols() == n3 || m == 0, ErrorCode::DimensionMismatch,
            "identity basis width does not match the template");
    for (const auto& t : thetas) {
        require(t.alpha.size() == m && t.beta.size() == model.expression_dim(), ErrorCode::DimensionMismatch,
                "per-scan coefficients do not match the model dimensions");
    }

    std::vector<ScanTerms> terms(scans.size());
    parallel_for(static_cast<int>(scans.size()), threads, [&](int k) {
        terms[k] = scan_terms(context, model, thetas[k], static_cast<std::size_t>(k), weights, freeze);
    });

    LossResult out;
    out.identity_basis = model::Basis::Zero(m, n3);
    out.thetas.resize(scans.size());
    out.scan_vertex_mse.resize(scans.size());
    for (int k : context.order()) {
        const auto& b = terms[k].breakdown;
        out.breakdown.vertex += b.vertex;
        out.breakdown.normal += b.normal;
        out.breakdown.barrier_expr += b.barrier_expr;
        out.breakdown.barrier_pose += b.barrier_pose;
        out.breakdown.id_coeff += b.id_coeff;
        out.breakdown.edge += b.edge;
        out.scan_vertex_mse[k] = terms[k].vertex_mse;
        const Eigen::Map<const Eigen::RowVectorXd> g_unposed(terms[k].grad.unposed.data(), n3);
        for (int i = 0; i < m; ++i) out.identity_basis.row(i) += thetas[k].alpha(i) * g_unposed;
        out.thetas[k] = std::move(terms[k].grad);
    }

    for (int i = 0; i < m; ++i) {
        const Eigen::Map<const Points> phi(model.identity_basis.row(i).data(), model.vertex_count(), 3);
        out.breakdown.id_basis += weights.id_basis * model.identity_basis.row(i).squaredNorm();
        out.identity_basis.row(i) += (2.0 * weights.id_basis) * model.identity_basis.row(i);
        if (weights.laplacian != 0.0) {
            const Points lphi = uniform_laplacian_apply(context.connectivity(), phi);
            out.breakdown.laplacian += weights.laplacian * lphi.squaredNorm();
            const Points back = uniform_laplacian_apply_transpose(context.connectivity(), lphi);
            out.identity_basis.row(i) +=
                (2.0 * weights.laplacian) * Eigen::Map<const Eigen::RowVectorXd>(back.data(), n3);
        }
    }
    out.total = out.breakdown.total();
    return out;
}

LossResult total_loss(const BlendshapeModel& model, std::span<const ModelParams> thetas, const ScanSet& scans,
                      const LossWeights& weights) {
    const LossContext context(model, scans);
    return total_loss(context, model, thetas, weights);
}

}  // namespace facegen::learning
