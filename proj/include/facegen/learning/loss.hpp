#pragma once

#include <span>
#include <string>
#include <vector>

#include "facegen/mesh/connectivity.hpp"
#include "facegen/model/blendshape_model.hpp"

namespace facegen::learning {

/// Registered scans in template topology, each with a label. Losses are always
/// reduced in ascending label order so results do not depend on input order.
struct Scan {
    std::string id;
    QuadMesh mesh;
};
using ScanSet = std::vector<Scan>;

struct LossWeights {
    double vertex = 1.0;
    double normal = 0.1;
    double barrier_expr = 10.0;
    double barrier_pose = 10.0;
    double id_coeff = 1e-4;
    double id_basis = 1e-4;
    double laplacian = 1e-2;
    double edge = 1e-3;

    void validate() const;
};

struct Barrier {
    double value = 0.0;
    double derivative = 0.0;
};

/// Quartic penalty outside [lo, hi], zero inside.
Barrier barrier4(double x, double lo, double hi);

struct DataTerm {
    double vertex = 0.0;  // unweighted mean squared vertex distance
    double normal = 0.0;  // unweighted mean of 1 - cos between unit vertex normals
    double value = 0.0;   // weighted sum
    Points gradient;      // of `value` with respect to the generated positions
};

/// Compares generated positions (in the target's topology) to a target mesh.
DataTerm data_term(const QuadMesh& generated, const QuadMesh& target, const LossWeights& weights);
DataTerm data_term(const Points& generated, const QuadMesh& target, const Points& target_normals,
                   const LossWeights& weights);

struct LossBreakdown {
    double vertex = 0.0;
    double normal = 0.0;
    double barrier_expr = 0.0;
    double barrier_pose = 0.0;
    double id_coeff = 0.0;
    double id_basis = 0.0;
    double laplacian = 0.0;
    double edge = 0.0;

    double total() const;
    static const std::vector<std::string>& names();
    std::vector<double> values() const;
};

/// What gets optimized; frozen blocks report zero gradient.
struct Freeze {
    bool beta = false;
    bool pose = false;  // joint angles, global rotation and translation
};

struct LossResult {
    double total = 0.0;
    LossBreakdown breakdown;
    std::vector<model::ParamGradients> thetas;  // aligned with the scan order given
    model::Basis identity_basis;                // dL/dPhi
    std::vector<double> scan_vertex_mse;        // unweighted, aligned with the scans
};

/// Precomputed per-problem data: template connectivity and target normals.
class LossContext {
public:
    LossContext(const model::BlendshapeModel& model, const ScanSet& scans);

    const ScanSet& scans() const { return *scans_; }
    const MeshConnectivity& connectivity() const { return connectivity_; }
    const Points& target_normals(std::size_t k) const { return target_normals_[k]; }
    /// Scan indices sorted by id.
    const std::vector<int>& order() const { return order_; }

private:
    const ScanSet* scans_;
    MeshConnectivity connectivity_;
    std::vector<Points> target_normals_;
    std::vector<int> order_;
};

/// Joint objective over per-scan parameters and the identity basis, which is
/// read from model.identity_basis. Every other part of the model is fixed.
LossResult total_loss(const LossContext& context, const model::BlendshapeModel& model,
                      std::span<const model::ModelParams> thetas, const LossWeights& weights,
                      const Freeze& freeze = {}, int threads = 1);

LossResult total_loss(const model::BlendshapeModel& model, std::span<const model::ModelParams> thetas,
                      const ScanSet& scans, const LossWeights& weights);

}  // namespace facegen::learning
