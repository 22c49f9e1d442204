#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "facegen/io/matrix_container.hpp"
#include "facegen/model/skeleton.hpp"
#include "facegen/sampling/rng.hpp"

namespace facegen::sampling {

// ---- expressions ----

struct ExpressionLibrary {
    Eigen::MatrixXd betas;          // one expression per row, entries in [0, 1]
    std::vector<std::string> tags;  // optional per-row metadata, empty or one per row
    std::string source;

    Eigen::Index size() const { return betas.rows(); }
    void validate() const;
};

/// Uniform draw of one library row. Throws EmptyLibrary.
Eigen::VectorXd sample_expression(const ExpressionLibrary& library, Rng& rng);

/// Stand-in library: each row activates `active` random shapes with uniform
/// strengths, everything else zero.
ExpressionLibrary synthetic_expression_library(int count, int dim, int active, Rng& rng);

io::MatrixContainer to_container(const ExpressionLibrary& library);
ExpressionLibrary expression_library_from_container(const io::MatrixContainer& container);

// ---- pose ----

struct PoseDistribution {
    /// Standard deviation per pose entry: 12 joint angles then the global
    /// rotation, all zero-mean.
    model::PoseVector std_dev;
    /// The skeleton has no limits for the global rotation; these apply.
    std::array<model::AngleRange, 3> global_limits{{{-0.35, 0.35}, {-0.6, 0.6}, {-0.2, 0.2}}};

    PoseDistribution();
    void validate() const;
};

PoseDistribution pose_distribution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PoseDistribution& d);

/// Per-axis zero-mean normal truncated to the limits by rejection.
model::PoseVector sample_pose(const model::Skeleton& skeleton, const PoseDistribution& dist, Rng& rng);

// ---- gaze ----

struct EyelidCorrection {
    std::vector<int> raise;  // expression indices that open the lids
    std::vector<int> lower;  // expression indices that close them
    double gain = 1.0;
};

/// Gaze pitch in radians, positive when looking up (+y), read from the
/// eye joint rotation about x.
double gaze_pitch(const model::PoseVector& pose);

/// With heads, raise += gain * max(0, pitch) and lower += gain * max(0, -pitch),
/// clamped to [0, 1]. Tails leaves beta unchanged.
Eigen::VectorXd gaze_eyelid_correction(const Eigen::VectorXd& beta, double pitch, bool heads,
                                       const EyelidCorrection& config);

// ---- hair colour ----

struct HairColor {
    double melanin = 0.0;
    double pheomelanin = 0.0;
    double grayness = 0.0;
};

struct HairColorTable {
    struct Entry {
        double weight = 0.0;
        HairColor color;
    };
    std::vector<Entry> entries;
    double jitter = 0.02;

    /// Throws EmptyTable, or NonNormalizedTable when the weights are off by
    /// more than 1e-6. Smaller errors are renormalized with a warning.
    void normalize();
};

HairColorTable hair_color_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HairColorTable& table);
/// Uniform weights over a spread of pigment triples, to be replaced by real
/// population statistics.
HairColorTable placeholder_hair_color_table();

HairColor sample_hair_color(const HairColorTable& table, Rng& rng);

}  // namespace facegen::sampling
