#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facegen/learning/loss.hpp"

namespace facegen::learning {

enum class InitMode { Pca, Random };

struct Schedule {
    int iterations = 2000;
    /// Step size for dimensionless parameters: coefficients and angles.
    double lr = 1e-2;
    /// Step size for parameters measured in meters: basis entries and the
    /// global translation.
    double length_lr = 1e-4;
    /// Early stop once the loss improved by less than this fraction over
    /// `stop_window` iterations. Zero disables it.
    double stop_tolerance = 1e-7;
    int stop_window = 50;
};

struct FitConfig {
    LossWeights weights;
    Schedule schedule;
    InitMode init = InitMode::Pca;
    double pca_scale = 0.9;
    double random_init_sigma = 1e-3;
    std::uint64_t seed = 0;
    Freeze freeze;
    int threads = 1;

    void validate() const;
};

FitConfig fit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitConfig& config);

struct FitReport {
    std::vector<LossBreakdown> trajectory;  // one entry per iteration run
    LossBreakdown final_breakdown;
    double final_total = 0.0;
    std::vector<std::string> scan_ids;
    std::vector<double> scan_residual_rms;  // meters
    int iterations = 0;
    bool early_stopped = false;
    double wall_time_seconds = 0.0;
};

nlohmann::json to_json(const FitReport& report);
/// iteration,total,<term>... one row per iteration.
std::string trajectory_csv(const FitReport& report);

struct FitResult {
    model::BlendshapeModel model;
    std::vector<model::ModelParams> thetas;  // aligned with the input scans
    FitReport report;
};

/// Learns an m-dimensional identity basis from the scans. The template,
/// expression basis, skeleton and skinning weights of `base` stay fixed; its
/// identity basis is ignored.
FitResult fit(const ScanSet& scans, const model::BlendshapeModel& base, int m, const FitConfig& config);

/// Uncentered principal directions of the scan displacements from the
/// template, scaled by their per-scan standard deviation.
model::Basis pca_identity_basis(const ScanSet& scans, const QuadMesh& template_mesh, int m);

/// Least-squares identity coefficients for a scan at zero expression and pose.
Eigen::VectorXd project_identity(const model::BlendshapeModel& model, const QuadMesh& scan);

}  // namespace facegen::learning
