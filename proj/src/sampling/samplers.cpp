#include "facegen/sampling/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "facegen/error.hpp"
#include "facegen/util/log.hpp"

namespace facegen::sampling {

void ExpressionLibrary::validate() const {
    require(betas.allFinite(), ErrorCode::NonFiniteInput, "expression library contains NaN or Inf");
    require((betas.array() >= 0.0).all() && (betas.array() <= 1.0).all(), ErrorCode::InvalidParam,
            "expression coefficients must lie in [0, 1]");
    require(tags.empty() || static_cast<Eigen::Index>(tags.size()) == betas.rows(), ErrorCode::DimensionMismatch,
            "expression tags must be absent or one per entry");
}

Eigen::VectorXd sample_expression(const ExpressionLibrary& library, Rng& rng) {
    require(library.size() > 0, ErrorCode::EmptyLibrary, "expression library is empty");
    const auto i = std::uniform_int_distribution<Eigen::Index>(0, library.size() - 1)(rng);
    return library.betas.row(i).transpose();
}

ExpressionLibrary synthetic_expression_library(int count, int dim, int active, Rng& rng) {
    require(count >= 0 && dim >= 1 && active >= 0 && active <= dim, ErrorCode::InvalidParam,
            "bad synthetic expression library size");
    ExpressionLibrary lib;
    lib.betas = Eigen::MatrixXd::Zero(count, dim);
    lib.source = "synthetic sparse activations";
    std::uniform_real_distribution<double> strength(0.0, 1.0);
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (int r = 0; r < count; ++r) {
        for (int i = 0; i < dim; ++i) idx[i] = i;
        // Partial Fisher-Yates picks `active` distinct shapes.
        for (int a = 0; a < active; ++a) {
            const int j = std::uniform_int_distribution<int>(a, dim - 1)(rng);
            std::swap(idx[a], idx[j]);
            lib.betas(r, idx[a]) = strength(rng);
        }
    }
    return lib;
}

io::MatrixContainer to_container(const ExpressionLibrary& library) {
    library.validate();
    io::MatrixContainer c;
    c.attributes()["kind"] = "expression_library";
    c.attributes()["version"] = 1;
    c.attributes()["source"] = library.source;
    c.attributes()["tags"] = library.tags;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = library.betas;
    c.add("expressions.beta", {static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols())},
          std::span<const double>(rows.data(), static_cast<std::size_t>(rows.size())), io::DType::F32);
    return c;
}

ExpressionLibrary expression_library_from_container(const io::MatrixContainer& c) {
    require(c.attributes().value("kind", "") == "expression_library", ErrorCode::ParseError,
            "container does not hold an expression library");
    const auto& t = c.get("expressions.beta");
    require(t.shape.size() == 2, ErrorCode::DimensionMismatch, "expressions.beta must be n x d");
    ExpressionLibrary lib;
    lib.betas = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        t.data.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
    lib.source = c.attributes().value("source", "");
    if (c.attributes().contains("tags")) lib.tags = c.attributes()["tags"].get<std::vector<std::string>>();
    lib.validate();
    return lib;
}

PoseDistribution::PoseDistribution() {
    std_dev << 0.15, 0.3, 0.1,  // neck
        0.12, 0.03, 0.02,       // jaw
        0.15, 0.2, 0.01,        // left eye
        0.15, 0.2, 0.01,        // right eye
        0.1, 0.2, 0.05;         // head
}

void PoseDistribution::validate() const {
    require((std_dev.array() > 0.0).all() && std_dev.allFinite(), ErrorCode::InvalidParam,
            "pose standard deviations must be positive");
    for (const auto& r : global_limits) {
        require(r.min <= 0.0 && r.max >= 0.0 && r.min < r.max, ErrorCode::InvalidParam,
                "global rotation limits must bracket zero");
    }
}

PoseDistribution pose_distribution_from_json(const nlohmann::json& j) {
    PoseDistribution d;
    try {
        if (j.contains("std")) {
            const auto v = j.at("std").get<std::vector<double>>();
            require(v.size() == static_cast<std::size_t>(model::kPoseDim), ErrorCode::DimensionMismatch,
                    "pose std needs 15 entries");
            for (int i = 0; i < model::kPoseDim; ++i) d.std_dev(i) = v[i];
        }
        if (j.contains("global_limits")) {
            const auto v = j.at("global_limits").get<std::vector<std::array<double, 2>>>();
            require(v.size() == 3, ErrorCode::DimensionMismatch, "global_limits needs 3 [min, max] pairs");
            for (int a = 0; a < 3; ++a) d.global_limits[a] = {v[a][0], v[a][1]};
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad pose distribution: ") + e.what());
    }
    d.validate();
    return d;
}

nlohmann::json to_json(const PoseDistribution& d) {
    std::vector<double> s(d.std_dev.data(), d.std_dev.data() + model::kPoseDim);
    nlohmann::json limits = nlohmann::json::array();
    for (const auto& r : d.global_limits) limits.push_back({r.min, r.max});
    return {{"std", s}, {"global_limits", limits}};
}

model::PoseVector sample_pose(const model::Skeleton& skeleton, const PoseDistribution& dist, Rng& rng) {
    dist.validate();
    constexpr int kMaxTries = 100000;
    model::PoseVector pose;
    for (int i = 0; i < model::kPoseDim; ++i) {
        const model::AngleRange range = i < model::kJointAngleCount
                                            ? skeleton.joints[i / 3].rotation_limits[i % 3]
                                            : dist.global_limits[i - model::kJointAngleCount];
        std::normal_distribution<double> normal(0.0, dist.std_dev(i));
        double x = normal(rng);
        for (int t = 0; t < kMaxTries && (x < range.min || x > range.max); ++t) x = normal(rng);
        pose(i) = std::clamp(x, range.min, range.max);
    }
    return pose;
}

double gaze_pitch(const model::PoseVector& pose) {
    // Rotating +z about x by a gives (0, -sin a, cos a): negative a looks up.
    return -0.5 * (pose(3 * model::kEyeLeft) + pose(3 * model::kEyeRight));
}

Eigen::VectorXd gaze_eyelid_correction(const Eigen::VectorXd& beta, double pitch, bool heads,
                                       const EyelidCorrection& config) {
    for (int i : config.raise) {
        require(i >= 0 && i < beta.size(), ErrorCode::IndexOutOfRange,
                "eyelid raise index " + std::to_string(i) + " out of range");
    }
    for (int i : config.lower) {
        require(i >= 0 && i < beta.size(), ErrorCode::IndexOutOfRange,
                "eyelid lower index " + std::to_string(i) + " out of range");
    }
    Eigen::VectorXd out = beta;
    if (!heads || pitch == 0.0) return out;
    for (int i : config.raise) out(i) = std::clamp(out(i) + config.gain * std::max(0.0, pitch), 0.0, 1.0);
    for (int i : config.lower) out(i) = std::clamp(out(i) + config.gain * std::max(0.0, -pitch), 0.0, 1.0);
    return out;
}

void HairColorTable::normalize() {
    require(!entries.empty(), ErrorCode::EmptyTable, "hair colour table is empty");
    double total = 0.0;
    for (const auto& e : entries) {
        require(e.weight >= 0.0, ErrorCode::NonNormalizedTable, "hair colour weights must be non-negative");
        const auto& c = e.color;
        require(c.melanin >= 0 && c.melanin <= 1 && c.pheomelanin >= 0 && c.pheomelanin <= 1 && c.grayness >= 0 &&
                    c.grayness <= 1,
                ErrorCode::InvalidParam, "hair colour components must lie in [0, 1]");
        total += e.weight;
    }
    require(std::abs(total - 1.0) <= 1e-6, ErrorCode::NonNormalizedTable,
            "hair colour weights sum to " + std::to_string(total));
    if (std::abs(total - 1.0) > 1e-12) {
        log::warning("hair colour weights sum to " + std::to_string(total) + "; renormalizing");
        for (auto& e : entries) e.weight /= total;
    }
}

HairColorTable hair_color_table_from_json(const nlohmann::json& j) {
    HairColorTable t;
    try {
        for (const auto& e : j.at("entries")) {
            t.entries.push_back({e.at("weight").get<double>(),
                                 {e.at("melanin").get<double>(), e.at("pheomelanin").get<double>(),
                                  e.at("grayness").get<double>()}});
        }
        t.jitter = j.value("jitter", t.jitter);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad hair colour table: ") + e.what());
    }
    require(t.jitter >= 0.0, ErrorCode::InvalidParam, "jitter must be non-negative");
    t.normalize();
    return t;
}

nlohmann::json to_json(const HairColorTable& table) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : table.entries) {
        entries.push_back({{"weight", e.weight},
                           {"melanin", e.color.melanin},
                           {"pheomelanin", e.color.pheomelanin},
                           {"grayness", e.color.grayness}});
    }
    return {{"entries", entries}, {"jitter", table.jitter}};
}

HairColorTable placeholder_hair_color_table() {
    HairColorTable t;
    const HairColor colors[] = {{0.95, 0.10, 0.0}, {0.70, 0.25, 0.0}, {0.45, 0.35, 0.0},
                                {0.20, 0.60, 0.0}, {0.15, 0.10, 0.0}, {0.60, 0.20, 0.6}};
    for (const auto& c : colors) t.entries.push_back({1.0 / 6.0, c});
    return t;
}

HairColor sample_hair_color(const HairColorTable& table, Rng& rng) {
    require(!table.entries.empty(), ErrorCode::EmptyTable, "hair colour table is empty");
    double total = 0.0;
    for (const auto& e : table.entries) total += e.weight;
    require(std::abs(total - 1.0) <= 1e-6, ErrorCode::NonNormalizedTable,
            "hair colour weights sum to " + std::to_string(total));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * total;
    std::size_t pick = table.entries.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        acc += table.entries[i].weight;
        if (u < acc) {
            pick = i;
            break;
        }
    }
    HairColor c = table.entries[pick].color;
    std::uniform_real_distribution<double> jitter(-table.jitter, table.jitter);
    auto jit = [&](double v) { return table.jitter > 0 ? std::clamp(v + jitter(rng), 0.0, 1.0) : v; };
    c.melanin = jit(c.melanin);
    c.pheomelanin = jit(c.pheomelanin);
    c.grayness = jit(c.grayness);
    return c;
}

}  // namespace facegen::sampling
