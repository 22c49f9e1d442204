#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facegen/hair/groom.hpp"
#include "facegen/mesh/quad_mesh.hpp"
#include "facegen/model/blendshape_model.hpp"
#include "facegen/pipeline/assets.hpp"
#include "facegen/sampling/samplers.hpp"

namespace facegen::pipeline {

inline constexpr int kSceneFormatVersion = 1;

struct GroomChoice {
    std::string id;
    bool flip = false;
    bool operator==(const GroomChoice&) const = default;
};

struct Camera {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
    Eigen::Vector3d up = Eigen::Vector3d::UnitY();
    double vertical_fov_deg = 20.0;
    bool operator==(const Camera&) const = default;
};

/// Recorded for the renderer only.
struct RenderSettings {
    int width = 1024;
    int height = 1024;
    int samples_per_pixel = 256;
    bool operator==(const RenderSettings&) const = default;
};

struct SceneDescription {
    std::string scene_id;
    std::uint64_t seed = 0;
    model::ModelParams params;
    std::string texture_id;
    std::string eye_color_id;
    /// Absent styles have no groom in the library.
    std::map<hair::Style, GroomChoice> grooms;
    sampling::HairColor hair_color;
    std::string hdr_id;
    double hdr_yaw = 0.0;  // [0, 2 pi)
    Camera camera;
    RenderSettings render;
    bool eyelid_correction_applied = false;
    double gaze_pitch = 0.0;

    bool operator==(const SceneDescription& other) const;
};

nlohmann::json to_json(const SceneDescription& scene);
SceneDescription scene_from_json(const nlohmann::json& j);

struct SampleOptions {
    std::optional<double> sigma;
    std::optional<sampling::SigmaMode> sigma_mode;
    double vertical_fov_deg = 20.0;
    /// Camera distance puts the head bounding sphere times this in frame.
    double framing = 1.4;
    RenderSettings render;
};

SampleOptions sample_options_from_json(const nlohmann::json& j);

/// Independent draws, each from its own stream of `seed`: identity, expression,
/// pose, eyelid coin, texture, eye colour, grooms and flips, HDR and yaw, hair
/// colour.
SceneDescription sample_scene(const AssetLibrary& library, std::uint64_t seed, const SampleOptions& options = {});

/// Seed of scene `index` in a batch started from `seed`.
std::uint64_t scene_seed(std::uint64_t seed, int index);

/// Frontal camera on +z looking at the vertex centroid, far enough back that
/// the bounding sphere times `framing` fills the vertical field of view.
Camera frame_camera(const Points& vertices, double vertical_fov_deg, double framing);

struct NamedGroom {
    hair::Style style;
    std::string id;
    hair::Groom groom;
};

struct RealizedScene {
    QuadMesh face;
    /// eye_left_sclera, eye_left_cornea, eye_right_sclera, eye_right_cornea
    std::vector<std::pair<std::string, QuadMesh>> eyes;
    std::vector<NamedGroom> grooms;
};

struct RealizeOptions {
    int subdivision_levels = 3;
    int threads = 1;
};

RealizedScene realize_scene(const AssetLibrary& library, const SceneDescription& scene,
                            const RealizeOptions& options = {});

/// Rigidly carries each strand with the head: the root's nearest template
/// vertex is the anchor, and the strand keeps its shape in a frame rotated by
/// `head_rotation` and attached to the posed anchor.
hair::Groom transport_groom(const hair::Groom& groom, const Points& template_vertices, const Points& posed_vertices,
                            const Eigen::Matrix3d& head_rotation);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

struct ExportedFile {
    std::string path;  // relative to the scene directory, '/' separated
    std::string sha256;
    std::size_t bytes = 0;
};

/// Writes face.obj, eyes.obj, grooms/<style>.json (+ .bin), scene.json and
/// manifest.json (every other file with its SHA-256; no timestamps).
std::vector<ExportedFile> export_scene(const SceneDescription& scene, const RealizedScene& geometry,
                                       const std::filesystem::path& out_dir);

}  // namespace facegen::pipeline
