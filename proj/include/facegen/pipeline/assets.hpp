#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facegen/appearance/hdr.hpp"
#include "facegen/hair/hair_code.hpp"
#include "facegen/model/blendshape_model.hpp"
#include "facegen/model/eye.hpp"
#include "facegen/sampling/gmm.hpp"
#include "facegen/sampling/samplers.hpp"

namespace facegen::pipeline {

inline constexpr std::array<hair::Style, 4> kGroomStyles = {hair::Style::Scalp, hair::Style::Eyebrow,
                                                            hair::Style::Beard, hair::Style::Eyelash};

/// A library groom is either explicit strands or a hair code that is decoded
/// when a scene is realized.
struct GroomAsset {
    std::string id;
    std::filesystem::path path;
    std::optional<hair::Groom> strands;
    std::optional<hair::HairCode> code;
};

struct HdrAsset {
    std::string id;
    std::filesystem::path path;
    int width = 0;
    int height = 0;
};

struct EyeConfig {
    model::EyeGeometryParams geometry;
    int lat_segments = 12;
    int lon_segments = 16;
    /// Control-mesh vertex ids of each eye's lids (left, right).
    std::array<std::vector<int>, 2> eyelid_vertices;
    double capture_fraction = model::kDefaultShrinkwrapCapture;
};

/// Everything a scene can draw from. All paths are resolved relative to the
/// library file and every asset is loaded and checked when the library is.
struct AssetLibrary {
    std::filesystem::path root;
    model::BlendshapeModel model;
    sampling::GaussianMixture identity_gmm;
    sampling::ExpressionLibrary expressions;
    sampling::PoseDistribution pose;
    sampling::EyelidCorrection eyelid_correction;
    sampling::HairColorTable hair_colors;
    std::vector<std::string> textures;
    std::vector<std::string> eye_colors;
    std::map<hair::Style, std::vector<GroomAsset>> grooms;
    std::vector<HdrAsset> hdrs;
    EyeConfig eyes;
    /// Strands drawn when decoding a hair-code groom.
    int decode_strands = 200;
    /// Sampling defaults that a run configuration may override.
    double sigma = 0.8;
    sampling::SigmaMode sigma_mode = sampling::SigmaMode::Std;

    const GroomAsset& groom(hair::Style style, const std::string& id) const;
    const HdrAsset& hdr(const std::string& id) const;
};

/// Throws IoError for a missing file (with its path) and ParseError or
/// DimensionMismatch for inconsistent content.
AssetLibrary load_asset_library(const std::filesystem::path& library_json);

struct DemoAssetOptions {
    int identity_dim = 8;
    int gmm_components = 2;
    int expression_count = 60;
    int textures = 4;
    int grooms_per_style = 2;
    int strands_per_groom = 200;
    int hdrs = 2;
    /// Synthetic registered scans (zero pose and expression) drawn from the
    /// first `scan_identity_dim` identity shapes of the demo model.
    int scans = 20;
    int scan_identity_dim = 3;
};

/// Head-like synthetic model: an ellipsoidal quad head with smooth random
/// identity and expression bases, the default skeleton and procedural
/// skinning.
model::BlendshapeModel make_demo_model(sampling::Rng& rng, int identity_dim, int expression_dim);

/// Writes a complete synthetic asset library (model, GMM, expressions, grooms,
/// HDRs, tables) under `dir` and returns the path of its library.json. Also
/// writes scans/scan_NNN.obj, the identity shapes they were drawn from
/// (scans/truth.json) and a fit configuration for them (fit_config.json).
std::filesystem::path write_demo_assets(const std::filesystem::path& dir, std::uint64_t seed,
                                        const DemoAssetOptions& options = {});

}  // namespace facegen::pipeline
