#include "facegen/pipeline/assets.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"
#include "facegen/mesh/obj_io.hpp"
#include "facegen/mesh/subdivision.hpp"
#include "facegen/model/model_io.hpp"

namespace facegen::pipeline {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kLibraryKeys = {
    "model", "identity_gmm", "expression_library", "textures", "eye_colors", "grooms", "hdrs",
    "hair_color_table", "pose_distribution", "eyelids", "eyes", "sampling", "decode_strands"};

fs::path existing(const fs::path& root, const nlohmann::json& entry, const std::string& what) {
    require(entry.is_string(), ErrorCode::ParseError, what + " must be a path string");
    const fs::path p = root / entry.get<std::string>();
    require(fs::exists(p), ErrorCode::IoError, what + " not found: '" + p.string() + "'");
    return p;
}

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& what) {
    require(j.is_array(), ErrorCode::ParseError, what + " must be an array of strings");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& e : j) {
        require(e.is_string(), ErrorCode::ParseError, what + " must be an array of strings");
        require(seen.insert(e.get<std::string>()).second, ErrorCode::ParseError,
                what + " lists '" + e.get<std::string>() + "' twice");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<int> index_list(const nlohmann::json& j, int bound, const std::string& what) {
    require(j.is_array(), ErrorCode::ParseError, what + " must be an array of indices");
    std::vector<int> out;
    for (const auto& e : j) {
        require(e.is_number_integer(), ErrorCode::ParseError, what + " must hold integers");
        const int v = e.get<int>();
        require(v >= 0 && v < bound, ErrorCode::IndexOutOfRange,
                what + " index " + std::to_string(v) + " is outside [0, " + std::to_string(bound) + ")");
        out.push_back(v);
    }
    return out;
}

GroomAsset load_groom_asset(const fs::path& path) {
    GroomAsset asset;
    asset.path = path;
    asset.id = path.stem().string();
    const auto c = io::MatrixContainer::load(path);
    const std::string kind = c.attributes().value("kind", "");
    if (kind == "groom") {
        asset.strands = hair::groom_from_container(c);
    } else if (kind == "hair_code") {
        asset.code = hair::hair_code_from_container(c);
    } else {
        fail(ErrorCode::ParseError, "'" + path.string() + "' is neither a groom nor a hair code");
    }
    return asset;
}

void load_eyes(const nlohmann::json& j, int vertex_count, EyeConfig& eyes) {
    auto& g = eyes.geometry;
    g.sclera_radius = j.value("sclera_radius", g.sclera_radius);
    g.cornea_radius = j.value("cornea_radius", g.cornea_radius);
    g.iris_flatten_depth = j.value("iris_flatten_depth", g.iris_flatten_depth);
    g.cornea_refraction_index = j.value("cornea_refraction_index", g.cornea_refraction_index);
    g.pupil_radius = j.value("pupil_radius", g.pupil_radius);
    g.validate();
    eyes.lat_segments = j.value("lat_segments", eyes.lat_segments);
    eyes.lon_segments = j.value("lon_segments", eyes.lon_segments);
    eyes.capture_fraction = j.value("capture_fraction", eyes.capture_fraction);
    require(eyes.capture_fraction >= 0.0, ErrorCode::InvalidParam, "eyes.capture_fraction must be non-negative");
    if (j.contains("eyelid_vertices")) {
        const auto& lids = j["eyelid_vertices"];
        require(lids.is_object(), ErrorCode::ParseError, "eyes.eyelid_vertices must have left and right lists");
        eyes.eyelid_vertices[0] = index_list(lids.value("left", nlohmann::json::array()), vertex_count, "left eyelid");
        eyes.eyelid_vertices[1] = index_list(lids.value("right", nlohmann::json::array()), vertex_count, "right eyelid");
    }
}

}  // namespace

const GroomAsset& AssetLibrary::groom(hair::Style style, const std::string& id) const {
    const auto it = grooms.find(style);
    if (it != grooms.end()) {
        for (const auto& g : it->second) {
            if (g.id == id) return g;
        }
    }
    fail(ErrorCode::IndexOutOfRange, "no " + std::string(hair::to_string(style)) + " groom '" + id + "' in the library");
}

const HdrAsset& AssetLibrary::hdr(const std::string& id) const {
    for (const auto& h : hdrs) {
        if (h.id == id) return h;
    }
    fail(ErrorCode::IndexOutOfRange, "no HDR '" + id + "' in the library");
}

AssetLibrary load_asset_library(const fs::path& library_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text_file(library_json));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, "'" + library_json.string() + "': " + e.what());
    }
    require(j.is_object(), ErrorCode::ParseError, "asset library must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        require(kLibraryKeys.count(key) == 1, ErrorCode::ParseError, "unknown asset library key '" + key + "'");
    }
    for (const char* key : {"model", "identity_gmm", "expression_library", "textures", "eye_colors", "hdrs"}) {
        require(j.contains(key), ErrorCode::ParseError, std::string("asset library needs '") + key + "'");
    }

    AssetLibrary lib;
    lib.root = library_json.parent_path();
    try {
        lib.model = model::load_model(existing(lib.root, j["model"], "model"));
        lib.identity_gmm =
            sampling::gmm_from_container(io::MatrixContainer::load(existing(lib.root, j["identity_gmm"], "identity GMM")));
        lib.expressions = sampling::expression_library_from_container(
            io::MatrixContainer::load(existing(lib.root, j["expression_library"], "expression library")));
        if (j.contains("pose_distribution")) {
            lib.pose = sampling::pose_distribution_from_json(nlohmann::json::parse(
                io::read_text_file(existing(lib.root, j["pose_distribution"], "pose distribution"))));
        }
        lib.hair_colors = j.contains("hair_color_table")
                              ? sampling::hair_color_table_from_json(nlohmann::json::parse(
                                    io::read_text_file(existing(lib.root, j["hair_color_table"], "hair colour table"))))
                              : sampling::placeholder_hair_color_table();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("asset library: ") + e.what());
    }

    const int m = lib.model.identity_dim(), ne = lib.model.expression_dim();
    require(lib.identity_gmm.dim() == m, ErrorCode::DimensionMismatch,
            "identity GMM has dimension " + std::to_string(lib.identity_gmm.dim()) + " but the model has " +
                std::to_string(m) + " identity shapes");
    require(lib.expressions.betas.cols() == ne, ErrorCode::DimensionMismatch,
            "expression library rows have " + std::to_string(lib.expressions.betas.cols()) +
                " entries but the model has " + std::to_string(ne) + " expression shapes");
    require(lib.expressions.size() > 0, ErrorCode::EmptyLibrary, "expression library is empty");

    lib.textures = string_list(j["textures"], "textures");
    lib.eye_colors = string_list(j["eye_colors"], "eye_colors");
    require(!lib.textures.empty(), ErrorCode::EmptyLibrary, "asset library lists no textures");
    require(!lib.eye_colors.empty(), ErrorCode::EmptyLibrary, "asset library lists no eye colours");

    require(j["hdrs"].is_array() && !j["hdrs"].empty(), ErrorCode::EmptyLibrary, "asset library lists no HDRs");
    std::set<std::string> hdr_ids;
    for (const auto& e : j["hdrs"]) {
        HdrAsset h;
        h.path = existing(lib.root, e, "HDR");
        h.id = h.path.stem().string();
        const auto img = appearance::load_rgbe(h.path);
        h.width = img.width;
        h.height = img.height;
        require(hdr_ids.insert(h.id).second, ErrorCode::ParseError, "HDR id '" + h.id + "' is used twice");
        lib.hdrs.push_back(std::move(h));
    }

    if (j.contains("grooms")) {
        require(j["grooms"].is_object(), ErrorCode::ParseError, "grooms must map styles to path lists");
        for (const auto& [style_name, paths] : j["grooms"].items()) {
            const hair::Style style = hair::style_from_string(style_name);
            require(paths.is_array(), ErrorCode::ParseError, "grooms." + style_name + " must be an array");
            std::set<std::string> ids;
            auto& list = lib.grooms[style];
            for (const auto& p : paths) {
                auto asset = load_groom_asset(existing(lib.root, p, "groom"));
                require(ids.insert(asset.id).second, ErrorCode::ParseError,
                        "groom id '" + asset.id + "' is used twice for style " + style_name);
                list.push_back(std::move(asset));
            }
            if (list.empty()) lib.grooms.erase(style);
        }
    }

    if (j.contains("eyelids")) {
        const auto& e = j["eyelids"];
        lib.eyelid_correction.raise = index_list(e.value("raise", nlohmann::json::array()), ne, "eyelids.raise");
        lib.eyelid_correction.lower = index_list(e.value("lower", nlohmann::json::array()), ne, "eyelids.lower");
        lib.eyelid_correction.gain = e.value("gain", 1.0);
    }
    if (j.contains("eyes")) load_eyes(j["eyes"], lib.model.vertex_count(), lib.eyes);
    if (j.contains("sampling")) {
        const auto& s = j["sampling"];
        lib.sigma = s.value("sigma", lib.sigma);
        const std::string mode = s.value("sigma_mode", "std");
        require(mode == "std" || mode == "var", ErrorCode::ParseError, "sampling.sigma_mode must be std or var");
        lib.sigma_mode = mode == "std" ? sampling::SigmaMode::Std : sampling::SigmaMode::Var;
    }
    lib.decode_strands = j.value("decode_strands", lib.decode_strands);
    require(lib.decode_strands >= 1, ErrorCode::InvalidParam, "decode_strands must be positive");
    return lib;
}

// ---- demo assets ----

namespace {

Eigen::RowVectorXd smooth_field(sampling::Rng& rng, const Points& rest, double scale) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(rest.size());
    for (int term = 0; term < 2; ++term) {
        const Eigen::Vector3d k(nd(rng) * 8, nd(rng) * 8, nd(rng) * 8);
        const Eigen::Vector3d amp(nd(rng) * scale, nd(rng) * scale, nd(rng) * scale);
        const double ph = phase(rng);
        for (Eigen::Index v = 0; v < rest.rows(); ++v) {
            const double s = std::sin(rest.row(v).dot(k.transpose()) + ph);
            for (int c = 0; c < 3; ++c) out(3 * v + c) += amp(c) * s;
        }
    }
    return out;
}

const Eigen::Vector3d kHeadSemiAxes(0.075, 0.1, 0.09);

// Point on the head ellipsoid in the direction of `d`, and its outward normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> ellipsoid_point(const Eigen::Vector3d& d) {
    const Eigen::Vector3d q = d.cwiseQuotient(kHeadSemiAxes);
    const Eigen::Vector3d p = d / q.norm();
    return {p, p.cwiseQuotient(kHeadSemiAxes.cwiseProduct(kHeadSemiAxes)).normalized()};
}

hair::ScalpCap cap_towards(const Eigen::Vector3d& up, double half_angle) {
    hair::ScalpCap cap;
    cap.up = up.normalized();
    cap.right = Eigen::Vector3d::UnitX();
    cap.radius = ellipsoid_point(cap.up).first.norm();
    cap.half_angle = half_angle;
    return cap;
}

appearance::HdrImage demo_sky(sampling::Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int w = 64, h = 32;
    const double sun_x = u(rng) * w, sun_y = (0.15 + 0.25 * u(rng)) * h;
    const double sun = 50.0 + 100.0 * u(rng);
    appearance::HdrImage img(w, h);
    for (int y = 0; y < h; ++y) {
        const double elevation = 1.0 - static_cast<double>(y) / (h - 1);
        for (int x = 0; x < w; ++x) {
            const double dx = std::min(std::abs(x - sun_x), w - std::abs(x - sun_x));
            const double blob = sun * std::exp(-(dx * dx + (y - sun_y) * (y - sun_y)) / 4.0);
            img.at(x, y, 0) = static_cast<float>(0.3 + 0.4 * elevation + blob);
            img.at(x, y, 1) = static_cast<float>(0.4 + 0.6 * elevation + blob);
            img.at(x, y, 2) = static_cast<float>(0.5 + 1.2 * elevation + 0.9 * blob);
        }
    }
    return img;
}

}  // namespace

model::BlendshapeModel make_demo_model(sampling::Rng& rng, int identity_dim, int expression_dim) {
    model::BlendshapeModel m;
    m.template_mesh = subdivide_catmull_clark(make_unit_cube(), 3);
    auto& v = m.template_mesh.vertices;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const Eigen::Vector3d d = v.row(i).transpose() - Eigen::Vector3d::Constant(0.5);
        v.row(i) = ellipsoid_point(d).first.transpose();
    }
    m.identity_basis.resize(identity_dim, v.size());
    for (int i = 0; i < identity_dim; ++i) m.identity_basis.row(i) = smooth_field(rng, v, 0.006);
    m.expression_basis.resize(expression_dim, v.size());
    for (int i = 0; i < expression_dim; ++i) m.expression_basis.row(i) = smooth_field(rng, v, 0.003);
    m.skeleton = model::make_default_skeleton(v, identity_dim);
    // Seat each eyeball just under the surface so the lids can wrap onto it.
    const double sclera = model::EyeGeometryParams{}.sclera_radius;
    for (int eye : {model::kEyeLeft, model::kEyeRight}) {
        auto& t = m.skeleton.joints[eye].template_translation;
        const auto [surface, normal] = ellipsoid_point(t);
        t = surface - 0.9 * sclera * normal;
    }
    m.skinning_weights = model::procedural_skinning_weights(v, m.skeleton, 0.02);
    m.validate();
    return m;
}

fs::path write_demo_assets(const fs::path& dir, std::uint64_t seed, const DemoAssetOptions& options) {
    require(options.identity_dim >= 1 && options.gmm_components >= 1 && options.textures >= 1 &&
                options.grooms_per_style >= 1 && options.hdrs >= 1 && options.expression_count >= 1,
            ErrorCode::InvalidParam, "demo asset counts must be positive");
    fs::create_directories(dir / "grooms");
    fs::create_directories(dir / "hdr");
    auto rng = sampling::make_stream(seed, 0);

    const auto model = make_demo_model(rng, options.identity_dim, model::kDefaultExpressionCount);
    model::save_model(dir / "model.json", model);

    if (options.scans > 0) {
        require(options.scan_identity_dim >= 1 && options.scan_identity_dim <= options.identity_dim,
                ErrorCode::InvalidParam, "scan_identity_dim must be in [1, identity_dim]");
        fs::create_directories(dir / "scans");
        auto sr = sampling::make_stream(seed, 5);
        std::normal_distribution<double> nd;
        for (int i = 0; i < options.scans; ++i) {
            auto params = model::ModelParams::zeros(model.identity_dim(), model.expression_dim());
            for (int k = 0; k < options.scan_identity_dim; ++k) params.alpha(k) = nd(sr);
            char rel[64];
            std::snprintf(rel, sizeof rel, "scans/scan_%03d.obj", i);
            save_obj(dir / rel, model::evaluate(model, params));
        }
        io::MatrixContainer truth;
        const model::Basis rows = model.identity_basis.topRows(options.scan_identity_dim);
        truth.add("truth.identity_basis", {static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols())},
                  std::span<const double>(rows.data(), static_cast<std::size_t>(rows.size())));
        truth.attributes()["kind"] = "identity_truth";
        truth.save(dir / "scans" / "truth.json");
        const nlohmann::json fit_config = {
            {"freeze", {{"beta", true}, {"pose", true}}},
            {"schedule", {{"iterations", 2000}}},
            {"seed", seed},
        };
        io::write_text_file(dir / "fit_config.json", fit_config.dump(2) + "\n");
    }

    // Identity GMM fitted to clustered draws of identity coefficients.
    {
        auto g = sampling::make_stream(seed, 1);
        std::normal_distribution<double> nd;
        const int n = 100 * options.gmm_components + 100;
        Eigen::MatrixXd data(n, options.identity_dim);
        std::vector<Eigen::VectorXd> centers;
        for (int k = 0; k < options.gmm_components; ++k) {
            Eigen::VectorXd c(options.identity_dim);
            for (auto& x : c) x = 0.8 * nd(g);
            centers.push_back(c);
        }
        for (int i = 0; i < n; ++i) {
            for (int d = 0; d < options.identity_dim; ++d) data(i, d) = centers[i % options.gmm_components](d) + 0.4 * nd(g);
        }
        sampling::to_container(sampling::fit_gmm(data, options.gmm_components, seed).mixture)
            .save(dir / "identity_gmm.json");
    }
    {
        auto e = sampling::make_stream(seed, 2);
        auto lib = sampling::synthetic_expression_library(options.expression_count, model::kDefaultExpressionCount, 3, e);
        sampling::to_container(lib).save(dir / "expressions.json");
    }
    io::write_text_file(dir / "pose.json", sampling::to_json(sampling::PoseDistribution()).dump(2) + "\n");
    io::write_text_file(dir / "hair_colors.json",
                        sampling::to_json(sampling::placeholder_hair_color_table()).dump(2) + "\n");

    struct StyleSetup {
        hair::Style style;
        Eigen::Vector3d up;
        double half_angle;
        double length_scale;
    };
    const std::array<StyleSetup, 4> setups = {{{hair::Style::Scalp, {0, 1, -0.2}, 0.9, 1.0},
                                               {hair::Style::Eyebrow, {0, 0.45, 1}, 0.25, 0.12},
                                               {hair::Style::Beard, {0, -0.8, 1}, 0.5, 0.2},
                                               {hair::Style::Eyelash, {0, 0.25, 1}, 0.12, 0.08}}};
    nlohmann::json grooms = nlohmann::json::object();
    auto hr = sampling::make_stream(seed, 3);
    for (const auto& s : setups) {
        const std::string name(hair::to_string(s.style));
        auto& list = grooms[name] = nlohmann::json::array();
        for (int i = 0; i < options.grooms_per_style; ++i) {
            hair::ProceduralGroomOptions opt;
            opt.strands = options.strands_per_groom;
            opt.style = s.style;
            opt.length_scale = s.length_scale;
            const auto groom = hair::procedural_groom(hr, cap_towards(s.up, s.half_angle), opt);
            char stem[64];
            std::snprintf(stem, sizeof stem, "%s_%03d", name.c_str(), i);
            // The second scalp groom is stored in encoded form.
            if (s.style == hair::Style::Scalp && i == 1) {
                const auto code = hair::encode_groom(groom, hair::kDefaultUvResolution, hair::kDefaultVolumeResolution,
                                                     hair::bounding_box(groom, 0.02, true));
                const std::string rel = std::string("grooms/") + stem + "_code.json";
                hair::to_container(code).save(dir / rel);
                list.push_back(rel);
            } else {
                const std::string rel = std::string("grooms/") + stem + ".json";
                hair::save_groom(dir / rel, groom);
                list.push_back(rel);
            }
        }
    }

    nlohmann::json hdrs = nlohmann::json::array();
    auto sr = sampling::make_stream(seed, 4);
    for (int i = 0; i < options.hdrs; ++i) {
        char rel[64];
        std::snprintf(rel, sizeof rel, "hdr/sky_%03d.hdr", i);
        appearance::save_rgbe(dir / rel, demo_sky(sr));
        hdrs.push_back(rel);
    }

    nlohmann::json textures = nlohmann::json::array();
    for (int i = 0; i < options.textures; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "texture_%03d", i);
        textures.push_back(id);
    }

    // Lids: control vertices near each eyeball.
    nlohmann::json lids = nlohmann::json::object();
    const double sclera = model::EyeGeometryParams{}.sclera_radius;
    for (auto [eye, side] : {std::pair{model::kEyeLeft, "left"}, std::pair{model::kEyeRight, "right"}}) {
        const Eigen::Vector3d c = model.skeleton.joints[eye].template_translation;
        auto& ids = lids[side] = nlohmann::json::array();
        for (int i = 0; i < model.vertex_count(); ++i) {
            if ((model.template_mesh.vertices.row(i).transpose() - c).norm() < 2.5 * sclera) ids.push_back(i);
        }
    }

    nlohmann::json library = {
        {"model", "model.json"},
        {"identity_gmm", "identity_gmm.json"},
        {"expression_library", "expressions.json"},
        {"pose_distribution", "pose.json"},
        {"hair_color_table", "hair_colors.json"},
        {"textures", textures},
        {"eye_colors", {"brown", "blue", "green", "gray", "hazel"}},
        {"grooms", grooms},
        {"hdrs", hdrs},
        {"eyelids", {{"raise", {0}}, {"lower", {1}}, {"gain", 1.0}}},
        {"eyes", {{"lat_segments", 12}, {"lon_segments", 16}, {"eyelid_vertices", lids}}},
        {"sampling", {{"sigma", 0.8}, {"sigma_mode", "std"}}},
        {"decode_strands", options.strands_per_groom},
    };
    const fs::path out = dir / "library.json";
    io::write_text_file(out, library.dump(2) + "\n");
    return out;
}

}  // namespace facegen::pipeline
