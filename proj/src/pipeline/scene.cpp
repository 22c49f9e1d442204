#include "facegen/pipeline/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <openssl/evp.h>

#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"
#include "facegen/mesh/obj_io.hpp"
#include "facegen/mesh/subdivision.hpp"
#include "facegen/model/rotation.hpp"

namespace facegen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream ids of the independent draws inside one scene.
enum Stream : std::uint64_t {
    kIdentityStream = 0,
    kExpressionStream,
    kPoseStream,
    kEyelidStream,
    kTextureStream,
    kEyeColorStream,
    kGroomStream,
    kHdrStream,
    kHairColorStream,
    kDecodeStreamBase = 100,
};

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vec_from(const json& j, const char* what, Eigen::Index expected = -1) {
    require(j.is_array(), ErrorCode::ParseError, std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), ErrorCode::ParseError, std::string(what) + " must hold numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    require(expected < 0 || v.size() == expected, ErrorCode::DimensionMismatch,
            std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(expected));
    return v;
}

template <class T>
const T& pick(const std::vector<T>& items, sampling::Rng& rng) {
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.size() == b.size() && a == b; }

void write_file(const fs::path& dir, const std::string& rel, const std::string& text, std::vector<ExportedFile>& out) {
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    io::write_binary_file(dir / rel, bytes);
    out.push_back({rel, sha256_hex(bytes), bytes.size()});
}

}  // namespace

bool SceneDescription::operator==(const SceneDescription& o) const {
    return scene_id == o.scene_id && seed == o.seed && same_vector(params.alpha, o.params.alpha) &&
           same_vector(params.beta, o.params.beta) && params.pose == o.params.pose &&
           params.translation == o.params.translation && texture_id == o.texture_id &&
           eye_color_id == o.eye_color_id && grooms == o.grooms && hair_color.melanin == o.hair_color.melanin &&
           hair_color.pheomelanin == o.hair_color.pheomelanin && hair_color.grayness == o.hair_color.grayness &&
           hdr_id == o.hdr_id && hdr_yaw == o.hdr_yaw && camera == o.camera && render == o.render &&
           eyelid_correction_applied == o.eyelid_correction_applied && gaze_pitch == o.gaze_pitch;
}

json to_json(const SceneDescription& s) {
    json grooms = json::object();
    for (hair::Style style : kGroomStyles) {
        const auto it = s.grooms.find(style);
        grooms[std::string(hair::to_string(style))] =
            it == s.grooms.end() ? json(nullptr) : json{{"id", it->second.id}, {"flip", it->second.flip}};
    }
    return {
        {"format_version", kSceneFormatVersion},
        {"scene_id", s.scene_id},
        {"seed", s.seed},
        {"params",
         {{"alpha", vec_json(s.params.alpha)},
          {"beta", vec_json(s.params.beta)},
          {"pose", vec_json(s.params.pose)},
          {"translation", vec_json(s.params.translation)}}},
        {"texture_id", s.texture_id},
        {"eye_color_id", s.eye_color_id},
        {"grooms", grooms},
        {"hair_color",
         {{"melanin", s.hair_color.melanin},
          {"pheomelanin", s.hair_color.pheomelanin},
          {"grayness", s.hair_color.grayness}}},
        {"illumination", {{"hdr_id", s.hdr_id}, {"yaw", s.hdr_yaw}}},
        {"camera",
         {{"type", "pinhole"},
          {"position", vec_json(s.camera.position)},
          {"look_at", vec_json(s.camera.look_at)},
          {"up", vec_json(s.camera.up)},
          {"vertical_fov_deg", s.camera.vertical_fov_deg}}},
        {"render",
         {{"resolution", {s.render.width, s.render.height}}, {"samples_per_pixel", s.render.samples_per_pixel}}},
        {"eyelid_correction", {{"applied", s.eyelid_correction_applied}, {"gaze_pitch", s.gaze_pitch}}},
    };
}

SceneDescription scene_from_json(const json& j) {
    SceneDescription s;
    require(j.is_object(), ErrorCode::ParseError, "scene description must be a JSON object");
    static const std::set<std::string> known = {"format_version", "scene_id",   "seed",   "params",
                                                "texture_id",     "eye_color_id", "grooms", "hair_color",
                                                "illumination",   "camera",     "render", "eyelid_correction"};
    for (const auto& [key, value] : j.items()) {
        require(known.count(key) == 1, ErrorCode::ParseError, "unknown scene key '" + key + "'");
    }
    try {
        require(j.at("format_version").get<int>() == kSceneFormatVersion, ErrorCode::ParseError,
                "unsupported scene format_version");
        s.scene_id = j.at("scene_id").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("params");
        s.params.alpha = vec_from(p.at("alpha"), "params.alpha");
        s.params.beta = vec_from(p.at("beta"), "params.beta");
        s.params.pose = vec_from(p.at("pose"), "params.pose", model::kPoseDim);
        s.params.translation = vec_from(p.at("translation"), "params.translation", 3);
        s.texture_id = j.at("texture_id").get<std::string>();
        s.eye_color_id = j.at("eye_color_id").get<std::string>();
        for (const auto& [name, g] : j.at("grooms").items()) {
            const hair::Style style = hair::style_from_string(name);
            if (g.is_null()) continue;
            s.grooms[style] = {g.at("id").get<std::string>(), g.at("flip").get<bool>()};
        }
        const auto& hc = j.at("hair_color");
        s.hair_color = {hc.at("melanin").get<double>(), hc.at("pheomelanin").get<double>(),
                        hc.at("grayness").get<double>()};
        s.hdr_id = j.at("illumination").at("hdr_id").get<std::string>();
        s.hdr_yaw = j.at("illumination").at("yaw").get<double>();
        require(s.hdr_yaw >= 0.0 && s.hdr_yaw < 2.0 * std::numbers::pi, ErrorCode::ParseError,
                "illumination.yaw must be in [0, 2 pi)");
        const auto& c = j.at("camera");
        s.camera.position = vec_from(c.at("position"), "camera.position", 3);
        s.camera.look_at = vec_from(c.at("look_at"), "camera.look_at", 3);
        s.camera.up = vec_from(c.at("up"), "camera.up", 3);
        s.camera.vertical_fov_deg = c.at("vertical_fov_deg").get<double>();
        const auto& r = j.at("render");
        s.render.width = r.at("resolution").at(0).get<int>();
        s.render.height = r.at("resolution").at(1).get<int>();
        s.render.samples_per_pixel = r.at("samples_per_pixel").get<int>();
        s.eyelid_correction_applied = j.at("eyelid_correction").at("applied").get<bool>();
        s.gaze_pitch = j.at("eyelid_correction").at("gaze_pitch").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("scene description: ") + e.what());
    }
    return s;
}

SampleOptions sample_options_from_json(const json& j) {
    SampleOptions o;
    require(j.is_object(), ErrorCode::ParseError, "sample config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        require(key == "sigma" || key == "sigma_mode" || key == "camera" || key == "render", ErrorCode::ParseError,
                "unknown sample config key '" + key + "'");
    }
    try {
        if (j.contains("sigma")) o.sigma = j["sigma"].get<double>();
        if (j.contains("sigma_mode")) {
            const auto mode = j["sigma_mode"].get<std::string>();
            require(mode == "std" || mode == "var", ErrorCode::ParseError, "sigma_mode must be std or var");
            o.sigma_mode = mode == "std" ? sampling::SigmaMode::Std : sampling::SigmaMode::Var;
        }
        if (j.contains("camera")) {
            o.vertical_fov_deg = j["camera"].value("vertical_fov_deg", o.vertical_fov_deg);
            o.framing = j["camera"].value("framing", o.framing);
        }
        if (j.contains("render")) {
            o.render.width = j["render"].value("width", o.render.width);
            o.render.height = j["render"].value("height", o.render.height);
            o.render.samples_per_pixel = j["render"].value("samples_per_pixel", o.render.samples_per_pixel);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("sample config: ") + e.what());
    }
    require(o.vertical_fov_deg > 0.0 && o.vertical_fov_deg < 180.0 && o.framing > 0.0, ErrorCode::InvalidParam,
            "camera fov must be in (0, 180) and framing positive");
    require(o.render.width > 0 && o.render.height > 0 && o.render.samples_per_pixel > 0, ErrorCode::InvalidParam,
            "render settings must be positive");
    return o;
}

std::uint64_t scene_seed(std::uint64_t seed, int index) {
    return sampling::stream_seed(seed, static_cast<std::uint64_t>(index));
}

Camera frame_camera(const Points& vertices, double vertical_fov_deg, double framing) {
    require(vertices.rows() > 0, ErrorCode::InvalidParam, "cannot frame an empty mesh");
    Camera cam;
    cam.look_at = vertices.colwise().mean().transpose();
    double radius = 0.0;
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        radius = std::max(radius, (vertices.row(i).transpose() - cam.look_at).norm());
    }
    const double half_fov = 0.5 * vertical_fov_deg * std::numbers::pi / 180.0;
    cam.position = cam.look_at + Eigen::Vector3d(0, 0, framing * radius / std::sin(half_fov));
    cam.vertical_fov_deg = vertical_fov_deg;
    return cam;
}

SceneDescription sample_scene(const AssetLibrary& lib, std::uint64_t seed, const SampleOptions& options) {
    auto stream = [&](std::uint64_t id) { return sampling::make_stream(seed, id); };
    SceneDescription s;
    s.seed = seed;

    auto identity_rng = stream(kIdentityStream);
    s.params.alpha = sampling::sample_identity(lib.identity_gmm, options.sigma.value_or(lib.sigma), identity_rng,
                                               options.sigma_mode.value_or(lib.sigma_mode));
    auto expression_rng = stream(kExpressionStream);
    const Eigen::VectorXd beta = sampling::sample_expression(lib.expressions, expression_rng);
    auto pose_rng = stream(kPoseStream);
    s.params.pose = sampling::sample_pose(lib.model.skeleton, lib.pose, pose_rng);
    s.params.translation.setZero();

    auto eyelid_rng = stream(kEyelidStream);
    s.eyelid_correction_applied = std::bernoulli_distribution(0.5)(eyelid_rng);
    s.gaze_pitch = sampling::gaze_pitch(s.params.pose);
    s.params.beta =
        sampling::gaze_eyelid_correction(beta, s.gaze_pitch, s.eyelid_correction_applied, lib.eyelid_correction);

    auto texture_rng = stream(kTextureStream);
    s.texture_id = pick(lib.textures, texture_rng);
    auto eye_rng = stream(kEyeColorStream);
    s.eye_color_id = pick(lib.eye_colors, eye_rng);

    auto groom_rng = stream(kGroomStream);
    for (hair::Style style : kGroomStyles) {
        const auto it = lib.grooms.find(style);
        if (it == lib.grooms.end()) continue;
        GroomChoice choice;
        choice.id = pick(it->second, groom_rng).id;
        choice.flip = std::bernoulli_distribution(0.5)(groom_rng);
        s.grooms[style] = choice;
    }

    auto hdr_rng = stream(kHdrStream);
    s.hdr_id = pick(lib.hdrs, hdr_rng).id;
    s.hdr_yaw = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(hdr_rng);
    if (s.hdr_yaw >= 2.0 * std::numbers::pi) s.hdr_yaw = 0.0;

    auto hair_rng = stream(kHairColorStream);
    s.hair_color = sampling::sample_hair_color(lib.hair_colors, hair_rng);

    s.camera = frame_camera(model::evaluate(lib.model, s.params).vertices, options.vertical_fov_deg, options.framing);
    s.render = options.render;
    return s;
}

hair::Groom transport_groom(const hair::Groom& groom, const Points& template_vertices, const Points& posed_vertices,
                            const Eigen::Matrix3d& head_rotation) {
    require(template_vertices.rows() == posed_vertices.rows() && template_vertices.rows() > 0,
            ErrorCode::DimensionMismatch, "template and posed vertex sets differ");
    hair::Groom out = groom;
    for (auto& strand : out.strands) {
        const Eigen::RowVector3d root = strand.row(0);
        Eigen::Index anchor = 0;
        (template_vertices.rowwise() - root).rowwise().squaredNorm().minCoeff(&anchor);
        const Eigen::RowVector3d from = template_vertices.row(anchor), to = posed_vertices.row(anchor);
        // p + (to - from) + (R - I)(p - from): exact when nothing moves.
        const Eigen::Matrix3d turn = head_rotation - Eigen::Matrix3d::Identity();
        for (Eigen::Index k = 0; k < strand.rows(); ++k) {
            const Eigen::RowVector3d local = strand.row(k) - from;
            strand.row(k) += (to - from) + local * turn.transpose();
        }
    }
    return out;
}

RealizedScene realize_scene(const AssetLibrary& lib, const SceneDescription& scene, const RealizeOptions& options) {
    require(options.subdivision_levels >= 0, ErrorCode::InvalidParam, "subdivision levels must be non-negative");
    // Resolve every id before doing any work.
    std::vector<std::pair<hair::Style, const GroomAsset*>> grooms;
    for (const auto& [style, choice] : scene.grooms) grooms.emplace_back(style, &lib.groom(style, choice.id));
    lib.hdr(scene.hdr_id);
    require(std::find(lib.textures.begin(), lib.textures.end(), scene.texture_id) != lib.textures.end(),
            ErrorCode::IndexOutOfRange, "texture '" + scene.texture_id + "' is not in the library");
    require(std::find(lib.eye_colors.begin(), lib.eye_colors.end(), scene.eye_color_id) != lib.eye_colors.end(),
            ErrorCode::IndexOutOfRange, "eye colour '" + scene.eye_color_id + "' is not in the library");

    const auto& model = lib.model;
    const QuadMesh control = model::evaluate(model, scene.params);
    RealizedScene out;
    out.face = subdivide_catmull_clark(control, options.subdivision_levels);

    const auto transforms = model::joint_transforms(model.skeleton, scene.params.alpha, scene.params.pose);
    const Eigen::Matrix3d global = model::euler_xyz(scene.params.pose.tail<3>());
    const Eigen::Vector3d& translation = scene.params.translation;

    const auto eye = model::build_eye(lib.eyes.geometry, lib.eyes.lat_segments, lib.eyes.lon_segments);
    const double radius = lib.eyes.geometry.sclera_radius;
    const std::array<std::pair<int, const char*>, 2> sides = {{{model::kEyeLeft, "left"}, {model::kEyeRight, "right"}}};
    for (std::size_t e = 0; e < sides.size(); ++e) {
        const auto& t = transforms[sides[e].first];
        const Eigen::Matrix3d r = global * t.rotation;
        const Eigen::Vector3d center = global * t.posed_pivot + translation;
        for (const auto& [part, mesh] : {std::pair{"sclera", &eye.sclera}, std::pair{"cornea", &eye.cornea}}) {
            QuadMesh placed = *mesh;
            for (Eigen::Index i = 0; i < placed.vertices.rows(); ++i) {
                placed.vertices.row(i) = (r * mesh->vertices.row(i).transpose() + center).transpose();
            }
            out.eyes.emplace_back(std::string("eye_") + sides[e].second + "_" + part, std::move(placed));
        }
        const auto lids = refine_vertex_set(control, lib.eyes.eyelid_vertices[e], options.subdivision_levels);
        out.face.vertices = model::shrinkwrap_eyelids(out.face.vertices, lids, center, radius,
                                                      lib.eyes.capture_fraction * radius);
    }

    const Eigen::Matrix3d head = global * transforms[model::kNeck].rotation;
    for (const auto& [style, asset] : grooms) {
        hair::Groom g;
        if (asset->strands) {
            g = *asset->strands;
        } else {
            const auto seed = sampling::stream_seed(scene.seed, kDecodeStreamBase + static_cast<std::uint64_t>(style));
            g = hair::decode_groom(*asset->code, lib.decode_strands, hair::default_step(*asset->code), seed,
                                   options.threads)
                    .groom;
        }
        if (scene.grooms.at(style).flip) g = hair::flip_groom(g);
        out.grooms.push_back({style, asset->id, transport_groom(g, model.template_mesh.vertices, control.vertices, head)});
    }
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::IoError, "SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::vector<ExportedFile> export_scene(const SceneDescription& scene, const RealizedScene& geometry,
                                       const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir / "grooms", ec);
    require(!ec, ErrorCode::IoError, "cannot create '" + (out_dir / "grooms").string() + "': " + ec.message());

    std::vector<ExportedFile> files;
    write_file(out_dir, "face.obj", write_obj(geometry.face), files);
    std::vector<NamedMesh> eyes;
    for (const auto& [name, mesh] : geometry.eyes) eyes.push_back({name, &mesh});
    write_file(out_dir, "eyes.obj", write_obj(eyes), files);
    for (const auto& g : geometry.grooms) {
        const std::string stem = "grooms/" + std::string(hair::to_string(g.style));
        const auto c = hair::to_container(g.groom);
        write_file(out_dir, stem + ".json", c.manifest_text(std::string(hair::to_string(g.style)) + ".bin"), files);
        const auto blob = c.blob_bytes();
        io::write_binary_file(out_dir / (stem + ".bin"), blob);
        files.push_back({stem + ".bin", sha256_hex(blob), blob.size()});
    }
    write_file(out_dir, "scene.json", to_json(scene).dump(2) + "\n", files);

    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    json listing = json::array();
    for (const auto& f : files) listing.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    const json manifest = {{"format", "facegen-export"}, {"version", 1}, {"files", listing}};
    io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return files;
}

}  // namespace facegen::pipeline
