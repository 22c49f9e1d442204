#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include <Eigen/Geometry>

#include "doctest.h"
#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"
#include "facegen/mesh/connectivity.hpp"
#include "facegen/mesh/obj_io.hpp"
#include "facegen/mesh/subdivision.hpp"
#include "facegen/pipeline/scene.hpp"

using namespace facegen;
using namespace facegen::pipeline;
namespace fs = std::filesystem;

namespace {

const AssetLibrary& demo_library() {
    static const AssetLibrary lib = [] {
        const fs::path dir = fs::temp_directory_path() / "facegen_test_pipeline_lib";
        fs::remove_all(dir);
        return load_asset_library(write_demo_assets(dir, 0));
    }();
    return lib;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "facegen_test_pipeline" / name;
    fs::remove_all(dir);
    return dir;
}

std::map<std::string, std::string> manifest_hashes(const fs::path& dir) {
    const auto j = nlohmann::json::parse(io::read_text_file(dir / "manifest.json"));
    std::map<std::string, std::string> out;
    for (const auto& f : j["files"]) out[f["path"].get<std::string>()] = f["sha256"].get<std::string>();
    return out;
}

// Upper p = 0.001 critical value of chi-squared with 3 degrees of freedom.
constexpr double kChi2Dof3 = 16.266;

}  // namespace

TEST_CASE("sample_scene is a pure function of the seed") {
    const auto& lib = demo_library();
    const auto a = sample_scene(lib, 123);
    const auto b = sample_scene(lib, 123);
    CHECK(a == b);
    CHECK_FALSE(a == sample_scene(lib, 124));
    CHECK(a.hdr_yaw >= 0.0);
    CHECK(a.hdr_yaw < 2.0 * std::acos(-1.0));
    CHECK(a.grooms.size() == 4);
    CHECK(a.render.width == 1024);
    CHECK(a.render.samples_per_pixel == 256);
}

TEST_CASE("texture draws are uniform and groom flips are fair coins") {
    const auto& lib = demo_library();
    REQUIRE(lib.textures.size() == 4);
    std::map<std::string, int> textures;
    std::map<hair::Style, int> flips;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto s = sample_scene(lib, scene_seed(99, i));
        ++textures[s.texture_id];
        for (const auto& [style, choice] : s.grooms) flips[style] += choice.flip ? 1 : 0;
    }
    double chi2 = 0.0;
    for (const auto& t : lib.textures) chi2 += std::pow(textures[t] - n / 4.0, 2) / (n / 4.0);
    CHECK(chi2 < kChi2Dof3);
    for (const auto& [style, heads] : flips) {
        INFO(hair::to_string(style));
        CHECK(std::abs(heads / double(n) - 0.5) <= 0.02);
    }
}

TEST_CASE("zero parameters realize the subdivided template") {
    auto lib = demo_library();
    lib.eyes.eyelid_vertices = {};
    auto scene = sample_scene(lib, 5);
    scene.params = model::ModelParams::zeros(lib.model.identity_dim(), lib.model.expression_dim());
    const auto geometry = realize_scene(lib, scene, {2, 1});
    const auto expected = subdivide_catmull_clark(lib.model.template_mesh, 2);
    CHECK(geometry.face.vertices == expected.vertices);
    CHECK(geometry.face.quads == expected.quads);
    CHECK(geometry.eyes.size() == 4);
    CHECK(geometry.grooms.size() == 4);
}

TEST_CASE("three levels match the combinatorial vertex count") {
    const auto& lib = demo_library();
    const auto conn = build_connectivity(lib.model.template_mesh);
    const auto geometry = realize_scene(lib, sample_scene(lib, 8));
    CHECK(geometry.face.vertex_count() ==
          subdivided_vertex_count(conn.vertex_count, conn.edge_count(), conn.face_count, 3));
    CHECK(geometry.face.face_count() == conn.face_count * 64);
}

TEST_CASE("realize is deterministic and moves eyelids onto the eyes") {
    const auto& lib = demo_library();
    const auto scene = sample_scene(lib, 17);
    const auto a = realize_scene(lib, scene, {1, 1});
    const auto b = realize_scene(lib, scene, {1, 2});
    CHECK(a.face.vertices == b.face.vertices);
    for (std::size_t i = 0; i < a.grooms.size(); ++i) CHECK(a.grooms[i].groom.strands == b.grooms[i].groom.strands);

    auto bare = lib;
    bare.eyes.eyelid_vertices = {};
    const auto unwrapped = realize_scene(bare, scene, {1, 1});
    CHECK_FALSE(unwrapped.face.vertices == a.face.vertices);
}

TEST_CASE("unknown ids are rejected before any work") {
    const auto& lib = demo_library();
    auto scene = sample_scene(lib, 3);
    scene.texture_id = "no_such_texture";
    CHECK_THROWS_AS(realize_scene(lib, scene), Error);
    scene = sample_scene(lib, 3);
    scene.grooms[hair::Style::Beard].id = "nope";
    CHECK_THROWS_AS(realize_scene(lib, scene), Error);
}

TEST_CASE("root-follow transport is rigid per strand") {
    const auto& lib = demo_library();
    const auto& groom = *lib.groom(hair::Style::Scalp, lib.grooms.at(hair::Style::Scalp).front().id).strands;
    const auto& tmpl = lib.model.template_mesh.vertices;
    CHECK(transport_groom(groom, tmpl, tmpl, Eigen::Matrix3d::Identity()).strands == groom.strands);

    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, Eigen::Vector3d(0.3, 1.0, 0.2).normalized()).toRotationMatrix();
    Points shifted = tmpl;
    shifted.rowwise() += Eigen::RowVector3d(0.01, -0.02, 0.03);
    const auto moved = transport_groom(groom, tmpl, shifted, r);
    for (std::size_t s = 0; s < groom.strands.size(); ++s) {
        const auto& a = groom.strands[s];
        const auto& b = moved.strands[s];
        for (Eigen::Index i = 1; i < a.rows(); ++i) {
            const double la = (a.row(i) - a.row(0)).norm();
            const double lb = (b.row(i) - b.row(0)).norm();
            CHECK(std::abs(la - lb) < 1e-12);
        }
    }
}

TEST_CASE("export writes reimportable, hashed files") {
    const auto& lib = demo_library();
    const auto scene = sample_scene(lib, 31);
    const auto geometry = realize_scene(lib, scene, {2, 1});
    const auto dir = scratch("export");
    const auto files = export_scene(scene, geometry, dir);

    std::set<std::string> names;
    for (const auto& f : files) names.insert(f.path);
    for (const char* expected : {"face.obj", "eyes.obj", "scene.json", "grooms/scalp.json", "grooms/scalp.bin"}) {
        CHECK(names.count(expected) == 1);
    }

    const auto face = load_obj(dir / "face.obj");
    REQUIRE(face.vertex_count() == geometry.face.vertex_count());
    CHECK((face.vertices - geometry.face.vertices).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(face.quads == geometry.face.quads);

    const auto reparsed = scene_from_json(nlohmann::json::parse(io::read_text_file(dir / "scene.json")));
    CHECK(reparsed == scene);

    const auto groom = hair::load_groom(dir / "grooms/scalp.json");
    CHECK(groom.strands.size() == geometry.grooms.front().groom.strands.size());

    for (const auto& f : files) {
        const auto bytes = io::read_binary_file(dir / f.path);
        CHECK(f.bytes == bytes.size());
        CHECK(f.sha256 == sha256_hex(bytes));
    }
}

TEST_CASE("manifest hashes change exactly with content") {
    const auto& lib = demo_library();
    const auto scene = sample_scene(lib, 41);
    const auto geometry = realize_scene(lib, scene, {1, 1});
    const auto a = scratch("manifest_a");
    const auto b = scratch("manifest_b");
    export_scene(scene, geometry, a);
    export_scene(scene, geometry, b);
    CHECK(io::read_text_file(a / "manifest.json") == io::read_text_file(b / "manifest.json"));

    auto recoloured = scene;
    recoloured.hair_color.grayness = 0.5 * (recoloured.hair_color.grayness + 1.0);
    const auto c = scratch("manifest_c");
    export_scene(recoloured, geometry, c);
    const auto ha = manifest_hashes(a);
    const auto hc = manifest_hashes(c);
    REQUIRE(ha.size() == hc.size());
    for (const auto& [path, hash] : ha) {
        INFO(path);
        CHECK((hash != hc.at(path)) == (path == "scene.json"));
    }

    CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("scene json rejects malformed input") {
    const auto& lib = demo_library();
    auto j = to_json(sample_scene(lib, 2));
    CHECK(scene_from_json(j) == sample_scene(lib, 2));
    auto bad = j;
    bad["illumination"]["yaw"] = 7.0;
    CHECK_THROWS_AS(scene_from_json(bad), Error);
    bad = j;
    bad["unexpected"] = 1;
    CHECK_THROWS_AS(scene_from_json(bad), Error);
    bad = j;
    bad.erase("camera");
    CHECK_THROWS_AS(scene_from_json(bad), Error);
}

TEST_CASE("library loading fails fast with the offending path") {
    const auto dir = scratch("broken_lib");
    const auto path = write_demo_assets(dir, 1);
    fs::remove(dir / "pose.json");
    try {
        load_asset_library(path);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
        CHECK(std::string(e.what()).find("pose.json") != std::string::npos);
    }
    CHECK_THROWS_AS(load_asset_library(dir / "missing.json"), Error);
}

TEST_CASE("sample options from json") {
    const auto o = sample_options_from_json(
        nlohmann::json::parse(R"({"sigma": 0.5, "sigma_mode": "var", "camera": {"vertical_fov_deg": 30},
                                  "render": {"width": 640, "height": 480, "samples_per_pixel": 64}})"));
    CHECK(*o.sigma == 0.5);
    CHECK(*o.sigma_mode == sampling::SigmaMode::Var);
    CHECK(o.vertical_fov_deg == 30.0);
    CHECK(o.render.width == 640);
    CHECK_THROWS_AS(sample_options_from_json(nlohmann::json::parse(R"({"sigmas": 1})")), Error);
    CHECK_THROWS_AS(sample_options_from_json(nlohmann::json::parse(R"({"sigma_mode": "cube"})")), Error);

    const auto& lib = demo_library();
    SampleOptions wide;
    wide.vertical_fov_deg = 40.0;
    const auto near = sample_scene(lib, 6, wide);
    const auto far = sample_scene(lib, 6);
    CHECK(near.params.alpha == far.params.alpha);
    CHECK(near.camera.position.z() < far.camera.position.z());
}
