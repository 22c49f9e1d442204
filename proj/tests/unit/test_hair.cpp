#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "doctest.h"
#include "facegen/appearance/pca.hpp"
#include "facegen/error.hpp"
#include "facegen/hair/hair_code.hpp"

using namespace facegen;
using namespace facegen::hair;

namespace {

ScalpCap z_up_cap() {
    ScalpCap cap;
    cap.radius = 0.05;
    cap.up = Eigen::Vector3d::UnitZ();
    cap.right = Eigen::Vector3d::UnitX();
    return cap;
}

/// A straight strand of `length` along +z from the cap point at `uv`.
Groom vertical_strand(const Eigen::Vector2d& uv, double length, int segments = 10) {
    Groom g;
    g.scalp = z_up_cap();
    const Eigen::Vector3d root = g.scalp.position(uv);
    Points s(segments + 1, 3);
    for (int k = 0; k <= segments; ++k) s.row(k) = (root + Eigen::Vector3d(0, 0, length * k / segments)).transpose();
    g.strands.push_back(s);
    g.root_uv.push_back(uv);
    return g;
}

const Bbox kCube{Eigen::Vector3d::Constant(-0.2), Eigen::Vector3d::Constant(0.2)};

Groom combed(std::uint64_t seed, int strands = 200) {
    sampling::Rng rng(seed);
    ProceduralGroomOptions opt;
    opt.strands = strands;
    return procedural_groom(rng, ScalpCap{}, opt);
}

}  // namespace

TEST_CASE("scalp cap mapping") {
    ScalpCap cap;
    cap.center = Eigen::Vector3d(0.01, 0.02, 0.03);
    CHECK((cap.position({0.5, 0.5}) - (cap.center + cap.radius * cap.up)).norm() < 1e-15);
    for (double u : {0.0, 0.3, 1.0}) {
        for (double v : {0.0, 0.7}) {
            CHECK(std::abs((cap.position({u, v}) - cap.center).norm() - cap.radius) < 1e-15);
            CHECK(std::abs(cap.normal({u, v}).norm() - 1.0) < 1e-15);
        }
    }
    CHECK(cap.position({0.9, 0.5}).x() > cap.position({0.1, 0.5}).x());
    CHECK(scalp_from_json(to_json(cap)) == cap);
    cap.right = Eigen::Vector3d::UnitY();
    CHECK_THROWS_WITH_AS(cap.validate(), doctest::Contains("InvalidParam"), Error);
}

TEST_CASE("encode a single vertical strand") {
    const auto g = vertical_strand({0.3, 0.6}, 0.1);
    const int r = 16, gres = 8;
    const auto code = encode_groom(g, r, gres, kCube);
    code.validate();
    CHECK(code.density(9, 4) == 1.0);
    CHECK(code.density.sum() == 1.0);
    CHECK(std::abs(code.length(9, 4) - 0.1) < 1e-15);
    CHECK(code.length.sum() == code.length(9, 4));

    // Cells overlapped by the vertical segment from the root to the tip.
    const Eigen::Vector3d root = g.strands[0].row(0).transpose();
    const Eigen::Vector3d cell = code.cell_size();
    const int ix = static_cast<int>(std::floor((root.x() + 0.2) / cell.x()));
    const int iy = static_cast<int>(std::floor((root.y() + 0.2) / cell.y()));
    const int z0 = static_cast<int>(std::floor((root.z() + 0.2) / cell.z()));
    const int z1 = static_cast<int>(std::floor((root.z() + 0.1 + 0.2) / cell.z()));
    int nonzero = 0;
    for (int iz = 0; iz < gres; ++iz) {
        for (int iy2 = 0; iy2 < gres; ++iy2) {
            for (int ix2 = 0; ix2 < gres; ++ix2) {
                const Eigen::RowVector3d f = code.flow.row(code.cell_index(ix2, iy2, iz));
                const bool on_path = ix2 == ix && iy2 == iy && iz >= z0 && iz <= z1;
                if (on_path) {
                    CHECK(f == Eigen::RowVector3d(0, 0, 1));
                    ++nonzero;
                } else {
                    CHECK(f.isZero(0.0));
                }
            }
        }
    }
    CHECK(nonzero == z1 - z0 + 1);
}

TEST_CASE("duplicated strands and strand order") {
    const auto one = vertical_strand({0.3, 0.6}, 0.1);
    auto two = one;
    two.strands.push_back(one.strands[0]);
    two.root_uv.push_back(one.root_uv[0]);
    CHECK(code_to_vector(encode_groom(two, 8, 8, kCube)) == code_to_vector(encode_groom(one, 8, 8, kCube)));

    const auto g = combed(11, 60);
    auto shuffled = g;
    std::vector<std::size_t> order(g.strands.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::rotate(order.begin(), order.begin() + 17, order.end());
    for (std::size_t i = 0; i < order.size(); ++i) {
        shuffled.strands[i] = g.strands[order[i]];
        shuffled.root_uv[i] = g.root_uv[order[i]];
    }
    const Bbox box = bounding_box(g, 0.02, true);
    const auto a = code_to_vector(encode_groom(g, 32, 16, box));
    const auto b = code_to_vector(encode_groom(shuffled, 32, 16, box));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode invariants") {
    const auto g = combed(3);
    const Bbox box = bounding_box(g, 0.02, true);
    const auto code = encode_groom(g, 64, 32, box);
    code.validate();
    CHECK(code.density.maxCoeff() == 1.0);
    CHECK((code.length.array() >= 0).all());
    // Thread count does not change a single bit.
    CHECK(code_to_vector(encode_groom(g, 64, 32, box, 4)) == code_to_vector(code));

    CHECK_THROWS_WITH_AS(encode_groom(Groom{}, 8, 8, box), doctest::Contains("EmptyGroom"), Error);
    Bbox small = box;
    small.max.y() -= 0.05;
    CHECK_THROWS_WITH_AS(encode_groom(g, 8, 8, small), doctest::Contains("PointOutsideBbox"), Error);
    CHECK_THROWS_WITH_AS(encode_groom(g, 3, 8, box), doctest::Contains("InvalidParam"), Error);
}

TEST_CASE("flip_groom") {
    const auto g = combed(5);
    const auto f = flip_groom(g);
    const auto ff = flip_groom(f);
    for (std::size_t i = 0; i < g.strands.size(); ++i) {
        CHECK(ff.strands[i] == g.strands[i]);
        CHECK(ff.root_uv[i] == g.root_uv[i]);
        CHECK(arc_length(f.strands[i]) == arc_length(g.strands[i]));
        CHECK(f.root_uv[i].x() == 1.0 - g.root_uv[i].x());
        // The mirrored cap maps the mirrored UV to the mirrored root.
        Eigen::Vector3d mirrored = g.strands[i].row(0).transpose();
        mirrored.x() = -mirrored.x();
        CHECK((f.scalp.position(f.root_uv[i]) - mirrored).norm() < 1e-15);
    }
    CHECK(ff.scalp == g.scalp);

    auto plane = vertical_strand({0.5, 0.2}, 0.05);
    CHECK(plane.strands[0].col(0).isZero(0.0));
    CHECK(flip_groom(plane).strands[0] == plane.strands[0]);
}

TEST_CASE("flip conjugates the encoding") {
    const auto g = combed(8);
    const Bbox box = bounding_box(g, 0.02, true);
    const int r = 32, gres = 16;
    const auto code = encode_groom(g, r, gres, box);
    const auto flipped = encode_groom(flip_groom(g), r, gres, box);
    for (int v = 0; v < r; ++v) {
        for (int u = 0; u < r; ++u) {
            CHECK(flipped.density(v, u) == code.density(v, r - 1 - u));
            CHECK(std::abs(flipped.length(v, u) - code.length(v, r - 1 - u)) < 1e-12);
        }
    }
    for (int iz = 0; iz < gres; ++iz) {
        for (int iy = 0; iy < gres; ++iy) {
            for (int ix = 0; ix < gres; ++ix) {
                Eigen::RowVector3d m = code.flow.row(code.cell_index(gres - 1 - ix, iy, iz));
                m.x() = -m.x();
                CHECK((flipped.flow.row(code.cell_index(ix, iy, iz)) - m).norm() < 1e-12);
            }
        }
    }
}

TEST_CASE("decode_groom") {
    SUBCASE("single vertical strand") {
        const auto g = vertical_strand({0.5, 0.5}, 0.1);
        const auto code = encode_groom(g, 16, 8, kCube);
        const auto dec = decode_groom(code, 1, default_step(code), 1);
        REQUIRE(dec.groom.strands.size() == 1);
        CHECK_FALSE(dec.terminated_early[0]);
        CHECK(endpoint_errors(g, dec.groom)[0] < code.cell_size().norm());
    }

    SUBCASE("uniform upward flow") {
        HairCode code;
        code.uv_resolution = 8;
        code.volume_resolution = 8;
        code.bbox = {Eigen::Vector3d::Constant(-0.5), Eigen::Vector3d::Constant(0.5)};
        code.scalp = z_up_cap();
        code.density = Eigen::MatrixXd::Ones(8, 8);
        code.length = Eigen::MatrixXd::Constant(8, 8, 0.1);
        code.flow = Points::Zero(512, 3);
        code.flow.col(2).setOnes();
        const double step = 0.01;
        const auto dec = decode_groom(code, 50, step, 9);
        for (std::size_t i = 0; i < 50; ++i) {
            const auto& s = dec.groom.strands[i];
            CHECK_FALSE(dec.terminated_early[i]);
            CHECK(s.col(0).cwiseEqual(s(0, 0)).all());
            CHECK(s.col(1).cwiseEqual(s(0, 1)).all());
            CHECK(std::abs(arc_length(s) - 0.1) <= step);
        }
    }

    SUBCASE("determinism, thread independence and errors") {
        const auto g = combed(4);
        const auto code = encode_groom(g, 64, 32, bounding_box(g, 0.02, true));
        const auto a = decode_groom(code, 150, default_step(code), 77);
        const auto b = decode_groom(code, 150, default_step(code), 77, 3);
        for (std::size_t i = 0; i < 150; ++i) {
            CHECK(a.groom.strands[i] == b.groom.strands[i]);
            CHECK(a.groom.root_uv[i] == b.groom.root_uv[i]);
        }
        CHECK(a.terminated_early == b.terminated_early);
        CHECK(decode_groom(code, 150, default_step(code), 78).groom.strands[0] != a.groom.strands[0]);

        HairCode empty = code;
        empty.density.setZero();
        CHECK_THROWS_WITH_AS(decode_groom(empty, 5, default_step(code), 1), doctest::Contains("EmptyDensity"), Error);
        CHECK_THROWS_WITH_AS(decode_groom(code, 5, code.cell_size().minCoeff(), 1),
                             doctest::Contains("InvalidParam"), Error);
    }

    SUBCASE("lengths and roots follow the maps") {
        const auto g = combed(6);
        const auto code = encode_groom(g, 64, 32, bounding_box(g, 0.02, true));
        const double step = default_step(code);
        const auto dec = decode_groom(code, 200, step, 5);
        for (std::size_t i = 0; i < dec.groom.strands.size(); ++i) {
            const int u = static_cast<int>(dec.groom.root_uv[i].x() * 64);
            const int v = static_cast<int>(dec.groom.root_uv[i].y() * 64);
            CHECK(code.density(v, u) > 0.0);
            const double len = arc_length(dec.groom.strands[i]);
            if (dec.terminated_early[i]) {
                CHECK(len < code.length(v, u));
            } else {
                CHECK(std::abs(len - code.length(v, u)) <= step);
            }
        }
        // Same strand count as the source: systematic resampling restores the
        // per-texel counts, so the density map comes back unchanged.
        const auto again = encode_groom(dec.groom, 64, 32, code.bbox);
        const auto deltas = map_deltas(code, again);
        CHECK(deltas.density == 0.0);
        CHECK(deltas.length < 0.1);
    }
}

TEST_CASE("code vectors") {
    CHECK(code_dimension(64, 32) == 2 * 64 * 64 + 3 * 32 * 32 * 32);
    const auto g = combed(2, 80);
    const Bbox box = bounding_box(g, 0.02, true);
    const auto code = encode_groom(g, 16, 8, box);
    const auto v = code_to_vector(code);
    CHECK(static_cast<std::size_t>(v.size()) == code_dimension(16, 8));
    CHECK(v.head(16) == code.density.row(0).transpose());
    const auto back = vector_to_code(v, 16, 8, box, code.style, code.scalp);
    CHECK(back.density == code.density);
    CHECK(back.length == code.length);
    CHECK(back.flow == code.flow);
    CHECK(code_to_vector(back) == v);

    Eigen::VectorXd w = v;
    const Eigen::Index first_flow = 2 * 16 * 16;
    w.segment(first_flow, 3) << 0.0, 2.0, 0.0;
    w.segment(first_flow + 3, 3) << 1e-8, 0.0, 0.0;
    const auto fixed = vector_to_code(w, 16, 8, box);
    CHECK(fixed.flow.row(0) == Eigen::RowVector3d(0, 1, 0));
    CHECK(fixed.flow.row(1).isZero(0.0));
    CHECK_THROWS_WITH_AS(vector_to_code(v.head(v.size() - 1), 16, 8, box), doctest::Contains("DimensionMismatch"),
                         Error);
}

TEST_CASE("full-rank PCA reproduces code vectors") {
    const int n = 6;
    Eigen::MatrixXd samples(n, static_cast<Eigen::Index>(code_dimension(16, 8)));
    const Bbox box{Eigen::Vector3d::Constant(-0.3), Eigen::Vector3d::Constant(0.3)};
    for (int i = 0; i < n; ++i) samples.row(i) = code_to_vector(encode_groom(combed(100 + i, 120), 16, 8, box)).transpose();
    const auto pca = appearance::fit_pca(samples, n - 1);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = samples.row(i).transpose();
        CHECK((appearance::pca_reconstruct(pca, appearance::pca_project(pca, x)) - x).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("endpoint errors") {
    const auto g = combed(1, 30);
    for (double e : endpoint_errors(g, g)) CHECK(e == 0.0);
    auto moved = g;
    for (auto& s : moved.strands) s(s.rows() - 1, 1) += 0.01;
    for (double e : endpoint_errors(g, moved)) CHECK(std::abs(e - 0.01) < 1e-12);
}

TEST_CASE("groom and code files") {
    const auto dir = std::filesystem::temp_directory_path() / "facegen_test_hair";
    std::filesystem::create_directories(dir);
    auto g = combed(9, 40);
    g.style = Style::Beard;
    save_groom(dir / "g.json", g);
    const auto back = load_groom(dir / "g.json");
    CHECK(back.style == Style::Beard);
    CHECK(back.scalp == g.scalp);
    for (std::size_t i = 0; i < g.strands.size(); ++i) {
        CHECK(back.strands[i] == g.strands[i]);
        CHECK(back.root_uv[i] == g.root_uv[i]);
    }
    std::filesystem::create_directories(dir / "again");
    save_groom(dir / "again" / "g.json", back);
    CHECK(io::read_binary_file(dir / "g.json") == io::read_binary_file(dir / "again" / "g.json"));
    CHECK(io::read_binary_file(dir / "g.bin") == io::read_binary_file(dir / "again" / "g.bin"));
    const auto header = nlohmann::json::parse(io::read_text_file(dir / "g.json"));
    CHECK(header.dump().find("\"strands\":40") != std::string::npos);

    const auto code = encode_groom(g, 16, 8, bounding_box(g, 0.01));
    const auto c = to_container(code);
    const auto code_back = hair_code_from_container(io::MatrixContainer::parse(c.manifest_text("c.bin"), c.blob_bytes()));
    CHECK(code_to_vector(code_back) == code_to_vector(code));
    CHECK(code_back.bbox == code.bbox);
    CHECK(code_back.style == Style::Beard);

    Groom bad = g;
    bad.root_uv[0].x() = 1.5;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("InvalidParam"), Error);
    CHECK_THROWS_WITH_AS(style_from_string("mohawk"), doctest::Contains("ParseError"), Error);
    std::filesystem::remove_all(dir);
}
