#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "facegen/io/matrix_container.hpp"
#include "facegen/mesh/quad_mesh.hpp"
#include "facegen/sampling/rng.hpp"

namespace facegen::hair {

enum class Style { Scalp, Eyebrow, Beard, Eyelash };

std::string_view to_string(Style style);
/// Throws ParseError on an unknown name.
Style style_from_string(std::string_view name);

struct Bbox {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();

    bool contains(const Eigen::Vector3d& p) const;
    Eigen::Vector3d extent() const { return max - min; }
    bool operator==(const Bbox&) const = default;
};

/// Maps root UVs onto a spherical cap by central projection of the square
/// [-tan h, tan h]^2 placed one radius above the centre along `up`. The u
/// axis runs along `right`, the v axis along `right x up`.
struct ScalpCap {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 0.1;
    double half_angle = 1.0;
    Eigen::Vector3d up = Eigen::Vector3d::UnitY();
    Eigen::Vector3d right = Eigen::Vector3d::UnitX();

    Eigen::Vector3d position(const Eigen::Vector2d& uv) const;
    Eigen::Vector3d normal(const Eigen::Vector2d& uv) const;
    void validate() const;
    bool operator==(const ScalpCap&) const = default;
};

nlohmann::json to_json(const ScalpCap& cap);
ScalpCap scalp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Bbox& box);
Bbox bbox_from_json(const nlohmann::json& j);

/// Root UVs are kept on a 2^-32 grid so the mirror u -> 1 - u is exact.
double quantize_uv(double u);

struct Groom {
    Style style = Style::Scalp;
    /// Each polyline runs root to tip and has at least 2 points.
    std::vector<Points> strands;
    std::vector<Eigen::Vector2d> root_uv;
    ScalpCap scalp;

    std::size_t point_count() const;
    /// Throws InvalidParam on short strands, non-finite points or UVs outside
    /// the unit square.
    void validate() const;
};

double arc_length(const Points& strand);

/// Mirrors x -> -x and u -> 1 - u (the scalp cap is mirrored too).
Groom flip_groom(const Groom& groom);

/// Tight box around every point, grown by `margin` on each side. With
/// `symmetric_x` the x range is widened to be symmetric about 0.
Bbox bounding_box(const Groom& groom, double margin, bool symmetric_x = false);

struct ProceduralGroomOptions {
    int strands = 200;
    int segments = 16;
    Style style = Style::Scalp;
    /// Roots are drawn uniformly from [uv_margin, 1 - uv_margin]^2.
    double uv_margin = 0.1;
    /// Multiplies the drawn strand lengths (0.05 to 0.12 m before scaling).
    double length_scale = 1.0;
};

/// A combed synthetic hairstyle. Strands are midpoint-rule streamlines of a
/// per-groom field that lifts them off the cap and then combs them down.
Groom procedural_groom(sampling::Rng& rng, const ScalpCap& scalp, const ProceduralGroomOptions& options = {});

io::MatrixContainer to_container(const Groom& groom);
Groom groom_from_container(const io::MatrixContainer& container);
/// JSON header (style, counts, bbox, scalp, tensor table) plus a .bin blob.
void save_groom(const std::filesystem::path& path, const Groom& groom);
Groom load_groom(const std::filesystem::path& path);

}  // namespace facegen::hair
