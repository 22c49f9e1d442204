#include "facegen/hair/groom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "facegen/error.hpp"

namespace facegen::hair {

namespace {

constexpr double kUvGrid = 4294967296.0;  // 2^32

Eigen::Vector3d mirror_x(Eigen::Vector3d v) {
    v.x() = -v.x();
    return v;
}

nlohmann::json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d vec_from_json(const nlohmann::json& j, const char* what) {
    require(j.is_array() && j.size() == 3, ErrorCode::ParseError, std::string(what) + " must be a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string_view to_string(Style style) {
    switch (style) {
        case Style::Scalp: return "scalp";
        case Style::Eyebrow: return "eyebrow";
        case Style::Beard: return "beard";
        case Style::Eyelash: return "eyelash";
    }
    return "scalp";
}

Style style_from_string(std::string_view name) {
    for (Style s : {Style::Scalp, Style::Eyebrow, Style::Beard, Style::Eyelash}) {
        if (to_string(s) == name) return s;
    }
    fail(ErrorCode::ParseError, "unknown groom style '" + std::string(name) + "'");
}

bool Bbox::contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Eigen::Vector3d ScalpCap::position(const Eigen::Vector2d& uv) const { return center + radius * normal(uv); }

Eigen::Vector3d ScalpCap::normal(const Eigen::Vector2d& uv) const {
    const double t = std::tan(half_angle);
    const Eigen::Vector3d forward = right.cross(up);
    return ((2.0 * uv.x() - 1.0) * t * right + up + (2.0 * uv.y() - 1.0) * t * forward).normalized();
}

void ScalpCap::validate() const {
    require(center.allFinite() && std::isfinite(radius) && radius > 0.0, ErrorCode::InvalidParam,
            "scalp cap needs a finite centre and a positive radius");
    require(half_angle > 0.0 && half_angle < 1.5, ErrorCode::InvalidParam, "scalp cap half angle must be in (0, 1.5)");
    require(std::abs(up.norm() - 1.0) < 1e-9 && std::abs(right.norm() - 1.0) < 1e-9 && std::abs(up.dot(right)) < 1e-9,
            ErrorCode::InvalidParam, "scalp cap axes must be orthonormal");
}

nlohmann::json to_json(const ScalpCap& cap) {
    return {{"center", vec_json(cap.center)},
            {"radius", cap.radius},
            {"half_angle", cap.half_angle},
            {"up", vec_json(cap.up)},
            {"right", vec_json(cap.right)}};
}

ScalpCap scalp_from_json(const nlohmann::json& j) {
    ScalpCap cap;
    try {
        cap.center = vec_from_json(j.at("center"), "scalp.center");
        cap.radius = j.at("radius").get<double>();
        cap.half_angle = j.at("half_angle").get<double>();
        cap.up = vec_from_json(j.at("up"), "scalp.up");
        cap.right = vec_from_json(j.at("right"), "scalp.right");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("scalp cap: ") + e.what());
    }
    cap.validate();
    return cap;
}

nlohmann::json to_json(const Bbox& box) { return {{"min", vec_json(box.min)}, {"max", vec_json(box.max)}}; }

Bbox bbox_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("min") && j.contains("max"), ErrorCode::ParseError, "bbox needs min and max");
    return {vec_from_json(j["min"], "bbox.min"), vec_from_json(j["max"], "bbox.max")};
}

double quantize_uv(double u) { return std::clamp(std::round(u * kUvGrid) / kUvGrid, 0.0, 1.0); }

std::size_t Groom::point_count() const {
    std::size_t n = 0;
    for (const auto& s : strands) n += static_cast<std::size_t>(s.rows());
    return n;
}

void Groom::validate() const {
    require(strands.size() == root_uv.size(), ErrorCode::InvalidParam, "groom needs one root UV per strand");
    for (std::size_t i = 0; i < strands.size(); ++i) {
        require(strands[i].rows() >= 2, ErrorCode::InvalidParam,
                "strand " + std::to_string(i) + " has fewer than 2 points");
        require(strands[i].allFinite(), ErrorCode::InvalidParam, "strand " + std::to_string(i) + " is not finite");
        const auto& uv = root_uv[i];
        require(uv.allFinite() && (uv.array() >= 0.0).all() && (uv.array() <= 1.0).all(), ErrorCode::InvalidParam,
                "root UV of strand " + std::to_string(i) + " is outside the unit square");
    }
    scalp.validate();
}

double arc_length(const Points& strand) {
    double len = 0.0;
    for (Eigen::Index i = 1; i < strand.rows(); ++i) len += (strand.row(i) - strand.row(i - 1)).norm();
    return len;
}

Groom flip_groom(const Groom& groom) {
    Groom out = groom;
    for (auto& s : out.strands) s.col(0) = -s.col(0);
    for (auto& uv : out.root_uv) uv.x() = 1.0 - quantize_uv(uv.x());
    out.scalp.center = mirror_x(groom.scalp.center);
    out.scalp.up = mirror_x(groom.scalp.up);
    out.scalp.right = -mirror_x(groom.scalp.right);
    return out;
}

Bbox bounding_box(const Groom& groom, double margin, bool symmetric_x) {
    require(groom.point_count() > 0, ErrorCode::EmptyGroom, "groom has no points");
    Bbox box{Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity()),
             Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity())};
    for (const auto& s : groom.strands) {
        box.min = box.min.cwiseMin(s.colwise().minCoeff().transpose());
        box.max = box.max.cwiseMax(s.colwise().maxCoeff().transpose());
    }
    box.min.array() -= margin;
    box.max.array() += margin;
    if (symmetric_x) {
        const double x = std::max(std::abs(box.min.x()), std::abs(box.max.x()));
        box.min.x() = -x;
        box.max.x() = x;
    }
    return box;
}

Groom procedural_groom(sampling::Rng& rng, const ScalpCap& scalp, const ProceduralGroomOptions& options) {
    scalp.validate();
    require(options.strands >= 1 && options.segments >= 1, ErrorCode::InvalidParam,
            "procedural groom needs at least one strand and one segment");
    require(options.uv_margin >= 0.0 && options.uv_margin < 0.5, ErrorCode::InvalidParam,
            "uv_margin must be in [0, 0.5)");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    require(options.length_scale > 0.0, ErrorCode::InvalidParam, "length_scale must be positive");
    const double base_length = options.length_scale * between(0.05, 0.12);
    const double length_slope = between(-0.3, 0.3);
    const double lift = between(1.0, 2.0);
    const double lift_decay = between(0.01, 0.03);
    const Eigen::Vector3d forward = scalp.right.cross(scalp.up);
    const Eigen::Vector3d comb =
        (-between(0.5, 2.0) * scalp.up - between(-0.5, 1.0) * forward + between(-0.5, 0.5) * scalp.right).normalized();

    // Strands are streamlines of one field, so they never cross: a push along
    // the cap normal that fades with height, plus a constant combing direction.
    auto field = [&](const Eigen::Vector3d& p) -> Eigen::Vector3d {
        const Eigen::Vector3d q = p - scalp.center;
        const double height = std::max(q.norm() - scalp.radius, 0.0);
        return (lift * std::exp(-height / lift_decay) * q.normalized() + comb).normalized();
    };

    Groom g;
    g.style = options.style;
    g.scalp = scalp;
    const double m = options.uv_margin;
    for (int i = 0; i < options.strands; ++i) {
        const Eigen::Vector2d uv(quantize_uv(between(m, 1.0 - m)), quantize_uv(between(m, 1.0 - m)));
        const double h = base_length * (1.0 + length_slope * (2.0 * uv.y() - 1.0)) / options.segments;
        Points strand(options.segments + 1, 3);
        Eigen::Vector3d p = scalp.position(uv);
        strand.row(0) = p.transpose();
        for (int k = 0; k < options.segments; ++k) {
            p += h * field(p + 0.5 * h * field(p));
            strand.row(k + 1) = p.transpose();
        }
        g.strands.push_back(std::move(strand));
        g.root_uv.push_back(uv);
    }
    return g;
}

io::MatrixContainer to_container(const Groom& groom) {
    groom.validate();
    std::vector<double> points, offsets{0.0}, uvs;
    points.reserve(groom.point_count() * 3);
    for (std::size_t i = 0; i < groom.strands.size(); ++i) {
        const auto& s = groom.strands[i];
        points.insert(points.end(), s.data(), s.data() + s.size());
        offsets.push_back(offsets.back() + static_cast<double>(s.rows()));
        uvs.push_back(groom.root_uv[i].x());
        uvs.push_back(groom.root_uv[i].y());
    }
    io::MatrixContainer c;
    c.add("groom.points", {groom.point_count(), 3}, points);
    c.add("groom.offsets", {offsets.size()}, offsets);
    c.add("groom.root_uv", {groom.strands.size(), 2}, uvs);
    auto& a = c.attributes();
    a["kind"] = "groom";
    a["version"] = 1;
    a["style"] = std::string(to_string(groom.style));
    a["counts"] = {{"strands", groom.strands.size()}, {"points", groom.point_count()}};
    a["bbox"] = groom.strands.empty() ? nlohmann::json(nullptr) : to_json(bounding_box(groom, 0.0));
    a["scalp"] = to_json(groom.scalp);
    return c;
}

Groom groom_from_container(const io::MatrixContainer& c) {
    const auto& a = c.attributes();
    require(a.value("kind", "") == "groom", ErrorCode::ParseError, "container does not hold a groom");
    require(a.contains("style") && a.contains("scalp"), ErrorCode::ParseError, "groom header needs style and scalp");
    Groom g;
    g.style = style_from_string(a["style"].get<std::string>());
    g.scalp = scalp_from_json(a["scalp"]);
    const auto& offsets = c.get("groom.offsets");
    require(offsets.shape.size() == 1 && !offsets.data.empty(), ErrorCode::ParseError, "groom.offsets must be 1-D");
    const std::size_t strands = offsets.data.size() - 1;
    const auto& uv = c.get("groom.root_uv", std::array<std::size_t, 2>{strands, 2});
    const auto& pts = c.get("groom.points");
    require(pts.shape.size() == 2 && pts.shape[1] == 3, ErrorCode::ParseError, "groom.points must be P x 3");
    require(offsets.data.front() == 0.0 && offsets.data.back() == static_cast<double>(pts.shape[0]),
            ErrorCode::ParseError, "groom.offsets do not cover groom.points");
    for (std::size_t i = 0; i < strands; ++i) {
        const double lo = offsets.data[i], hi = offsets.data[i + 1];
        require(hi >= lo + 2.0 && lo == std::floor(lo), ErrorCode::ParseError,
                "groom.offsets must be integral and increase by at least 2");
        const auto begin = static_cast<std::size_t>(lo), count = static_cast<std::size_t>(hi - lo);
        Points s(static_cast<Eigen::Index>(count), 3);
        std::copy_n(pts.data.begin() + static_cast<std::ptrdiff_t>(begin * 3), count * 3, s.data());
        g.strands.push_back(std::move(s));
        g.root_uv.emplace_back(uv.data[2 * i], uv.data[2 * i + 1]);
    }
    if (a.contains("counts")) {
        require(a["counts"].value("strands", strands) == strands, ErrorCode::ParseError,
                "groom header strand count disagrees with the data");
    }
    g.validate();
    return g;
}

void save_groom(const std::filesystem::path& path, const Groom& groom) { to_container(groom).save(path); }

Groom load_groom(const std::filesystem::path& path) { return groom_from_container(io::MatrixContainer::load(path)); }

}  // namespace facegen::hair
