#include "facegen/hair/hair_code.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "facegen/error.hpp"
#include "facegen/util/parallel.hpp"

namespace facegen::hair {

namespace {

int texel(double u, int resolution) {
    return std::clamp(static_cast<int>(std::floor(u * resolution)), 0, resolution - 1);
}

Eigen::Vector3i cell_of(const HairCode& code, const Eigen::Vector3d& p) {
    const Eigen::Vector3d f = (p - code.bbox.min).cwiseQuotient(code.cell_size());
    Eigen::Vector3i c;
    for (int a = 0; a < 3; ++a) c(a) = std::clamp(static_cast<int>(std::floor(f(a))), 0, code.volume_resolution - 1);
    return c;
}

void check_resolutions(int r, int g) {
    require(r >= 4 && g >= 4, ErrorCode::InvalidParam, "hair code resolutions must be at least 4");
}

void check_bbox(const Bbox& box) {
    require(box.min.allFinite() && box.max.allFinite() && (box.max.array() > box.min.array()).all(),
            ErrorCode::InvalidParam, "bbox must be finite with max > min on every axis");
}

std::vector<double> row_major(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
}

double relative_delta(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double ref = a.norm();
    const double diff = (a - b).norm();
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / ref;
}

// Flow samples of one strand: (cell row, unit root-to-tip segment direction).
using FlowSamples = std::vector<std::pair<int, Eigen::Vector3d>>;

FlowSamples rasterize(const HairCode& code, const Points& strand, double spacing) {
    FlowSamples out;
    const Eigen::Index segments = strand.rows() - 1;
    std::vector<double> start(static_cast<std::size_t>(segments) + 1, 0.0);
    for (Eigen::Index j = 0; j < segments; ++j) {
        start[j + 1] = start[j] + (strand.row(j + 1) - strand.row(j)).norm();
    }
    const double total = start.back();
    if (total == 0.0) return out;
    auto emit = [&](Eigen::Index j, double s) {
        const Eigen::Vector3d a = strand.row(j).transpose(), b = strand.row(j + 1).transpose();
        const double len = start[j + 1] - start[j];
        const Eigen::Vector3d p = a + ((s - start[j]) / len) * (b - a);
        const Eigen::Vector3i c = cell_of(code, p);
        out.emplace_back(code.cell_index(c.x(), c.y(), c.z()), (b - a) / len);
    };
    Eigen::Index j = 0;
    const auto steps = static_cast<long>(std::floor(total / spacing));
    for (long k = 0; k <= steps; ++k) {
        const double s = static_cast<double>(k) * spacing;
        while (j < segments - 1 && (start[j + 1] <= s || start[j + 1] == start[j])) ++j;
        if (start[j + 1] == start[j]) break;
        emit(j, s);
    }
    if (static_cast<double>(steps) * spacing < total) {
        Eigen::Index last = segments - 1;
        while (start[last + 1] == start[last]) --last;
        emit(last, total);
    }
    return out;
}

}  // namespace

Eigen::Vector3d HairCode::cell_size() const { return bbox.extent() / static_cast<double>(volume_resolution); }

void HairCode::validate() const {
    require(uv_resolution >= 1 && volume_resolution >= 1, ErrorCode::InvalidParam, "hair code resolutions must be positive");
    check_bbox(bbox);
    const auto g3 = static_cast<Eigen::Index>(volume_resolution) * volume_resolution * volume_resolution;
    require(density.rows() == uv_resolution && density.cols() == uv_resolution && length.rows() == uv_resolution &&
                length.cols() == uv_resolution && flow.rows() == g3,
            ErrorCode::DimensionMismatch, "hair code maps do not match their resolutions");
    require(density.allFinite() && (density.array() >= 0.0).all(), ErrorCode::InvalidParam,
            "density map must be finite and non-negative");
    require(length.allFinite() && (length.array() >= 0.0).all(), ErrorCode::InvalidParam,
            "length map must be finite and non-negative");
    for (Eigen::Index i = 0; i < g3; ++i) {
        const double n = flow.row(i).norm();
        require(n == 0.0 || std::abs(n - 1.0) <= 1e-6, ErrorCode::InvalidParam,
                "flow cell " + std::to_string(i) + " is neither zero nor unit length");
    }
    scalp.validate();
}

HairCode encode_groom(const Groom& groom, int uv_resolution, int volume_resolution, const Bbox& bbox, int threads) {
    check_resolutions(uv_resolution, volume_resolution);
    check_bbox(bbox);
    require(!groom.strands.empty(), ErrorCode::EmptyGroom, "groom has no strands");
    groom.validate();
    for (std::size_t i = 0; i < groom.strands.size(); ++i) {
        const auto& s = groom.strands[i];
        for (Eigen::Index k = 0; k < s.rows(); ++k) {
            require(bbox.contains(s.row(k).transpose()), ErrorCode::PointOutsideBbox,
                    "point " + std::to_string(k) + " of strand " + std::to_string(i) + " lies outside the volume");
        }
    }

    HairCode code;
    code.uv_resolution = uv_resolution;
    code.volume_resolution = volume_resolution;
    code.bbox = bbox;
    code.style = groom.style;
    code.scalp = groom.scalp;
    code.density = Eigen::MatrixXd::Zero(uv_resolution, uv_resolution);
    code.length = Eigen::MatrixXd::Zero(uv_resolution, uv_resolution);
    const auto g3 = static_cast<Eigen::Index>(volume_resolution) * volume_resolution * volume_resolution;
    code.flow = Points::Zero(g3, 3);

    for (std::size_t i = 0; i < groom.strands.size(); ++i) {
        const int u = texel(groom.root_uv[i].x(), uv_resolution), v = texel(groom.root_uv[i].y(), uv_resolution);
        code.density(v, u) += 1.0;
        code.length(v, u) += arc_length(groom.strands[i]);
    }
    for (Eigen::Index v = 0; v < uv_resolution; ++v) {
        for (Eigen::Index u = 0; u < uv_resolution; ++u) {
            if (code.density(v, u) > 0.0) code.length(v, u) /= code.density(v, u);
        }
    }
    code.density /= code.density.maxCoeff();

    const double spacing = 0.5 * code.cell_size().minCoeff();
    std::vector<FlowSamples> samples(groom.strands.size());
    parallel_for(static_cast<int>(groom.strands.size()), threads,
                 [&](int i) { samples[i] = rasterize(code, groom.strands[i], spacing); });
    for (const auto& strand_samples : samples) {
        for (const auto& [cell, dir] : strand_samples) code.flow.row(cell) += dir.transpose();
    }
    for (Eigen::Index i = 0; i < g3; ++i) {
        const double n = code.flow.row(i).norm();
        if (n > 1e-9) {
            code.flow.row(i) /= n;
        } else {
            code.flow.row(i).setZero();
        }
    }
    return code;
}

double default_step(const HairCode& code) { return 0.25 * code.cell_size().minCoeff(); }

Eigen::Vector3d sample_flow(const HairCode& code, const Eigen::Vector3d& p) {
    const int g = code.volume_resolution;
    const Eigen::Vector3d f = (p - code.bbox.min).cwiseQuotient(code.cell_size()).array() - 0.5;
    std::array<int, 3> i0{};
    std::array<double, 3> t{};
    for (int a = 0; a < 3; ++a) {
        const double x = std::clamp(f(a), 0.0, static_cast<double>(g - 1));
        i0[a] = std::min(static_cast<int>(std::floor(x)), g - 2);
        t[a] = x - i0[a];
    }
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) * (dz ? t[2] : 1.0 - t[2]);
                if (w == 0.0) continue;
                out += w * code.flow.row(code.cell_index(i0[0] + dx, i0[1] + dy, i0[2] + dz)).transpose();
            }
        }
    }
    return out;
}

DecodedGroom decode_groom(const HairCode& code, int n_strands, double step, std::uint64_t seed, int threads) {
    code.validate();
    require(n_strands >= 1, ErrorCode::InvalidParam, "decode needs at least one strand");
    require(std::isfinite(step) && step > 0.0 && step < code.cell_size().minCoeff(), ErrorCode::InvalidParam,
            "step must be positive and smaller than a volume cell");
    const int r = code.uv_resolution;
    const std::vector<double> weights = row_major(code.density);
    double total = 0.0;
    for (double w : weights) total += w;
    require(total > 0.0, ErrorCode::EmptyDensity, "density map is all zero");

    // Systematic resampling: one uniform offset, n evenly spaced pointers.
    sampling::Rng master(seed);
    const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(master);
    std::vector<int> root_texel(static_cast<std::size_t>(n_strands));
    {
        std::size_t t = 0;
        double cumulative = weights[0];
        for (int k = 0; k < n_strands; ++k) {
            const double target = (k + offset) / n_strands * total;
            while (cumulative <= target && t + 1 < weights.size()) cumulative += weights[++t];
            while (weights[t] == 0.0 && t > 0) --t;
            root_texel[k] = static_cast<int>(t);
        }
    }

    DecodedGroom out;
    out.groom.style = code.style;
    out.groom.scalp = code.scalp;
    out.groom.strands.resize(static_cast<std::size_t>(n_strands));
    out.groom.root_uv.resize(static_cast<std::size_t>(n_strands));
    std::vector<char> early(static_cast<std::size_t>(n_strands), 0);

    parallel_for(n_strands, threads, [&](int k) {
        auto rng = sampling::make_stream(seed, static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> jitter(0.0, 1.0);
        const int iu = root_texel[k] % r, iv = root_texel[k] / r;
        auto place = [&](int index) {
            double x = quantize_uv((index + jitter(rng)) / r);
            if (texel(x, r) < index) x += 1.0 / 4294967296.0;
            if (texel(x, r) > index) x -= 1.0 / 4294967296.0;
            return x;
        };
        const double u = place(iu);
        const double v = place(iv);
        const Eigen::Vector2d uv(u, v);

        std::vector<Eigen::Vector3d> pts{code.scalp.position(uv)};
        double remaining = code.length(iv, iu);
        bool stopped = false;
        while (remaining > 0.0) {
            const Eigen::Vector3d d = sample_flow(code, pts.back());
            const double n = d.norm();
            if (!code.bbox.contains(pts.back()) || n < 1e-6) {
                stopped = true;
                break;
            }
            const double h = std::min(step, remaining);
            const Eigen::Vector3d next = pts.back() + (h / n) * d;
            if (!code.bbox.contains(next)) {
                stopped = true;
                break;
            }
            pts.push_back(next);
            remaining -= h;
        }
        if (pts.size() < 2) pts.push_back(pts.front());
        Points strand(static_cast<Eigen::Index>(pts.size()), 3);
        for (std::size_t i = 0; i < pts.size(); ++i) strand.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
        out.groom.strands[k] = std::move(strand);
        out.groom.root_uv[k] = uv;
        early[k] = stopped ? 1 : 0;
    });
    out.terminated_early.assign(early.begin(), early.end());
    return out;
}

std::size_t code_dimension(int uv_resolution, int volume_resolution) {
    const auto r = static_cast<std::size_t>(uv_resolution), g = static_cast<std::size_t>(volume_resolution);
    return 2 * r * r + 3 * g * g * g;
}

Eigen::VectorXd code_to_vector(const HairCode& code) {
    code.validate();
    Eigen::VectorXd v(static_cast<Eigen::Index>(code_dimension(code.uv_resolution, code.volume_resolution)));
    Eigen::Index k = 0;
    for (const auto* map : {&code.density, &code.length}) {
        for (double x : row_major(*map)) v(k++) = x;
    }
    v.tail(code.flow.size()) = code.flow.reshaped<Eigen::RowMajor>();
    return v;
}

HairCode vector_to_code(const Eigen::VectorXd& v, int uv_resolution, int volume_resolution, const Bbox& bbox,
                        Style style, const ScalpCap& scalp) {
    require(uv_resolution >= 1 && volume_resolution >= 1, ErrorCode::InvalidParam, "resolutions must be positive");
    const auto d = code_dimension(uv_resolution, volume_resolution);
    require(static_cast<std::size_t>(v.size()) == d, ErrorCode::DimensionMismatch,
            "hair code vector has " + std::to_string(v.size()) + " entries, expected " + std::to_string(d));
    HairCode code;
    code.uv_resolution = uv_resolution;
    code.volume_resolution = volume_resolution;
    code.bbox = bbox;
    code.style = style;
    code.scalp = scalp;
    const Eigen::Index r2 = static_cast<Eigen::Index>(uv_resolution) * uv_resolution;
    code.density = v.segment(0, r2).reshaped<Eigen::RowMajor>(uv_resolution, uv_resolution);
    code.length = v.segment(r2, r2).reshaped<Eigen::RowMajor>(uv_resolution, uv_resolution);
    const Eigen::Index g3 = static_cast<Eigen::Index>(volume_resolution) * volume_resolution * volume_resolution;
    code.flow = v.tail(3 * g3).reshaped<Eigen::RowMajor>(g3, 3);
    for (Eigen::Index i = 0; i < g3; ++i) {
        const double n = code.flow.row(i).norm();
        if (n < 1e-6) {
            code.flow.row(i).setZero();
        } else if (std::abs(n - 1.0) > 1e-12) {
            code.flow.row(i) /= n;
        }
    }
    code.validate();
    return code;
}

MapDeltas map_deltas(const HairCode& reference, const HairCode& other) {
    require(reference.uv_resolution == other.uv_resolution, ErrorCode::DimensionMismatch,
            "hair codes have different UV resolutions");
    return {relative_delta(reference.density, other.density), relative_delta(reference.length, other.length)};
}

std::vector<double> endpoint_errors(const Groom& reference, const Groom& other) {
    require(!other.strands.empty(), ErrorCode::EmptyGroom, "comparison groom has no strands");
    std::vector<double> out;
    out.reserve(reference.strands.size());
    for (const auto& s : reference.strands) {
        const Eigen::RowVector3d root = s.row(0);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < other.strands.size(); ++j) {
            const double d = (other.strands[j].row(0) - root).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        const auto& o = other.strands[best];
        out.push_back((o.row(o.rows() - 1) - s.row(s.rows() - 1)).norm());
    }
    return out;
}

io::MatrixContainer to_container(const HairCode& code) {
    code.validate();
    const auto r = static_cast<std::size_t>(code.uv_resolution), g = static_cast<std::size_t>(code.volume_resolution);
    io::MatrixContainer c;
    c.add("hair.density", {r, r}, row_major(code.density));
    c.add("hair.length", {r, r}, row_major(code.length));
    c.add("hair.flow", {g, g, g, 3}, std::span<const double>(code.flow.data(), static_cast<std::size_t>(code.flow.size())));
    auto& a = c.attributes();
    a["kind"] = "hair_code";
    a["version"] = 1;
    a["style"] = std::string(to_string(code.style));
    a["bbox"] = to_json(code.bbox);
    a["scalp"] = to_json(code.scalp);
    a["layout"] = "flow cell (ix, iy, iz) at [iz][iy][ix]";
    return c;
}

HairCode hair_code_from_container(const io::MatrixContainer& c) {
    const auto& a = c.attributes();
    require(a.value("kind", "") == "hair_code", ErrorCode::ParseError, "container does not hold a hair code");
    const auto& dens = c.get("hair.density");
    require(dens.shape.size() == 2 && dens.shape[0] == dens.shape[1], ErrorCode::ParseError,
            "hair.density must be square");
    const auto& flow = c.get("hair.flow");
    require(flow.shape.size() == 4 && flow.shape[0] == flow.shape[1] && flow.shape[1] == flow.shape[2] &&
                flow.shape[3] == 3,
            ErrorCode::ParseError, "hair.flow must be G x G x G x 3");
    const std::size_t r = dens.shape[0], g = flow.shape[0];
    const auto& len = c.get("hair.length", std::array<std::size_t, 2>{r, r});
    HairCode code;
    code.uv_resolution = static_cast<int>(r);
    code.volume_resolution = static_cast<int>(g);
    require(a.contains("bbox") && a.contains("scalp") && a.contains("style"), ErrorCode::ParseError,
            "hair code header needs bbox, scalp and style");
    code.bbox = bbox_from_json(a["bbox"]);
    code.scalp = scalp_from_json(a["scalp"]);
    code.style = style_from_string(a["style"].get<std::string>());
    code.density = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        dens.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
    code.length = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        len.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
    code.flow = Eigen::Map<const Points>(flow.data.data(), static_cast<Eigen::Index>(g * g * g), 3);
    code.validate();
    return code;
}

}  // namespace facegen::hair
