#include "facegen/model/model_io.hpp"

#include <cmath>

#include "facegen/error.hpp"

namespace facegen::model {

void add_mesh(io::MatrixContainer& c, const std::string& prefix, const QuadMesh& mesh) {
    const auto nv = static_cast<std::size_t>(mesh.vertex_count());
    const auto nf = static_cast<std::size_t>(mesh.face_count());
    c.add(prefix + ".vertices", {nv, 3}, std::span<const double>(mesh.vertices.data(), nv * 3));
    std::vector<double> quads;
    quads.reserve(nf * 4);
    for (const Quad& q : mesh.quads) quads.insert(quads.end(), q.begin(), q.end());
    c.add(prefix + ".quads", {nf, 4}, quads);
    if (mesh.has_uvs()) {
        std::vector<double> uvs;
        uvs.reserve(nf * 8);
        for (const QuadUvs& uv : mesh.uvs) {
            for (const auto& t : uv) uvs.insert(uvs.end(), {t.x(), t.y()});
        }
        c.add(prefix + ".uvs", {nf, 4, 2}, uvs);
    }
}

QuadMesh read_mesh(const io::MatrixContainer& c, const std::string& prefix) {
    QuadMesh mesh;
    const auto& v = c.get(prefix + ".vertices");
    require(v.shape.size() == 2 && v.shape[1] == 3, ErrorCode::DimensionMismatch, prefix + ".vertices must be V x 3");
    mesh.vertices = Eigen::Map<const Points>(v.data.data(), static_cast<Eigen::Index>(v.shape[0]), 3);
    const auto& q = c.get(prefix + ".quads");
    require(q.shape.size() == 2 && q.shape[1] == 4, ErrorCode::DimensionMismatch, prefix + ".quads must be F x 4");
    mesh.quads.resize(q.shape[0]);
    for (std::size_t f = 0; f < q.shape[0]; ++f) {
        for (int i = 0; i < 4; ++i) {
            const double idx = q.data[f * 4 + i];
            require(idx == std::floor(idx), ErrorCode::ParseError, prefix + ".quads holds a non-integer index");
            mesh.quads[f][i] = static_cast<int>(idx);
        }
    }
    if (c.contains(prefix + ".uvs")) {
        const std::size_t shape[] = {q.shape[0], 4, 2};
        const auto& uv = c.get(prefix + ".uvs", shape);
        mesh.uvs.resize(q.shape[0]);
        for (std::size_t f = 0; f < q.shape[0]; ++f) {
            for (int i = 0; i < 4; ++i) mesh.uvs[f][i] = {uv.data[f * 8 + 2 * i], uv.data[f * 8 + 2 * i + 1]};
        }
    }
    mesh.validate();
    return mesh;
}

io::MatrixContainer to_container(const BlendshapeModel& model) {
    model.validate();
    io::MatrixContainer c;
    const auto nv = static_cast<std::size_t>(model.vertex_count());
    const auto m = static_cast<std::size_t>(model.identity_dim());
    const auto ne = static_cast<std::size_t>(model.expression_dim());
    auto& attrs = c.attributes();
    attrs["kind"] = "blendshape_model";
    attrs["model_version"] = kModelFormatVersion;
    attrs["euler_order"] = "XYZ intrinsic";
    attrs["joints"] = nlohmann::json::array();
    for (const auto& j : model.skeleton.joints) attrs["joints"].push_back(j.name);

    add_mesh(c, "template", model.template_mesh);
    c.add("identity_basis", {m, nv, 3}, std::span<const double>(model.identity_basis.data(), m * nv * 3));
    c.add("expression_basis", {ne, nv, 3}, std::span<const double>(model.expression_basis.data(), ne * nv * 3));
    c.add("skinning_weights", {nv, 4}, std::span<const double>(model.skinning_weights.data(), nv * 4));

    std::vector<double> t0, a, limits;
    for (const auto& j : model.skeleton.joints) {
        t0.insert(t0.end(), j.template_translation.data(), j.template_translation.data() + 3);
        for (int r = 0; r < 3; ++r) {
            for (std::size_t k = 0; k < m; ++k) a.push_back(j.identity_offset(r, static_cast<Eigen::Index>(k)));
        }
        for (const auto& l : j.rotation_limits) limits.insert(limits.end(), {l.min, l.max});
    }
    c.add("skeleton.t0", {4, 3}, t0);
    c.add("skeleton.a", {4, 3, m}, a);
    c.add("skeleton.limits", {4, 3, 2}, limits);
    return c;
}

BlendshapeModel from_container(const io::MatrixContainer& c) {
    const auto& attrs = c.attributes();
    require(attrs.contains("model_version"), ErrorCode::ParseError, "model container lacks model_version");
    require(attrs["model_version"] == kModelFormatVersion, ErrorCode::ParseError, "unsupported model_version");

    BlendshapeModel model;
    model.template_mesh = read_mesh(c, "template");
    const auto nv = static_cast<std::size_t>(model.vertex_count());

    const auto& id = c.get("identity_basis");
    require(id.shape.size() == 3 && id.shape[1] == nv && id.shape[2] == 3, ErrorCode::DimensionMismatch,
            "identity_basis must be m x V x 3");
    const auto m = id.shape[0];
    model.identity_basis = Eigen::Map<const Basis>(id.data.data(), static_cast<Eigen::Index>(m),
                                                   static_cast<Eigen::Index>(nv * 3));
    const auto& ex = c.get("expression_basis");
    require(ex.shape.size() == 3 && ex.shape[1] == nv && ex.shape[2] == 3, ErrorCode::DimensionMismatch,
            "expression_basis must be n x V x 3");
    model.expression_basis = Eigen::Map<const Basis>(ex.data.data(), static_cast<Eigen::Index>(ex.shape[0]),
                                                     static_cast<Eigen::Index>(nv * 3));
    const std::size_t wshape[] = {nv, 4};
    const auto& w = c.get("skinning_weights", wshape);
    model.skinning_weights = Eigen::Map<const SkinningWeights>(w.data.data(), static_cast<Eigen::Index>(nv), 4);

    const std::size_t tshape[] = {4, 3};
    const std::size_t ashape[] = {4, 3, m};
    const std::size_t lshape[] = {4, 3, 2};
    const auto& t0 = c.get("skeleton.t0", tshape);
    const auto& a = c.get("skeleton.a", ashape);
    const auto& limits = c.get("skeleton.limits", lshape);
    std::vector<std::string> names = {"neck", "jaw", "eye_left", "eye_right"};
    if (attrs.contains("joints")) names = attrs["joints"].get<std::vector<std::string>>();
    require(names.size() == kJointCount, ErrorCode::ParseError, "model must name exactly 4 joints");
    for (int j = 0; j < kJointCount; ++j) {
        auto& rec = model.skeleton.joints[j];
        rec.name = names[j];
        rec.parent = j == kNeck ? -1 : kNeck;
        rec.template_translation = Eigen::Vector3d(t0.data[3 * j], t0.data[3 * j + 1], t0.data[3 * j + 2]);
        rec.identity_offset.resize(3, static_cast<Eigen::Index>(m));
        for (int r = 0; r < 3; ++r) {
            for (std::size_t k = 0; k < m; ++k) {
                rec.identity_offset(r, static_cast<Eigen::Index>(k)) = a.data[(j * 3 + r) * m + k];
            }
        }
        for (int ax = 0; ax < 3; ++ax) {
            rec.rotation_limits[ax] = {limits.data[(j * 3 + ax) * 2], limits.data[(j * 3 + ax) * 2 + 1]};
        }
    }
    model.validate();
    return model;
}

void save_model(const std::filesystem::path& manifest, const BlendshapeModel& model) {
    to_container(model).save(manifest);
}

BlendshapeModel load_model(const std::filesystem::path& manifest) {
    return from_container(io::MatrixContainer::load(manifest));
}

}  // namespace facegen::model
