#include "facegen/mesh/obj_io.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"

namespace facegen {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (value == 0.0) return "0";  // folds -0
    return std::string(buf, res.ptr);
}

std::string write_obj(const QuadMesh& mesh) {
    const NamedMesh one{"", &mesh};
    return write_obj(std::span<const NamedMesh>(&one, 1));
}

std::string write_obj(std::span<const NamedMesh> meshes) {
    std::string out;
    int vertex_base = 1;
    int uv_base = 1;
    for (const auto& [name, mesh] : meshes) {
        if (!name.empty()) out += "o " + name + "\n";
        for (int v = 0; v < mesh->vertex_count(); ++v) {
            out += "v " + format_double(mesh->vertices(v, 0)) + " " + format_double(mesh->vertices(v, 1)) + " " +
                   format_double(mesh->vertices(v, 2)) + "\n";
        }
        for (const QuadUvs& uv : mesh->uvs) {
            for (const auto& t : uv) out += "vt " + format_double(t.x()) + " " + format_double(t.y()) + "\n";
        }
        for (int f = 0; f < mesh->face_count(); ++f) {
            out += "f";
            for (int i = 0; i < 4; ++i) {
                out += " " + std::to_string(mesh->quads[f][i] + vertex_base);
                if (mesh->has_uvs()) out += "/" + std::to_string(uv_base + 4 * f + i);
            }
            out += "\n";
        }
        vertex_base += mesh->vertex_count();
        uv_base += static_cast<int>(mesh->uvs.size()) * 4;
    }
    return out;
}

namespace {

double parse_number(const std::string& token, int line) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + token + "'");
    }
    return v;
}

int parse_index(const std::string& token, int count, int line) {
    int v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad index '" + token + "'");
    }
    // Negative indices are relative to the end of the list so far.
    const int idx = v < 0 ? count + v : v - 1;
    require(idx >= 0 && idx < count, ErrorCode::ParseError,
            "line " + std::to_string(line) + ": index " + token + " out of range");
    return idx;
}

}  // namespace

QuadMesh read_obj(const std::string& text) {
    std::vector<Eigen::RowVector3d> vertices;
    std::vector<Eigen::Vector2d> texcoords;
    std::vector<Quad> quads;
    std::vector<std::array<int, 4>> quad_uv_ids;
    bool any_uv = false, any_missing_uv = false;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            std::string x, y, z;
            if (!(ls >> x >> y >> z)) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": short v");
            vertices.emplace_back(parse_number(x, line_no), parse_number(y, line_no), parse_number(z, line_no));
        } else if (tag == "vt") {
            std::string u, v;
            if (!(ls >> u >> v)) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": short vt");
            texcoords.emplace_back(parse_number(u, line_no), parse_number(v, line_no));
        } else if (tag == "f") {
            std::vector<std::string> corners;
            std::string tok;
            while (ls >> tok) corners.push_back(tok);
            require(corners.size() == 4, ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": only quad faces are supported");
            Quad q{};
            std::array<int, 4> uv_ids{-1, -1, -1, -1};
            for (int i = 0; i < 4; ++i) {
                const std::string& c = corners[i];
                const auto slash = c.find('/');
                q[i] = parse_index(c.substr(0, slash), static_cast<int>(vertices.size()), line_no);
                if (slash != std::string::npos) {
                    const auto slash2 = c.find('/', slash + 1);
                    const std::string vt = c.substr(slash + 1, slash2 == std::string::npos ? std::string::npos
                                                                                          : slash2 - slash - 1);
                    if (!vt.empty()) uv_ids[i] = parse_index(vt, static_cast<int>(texcoords.size()), line_no);
                }
            }
            const bool has = uv_ids[0] >= 0 && uv_ids[1] >= 0 && uv_ids[2] >= 0 && uv_ids[3] >= 0;
            any_uv = any_uv || has;
            any_missing_uv = any_missing_uv || !has;
            quads.push_back(q);
            quad_uv_ids.push_back(uv_ids);
        }
        // Other records (o, g, s, usemtl, vn, ...) carry nothing we store.
    }

    QuadMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = vertices[i];
    mesh.quads = std::move(quads);
    if (any_uv && !any_missing_uv) {
        for (const auto& ids : quad_uv_ids) {
            mesh.uvs.push_back({texcoords[ids[0]], texcoords[ids[1]], texcoords[ids[2]], texcoords[ids[3]]});
        }
    }
    mesh.validate();
    return mesh;
}

QuadMesh load_obj(const std::filesystem::path& path) {
    try {
        return read_obj(io::read_text_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

void save_obj(const std::filesystem::path& path, const QuadMesh& mesh) { io::write_text_file(path, write_obj(mesh)); }

}  // namespace facegen
