#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>

#include "facegen/mesh/quad_mesh.hpp"

namespace facegen {

struct NamedMesh {
    std::string name;
    const QuadMesh* mesh;
};

/// `v`, optional `vt` (one per face corner) and 1-based quad `f` lines.
/// Floats use shortest round-trip formatting.
std::string write_obj(const QuadMesh& mesh);
/// Several meshes in one file, each introduced by an `o` line.
std::string write_obj(std::span<const NamedMesh> meshes);

/// Reads `v`, `vt` and quad `f` records (v, v/vt, v/vt/vn, v//vn). All objects
/// are merged into one mesh. Non-quad faces are a ParseError.
QuadMesh read_obj(const std::string& text);

QuadMesh load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const QuadMesh& mesh);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace facegen
