#pragma once

#include <filesystem>

#include "facegen/io/matrix_container.hpp"
#include "facegen/model/blendshape_model.hpp"

namespace facegen::model {

inline constexpr int kModelFormatVersion = 1;

io::MatrixContainer to_container(const BlendshapeModel& model);
/// Throws ParseError when the mandatory model_version attribute is missing or
/// unsupported.
BlendshapeModel from_container(const io::MatrixContainer& container);

void save_model(const std::filesystem::path& manifest, const BlendshapeModel& model);
BlendshapeModel load_model(const std::filesystem::path& manifest);

/// Mesh tensors shared with other containers: <prefix>.vertices,
/// <prefix>.quads and optionally <prefix>.uvs.
void add_mesh(io::MatrixContainer& c, const std::string& prefix, const QuadMesh& mesh);
QuadMesh read_mesh(const io::MatrixContainer& c, const std::string& prefix);

}  // namespace facegen::model
