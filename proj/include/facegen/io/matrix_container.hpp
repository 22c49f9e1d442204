#pragma once

// A set of named row-major tensors stored as a JSON manifest plus one
// little-endian raw blob. Values are held as double in memory; f32 tensors
// are rounded on write.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace facegen::io {

enum class DType { F32, F64 };

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    DType dtype = DType::F64;
    std::vector<double> data;

    std::size_t element_count() const;
};

class MatrixContainer {
public:
    void add(std::string name, std::vector<std::size_t> shape, std::span<const double> values,
             DType dtype = DType::F64);

    bool contains(std::string_view name) const;
    const Tensor& get(std::string_view name) const;
    /// Like get() but also checks the shape; throws DimensionMismatch otherwise.
    const Tensor& get(std::string_view name, std::span<const std::size_t> expected_shape) const;
    const std::vector<Tensor>& tensors() const { return tensors_; }

    nlohmann::json& attributes() { return attributes_; }
    const nlohmann::json& attributes() const { return attributes_; }

    /// Writes `manifest` and a sibling blob with the same stem and a .bin extension.
    void save(const std::filesystem::path& manifest) const;
    static MatrixContainer load(const std::filesystem::path& manifest);

    std::string manifest_text(const std::string& blob_name) const;
    std::vector<std::uint8_t> blob_bytes() const;
    static MatrixContainer parse(const std::string& manifest_text, std::span<const std::uint8_t> blob);

private:
    std::vector<Tensor> tensors_;
    nlohmann::json attributes_ = nlohmann::json::object();
};

std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace facegen::io
