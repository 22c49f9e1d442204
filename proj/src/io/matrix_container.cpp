#include "facegen/io/matrix_container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "facegen/error.hpp"

namespace facegen::io {

namespace {

constexpr int kFormatVersion = 1;

std::size_t dtype_size(DType t) { return t == DType::F32 ? 4 : 8; }

std::string dtype_name(DType t) { return t == DType::F32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& s) {
    if (s == "f32") return DType::F32;
    if (s == "f64") return DType::F64;
    fail(ErrorCode::ParseError, "unsupported dtype '" + s + "'");
}

template <class T>
void append_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <class T>
T read_le(const std::uint8_t* p) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

std::size_t Tensor::element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void MatrixContainer::add(std::string name, std::vector<std::size_t> shape, std::span<const double> values,
                          DType dtype) {
    Tensor t{std::move(name), std::move(shape), dtype, {values.begin(), values.end()}};
    require(t.element_count() == t.data.size(), ErrorCode::DimensionMismatch,
            "tensor '" + t.name + "' shape does not match its value count");
    require(!contains(t.name), ErrorCode::InvalidParam, "duplicate tensor '" + t.name + "'");
    if (dtype == DType::F32) {
        for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
    }
    tensors_.push_back(std::move(t));
}

bool MatrixContainer::contains(std::string_view name) const {
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
}

const Tensor& MatrixContainer::get(std::string_view name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    fail(ErrorCode::ParseError, "missing tensor '" + std::string(name) + "'");
}

const Tensor& MatrixContainer::get(std::string_view name, std::span<const std::size_t> expected_shape) const {
    const Tensor& t = get(name);
    if (!std::equal(t.shape.begin(), t.shape.end(), expected_shape.begin(), expected_shape.end())) {
        fail(ErrorCode::DimensionMismatch, "tensor '" + std::string(name) + "' has unexpected shape");
    }
    return t;
}

std::string MatrixContainer::manifest_text(const std::string& blob_name) const {
    nlohmann::json manifest;
    manifest["version"] = kFormatVersion;
    manifest["blob"] = blob_name;
    manifest["byte_order"] = "little";
    manifest["attributes"] = attributes_;
    auto list = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors_) {
        list.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", dtype_name(t.dtype)}, {"offset", offset}});
        offset += t.element_count() * dtype_size(t.dtype);
    }
    manifest["tensors"] = std::move(list);
    return manifest.dump(2) + "\n";
}

std::vector<std::uint8_t> MatrixContainer::blob_bytes() const {
    std::vector<std::uint8_t> out;
    for (const auto& t : tensors_) {
        for (double v : t.data) {
            if (t.dtype == DType::F32) {
                append_le(out, static_cast<float>(v));
            } else {
                append_le(out, v);
            }
        }
    }
    return out;
}

MatrixContainer MatrixContainer::parse(const std::string& manifest_text, std::span<const std::uint8_t> blob) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
    }
    require(manifest.contains("version") && manifest["version"] == kFormatVersion, ErrorCode::ParseError,
            "unsupported matrix container version");
    MatrixContainer c;
    if (manifest.contains("attributes")) c.attributes_ = manifest["attributes"];
    for (const auto& entry : manifest.at("tensors")) {
        Tensor t;
        t.name = entry.at("name").get<std::string>();
        t.shape = entry.at("shape").get<std::vector<std::size_t>>();
        t.dtype = parse_dtype(entry.at("dtype").get<std::string>());
        const auto offset = entry.at("offset").get<std::size_t>();
        const std::size_t n = t.element_count();
        const std::size_t width = dtype_size(t.dtype);
        require(offset + n * width <= blob.size(), ErrorCode::ParseError,
                "tensor '" + t.name + "' extends past the end of the blob");
        t.data.resize(n);
        const std::uint8_t* p = blob.data() + offset;
        for (std::size_t i = 0; i < n; ++i) {
            t.data[i] = t.dtype == DType::F32 ? static_cast<double>(read_le<float>(p + i * 4))
                                              : read_le<double>(p + i * 8);
        }
        c.tensors_.push_back(std::move(t));
    }
    return c;
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
    auto p = manifest;
    p.replace_extension(".bin");
    return p;
}

void MatrixContainer::save(const std::filesystem::path& manifest) const {
    const auto blob = blob_path_for(manifest);
    write_text_file(manifest, manifest_text(blob.filename().string()));
    const auto bytes = blob_bytes();
    write_binary_file(blob, bytes);
}

MatrixContainer MatrixContainer::load(const std::filesystem::path& manifest) {
    const std::string text = read_text_file(manifest);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, manifest.string() + ": " + e.what());
    }
    const auto blob_name = parsed.value("blob", blob_path_for(manifest).filename().string());
    const auto bytes = read_binary_file(manifest.parent_path() / blob_name);
    return parse(text, bytes);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace facegen::io
