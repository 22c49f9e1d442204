#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace facegen::appearance {

/// Single-channel image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Scale-normalized Laplacian of Gaussian, sigma^2 * lap(G_sigma * I): a
/// separable Gaussian blur followed by the 5-point Laplacian, with
/// clamp-to-edge borders everywhere. Bright blobs give negative responses.
GrayImage pore_map(const GrayImage& texture, double sigma);

struct Extremum {
    int x = 0;
    int y = 0;
    double value = 0.0;
};

/// Pixels whose |value| is at least `min_abs` and not exceeded by any of
/// their 8 neighbours.
std::vector<Extremum> local_extrema(const GrayImage& response, double min_abs);

/// 16-bit binary PGM, min-max normalized to [0, 65535]. The sidecar records
/// the constants needed to undo the normalization.
struct Pgm16 {
    std::vector<std::uint8_t> bytes;
    nlohmann::json sidecar;
};
Pgm16 encode_pgm16(const GrayImage& img);

/// Reads binary PGM (8 or 16 bit). Values are raw sample integers unless a
/// sidecar with min/max is given, in which case they are denormalized.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes, const nlohmann::json* sidecar = nullptr);

GrayImage load_pgm(const std::filesystem::path& path);
/// Writes `path` and `path` with .json extension for the sidecar.
void save_pgm16(const std::filesystem::path& path, const GrayImage& img);

}  // namespace facegen::appearance
