#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "facegen/sampling/rng.hpp"

namespace facegen::appearance {

/// Linear RGB radiance, row-major with interleaved channels.
struct HdrImage {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;

    HdrImage() = default;
    HdrImage(int w, int h, float fill = 0.0f);

    float& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    /// Throws NonFiniteInput or InvalidParam for negative radiance.
    void validate() const;
};

inline constexpr int kPreprocessHeight = 64;
inline constexpr int kPreprocessWidth = 128;

/// Area-averaged resize to any size; each output pixel is the mean of the
/// input region it covers, with fractional pixel overlaps.
HdrImage resize_area(const HdrImage& img, int width, int height);

/// Resize to 64 x 128, then log(1 + I), flattened row-major RGB.
Eigen::VectorXd preprocess_hdr(const HdrImage& img);

/// Circular shift of the columns by `offset` pixels, i.e. a yaw rotation of
/// an equirectangular panorama. Column x moves to (x + offset) mod width.
HdrImage shift_columns(const HdrImage& img, long offset);

struct Rotations {
    std::vector<int> offsets;
    std::vector<HdrImage> images;
};

/// `count` yaw rotations with column offsets drawn uniformly from [0, width).
Rotations augment_rotations(const HdrImage& img, int count, sampling::Rng& rng);

/// Radiance RGBE (.hdr). Reads flat and new-style run-length scanlines in
/// the standard "-Y h +X w" orientation; writes run-length scanlines where
/// the format allows them.
HdrImage parse_rgbe(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_rgbe(const HdrImage& img);
HdrImage load_rgbe(const std::filesystem::path& path);
void save_rgbe(const std::filesystem::path& path, const HdrImage& img);

}  // namespace facegen::appearance
