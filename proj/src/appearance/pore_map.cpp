#include "facegen/appearance/pore_map.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"

namespace facegen::appearance {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    require(w > 0 && h > 0, ErrorCode::InvalidParam, "image dimensions must be positive");
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += k[i + radius];
    }
    for (double& v : k) v /= total;
    return k;
}

GrayImage convolve(const GrayImage& img, const std::vector<double>& k, bool horizontal) {
    GrayImage out(img.width, img.height);
    const int radius = static_cast<int>(k.size() / 2);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int sx = horizontal ? std::clamp(x + i, 0, img.width - 1) : x;
                const int sy = horizontal ? y : std::clamp(y + i, 0, img.height - 1);
                acc += k[i + radius] * img.at(sx, sy);
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

}  // namespace

GrayImage pore_map(const GrayImage& texture, double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::InvalidSigma, "LoG sigma must be positive");
    require(texture.width > 0 && texture.height > 0 &&
                texture.data.size() == static_cast<std::size_t>(texture.width) * texture.height,
            ErrorCode::DimensionMismatch, "texture buffer does not match its dimensions");
    const auto k = gaussian_kernel(sigma);
    const GrayImage blurred = convolve(convolve(texture, k, true), k, false);
    GrayImage out(texture.width, texture.height);
    const double s2 = sigma * sigma;
    const int w = texture.width, h = texture.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = blurred.at(x, y);
            const double lap = blurred.at(std::max(x - 1, 0), y) + blurred.at(std::min(x + 1, w - 1), y) +
                               blurred.at(x, std::max(y - 1, 0)) + blurred.at(x, std::min(y + 1, h - 1)) - 4.0 * c;
            out.at(x, y) = s2 * lap;
        }
    }
    return out;
}

std::vector<Extremum> local_extrema(const GrayImage& r, double min_abs) {
    std::vector<Extremum> out;
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            const double v = std::abs(r.at(x, y));
            if (v < min_abs) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= r.width || ny >= r.height) continue;
                    if (std::abs(r.at(nx, ny)) > v) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) out.push_back({x, y, r.at(x, y)});
        }
    }
    return out;
}

Pgm16 encode_pgm16(const GrayImage& img) {
    const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
    require(lo_it != img.data.end(), ErrorCode::InvalidParam, "empty image");
    const double lo = *lo_it, hi = *hi_it;
    require(std::isfinite(lo) && std::isfinite(hi), ErrorCode::NonFiniteInput, "image contains NaN or Inf");
    Pgm16 out;
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    out.bytes.assign(header.begin(), header.end());
    const double range = hi - lo;
    for (double v : img.data) {
        const auto q = static_cast<std::uint16_t>(range > 0.0 ? std::lround((v - lo) / range * 65535.0) : 0);
        out.bytes.push_back(static_cast<std::uint8_t>(q >> 8));
        out.bytes.push_back(static_cast<std::uint8_t>(q & 0xff));
    }
    out.sidecar = {{"format", "pgm16-minmax"}, {"width", img.width}, {"height", img.height}, {"min", lo}, {"max", hi}};
    return out;
}

GrayImage parse_pgm(std::span<const std::uint8_t> bytes, const nlohmann::json* sidecar) {
    std::size_t pos = 0;
    auto token = [&]() {
        std::string t;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                ++pos;
            } else {
                t.push_back(c);
                ++pos;
            }
        }
        return t;
    };
    require(token() == "P5", ErrorCode::ParseError, "only binary PGM (P5) is supported");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "malformed PGM header");
    }
    require(w > 0 && h > 0 && maxval > 0 && maxval <= 65535, ErrorCode::ParseError, "bad PGM header values");
    ++pos;  // single whitespace byte before the raster
    const std::size_t sample = maxval > 255 ? 2 : 1;
    require(bytes.size() >= pos + static_cast<std::size_t>(w) * h * sample, ErrorCode::ParseError,
            "truncated PGM raster");
    GrayImage img(w, h);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const std::size_t o = pos + i * sample;
        img.data[i] = sample == 2 ? static_cast<double>((bytes[o] << 8) | bytes[o + 1]) : bytes[o];
    }
    if (sidecar != nullptr) {
        const double lo = sidecar->at("min").get<double>();
        const double hi = sidecar->at("max").get<double>();
        for (double& v : img.data) v = lo + v / maxval * (hi - lo);
    }
    return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    const auto bytes = io::read_binary_file(path);
    auto sidecar_path = path;
    sidecar_path.replace_extension(".json");
    try {
        if (std::filesystem::exists(sidecar_path)) {
            const auto sidecar = nlohmann::json::parse(io::read_text_file(sidecar_path));
            return parse_pgm(bytes, &sidecar);
        }
        return parse_pgm(bytes);
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.detail());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, sidecar_path.string() + ": " + e.what());
    }
}

void save_pgm16(const std::filesystem::path& path, const GrayImage& img) {
    const auto pgm = encode_pgm16(img);
    io::write_binary_file(path, pgm.bytes);
    auto sidecar_path = path;
    sidecar_path.replace_extension(".json");
    io::write_text_file(sidecar_path, pgm.sidecar.dump(2) + "\n");
}

}  // namespace facegen::appearance
