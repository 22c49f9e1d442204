#include "facegen/appearance/hdr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "facegen/error.hpp"
#include "facegen/io/matrix_container.hpp"

namespace facegen::appearance {

HdrImage::HdrImage(int w, int h, float fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
    require(w > 0 && h > 0, ErrorCode::InvalidParam, "image dimensions must be positive");
}

void HdrImage::validate() const {
    require(width > 0 && height > 0 && rgb.size() == static_cast<std::size_t>(width) * height * 3,
            ErrorCode::DimensionMismatch, "HDR image buffer does not match its dimensions");
    for (float v : rgb) {
        require(std::isfinite(v), ErrorCode::NonFiniteInput, "HDR image contains NaN or Inf");
        require(v >= 0.0f, ErrorCode::InvalidParam, "HDR radiance must be non-negative");
    }
}

namespace {

// Row i holds the weights of input samples contributing to output i.
Eigen::MatrixXd area_weights(int in, int out) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out, in);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        const double lo = o * scale, hi = (o + 1) * scale;
        for (int i = static_cast<int>(std::floor(lo)); i < std::min(in, static_cast<int>(std::ceil(hi))); ++i) {
            const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) w(o, i) = overlap / scale;
        }
    }
    return w;
}

}  // namespace

HdrImage resize_area(const HdrImage& img, int width, int height) {
    img.validate();
    require(width > 0 && height > 0, ErrorCode::InvalidParam, "target size must be positive");
    const Eigen::MatrixXd wx = area_weights(img.width, width);
    const Eigen::MatrixXd wy = area_weights(img.height, height);
    HdrImage out(width, height);
    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd channel(img.height, img.width);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) channel(y, x) = img.at(x, y, c);
        }
        const Eigen::MatrixXd resized = wy * channel * wx.transpose();
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) out.at(x, y, c) = static_cast<float>(resized(y, x));
        }
    }
    return out;
}

Eigen::VectorXd preprocess_hdr(const HdrImage& img) {
    img.validate();
    const Eigen::MatrixXd wx = area_weights(img.width, kPreprocessWidth);
    const Eigen::MatrixXd wy = area_weights(img.height, kPreprocessHeight);
    Eigen::VectorXd out(static_cast<Eigen::Index>(kPreprocessWidth) * kPreprocessHeight * 3);
    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd channel(img.height, img.width);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) channel(y, x) = img.at(x, y, c);
        }
        const Eigen::MatrixXd resized = wy * channel * wx.transpose();
        for (int y = 0; y < kPreprocessHeight; ++y) {
            for (int x = 0; x < kPreprocessWidth; ++x) {
                out((static_cast<Eigen::Index>(y) * kPreprocessWidth + x) * 3 + c) = std::log1p(resized(y, x));
            }
        }
    }
    return out;
}

HdrImage shift_columns(const HdrImage& img, long offset) {
    HdrImage out(img.width, img.height);
    const long w = img.width;
    const long shift = ((offset % w) + w) % w;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int to = static_cast<int>((x + shift) % w);
            for (int c = 0; c < 3; ++c) out.at(to, y, c) = img.at(x, y, c);
        }
    }
    return out;
}

Rotations augment_rotations(const HdrImage& img, int count, sampling::Rng& rng) {
    require(count >= 0, ErrorCode::InvalidParam, "rotation count must be non-negative");
    Rotations out;
    std::uniform_int_distribution<int> column(0, img.width - 1);
    for (int i = 0; i < count; ++i) {
        out.offsets.push_back(column(rng));
        out.images.push_back(shift_columns(img, out.offsets.back()));
    }
    return out;
}

namespace {

void rgbe_to_float(const std::uint8_t* p, float* out) {
    if (p[3] == 0) {
        out[0] = out[1] = out[2] = 0.0f;
        return;
    }
    const double f = std::ldexp(1.0, static_cast<int>(p[3]) - (128 + 8));
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(p[c] * f);
}

void float_to_rgbe(const float* v, std::uint8_t* out) {
    const double top = std::max({v[0], v[1], v[2]});
    if (top < 1e-32) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e = 0;
    const double mantissa = std::frexp(top, &e);
    const double scale = mantissa * 256.0 / top;
    for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::min(255.0, v[c] * scale));
    out[3] = static_cast<std::uint8_t>(e + 128);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
    bool done() const { return pos_ >= bytes_.size(); }
    std::string line() {
        std::string s;
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') s.push_back(static_cast<char>(bytes_[pos_++]));
        require(pos_ < bytes_.size(), ErrorCode::ParseError, "truncated RGBE header");
        ++pos_;
        return s;
    }
    std::uint8_t byte() {
        require(pos_ < bytes_.size(), ErrorCode::ParseError, "truncated RGBE pixel data");
        return bytes_[pos_++];
    }
    std::uint8_t peek(std::size_t ahead) const { return pos_ + ahead < bytes_.size() ? bytes_[pos_ + ahead] : 0; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

HdrImage parse_rgbe(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const std::string magic = r.line();
    require(magic.rfind("#?", 0) == 0, ErrorCode::ParseError, "missing Radiance signature");
    for (std::string l = r.line(); !l.empty(); l = r.line()) {
        if (l.rfind("FORMAT=", 0) == 0) {
            require(l == "FORMAT=32-bit_rle_rgbe", ErrorCode::ParseError, "unsupported pixel format: " + l);
        }
    }
    std::istringstream res(r.line());
    std::string ysign, xsign;
    int h = 0, w = 0;
    res >> ysign >> h >> xsign >> w;
    require(ysign == "-Y" && xsign == "+X" && h > 0 && w > 0, ErrorCode::ParseError,
            "only '-Y h +X w' RGBE orientation is supported");

    HdrImage img(w, h);
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(w) * 4);
    for (int y = 0; y < h; ++y) {
        const bool rle = w >= 8 && w < 32768 && r.peek(0) == 2 && r.peek(1) == 2 && (r.peek(2) & 0x80) == 0;
        if (rle) {
            const std::uint8_t head[4] = {r.byte(), r.byte(), r.byte(), r.byte()};
            require(((head[2] << 8) | head[3]) == w, ErrorCode::ParseError, "RLE scanline width mismatch");
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < w) {
                    int count = r.byte();
                    if (count > 128) {
                        count -= 128;
                        require(x + count <= w, ErrorCode::ParseError, "RLE run overflows the scanline");
                        const std::uint8_t value = r.byte();
                        for (int i = 0; i < count; ++i) scan[static_cast<std::size_t>(x++) * 4 + c] = value;
                    } else {
                        require(count > 0 && x + count <= w, ErrorCode::ParseError, "bad RLE literal run");
                        for (int i = 0; i < count; ++i) scan[static_cast<std::size_t>(x++) * 4 + c] = r.byte();
                    }
                }
            }
        } else {
            for (auto& b : scan) b = r.byte();
        }
        for (int x = 0; x < w; ++x) rgbe_to_float(&scan[static_cast<std::size_t>(x) * 4], &img.at(x, y, 0));
    }
    return img;
}

namespace {

void rle_channel(const std::vector<std::uint8_t>& data, std::vector<std::uint8_t>& out) {
    const std::size_t n = data.size();
    std::size_t i = 0;
    while (i < n) {
        // Find the next run of at least 4 equal bytes.
        std::size_t run_start = i, run_len = 0;
        while (run_start < n) {
            run_len = 1;
            while (run_start + run_len < n && run_len < 127 && data[run_start + run_len] == data[run_start]) ++run_len;
            if (run_len >= 4) break;
            run_start += run_len;
        }
        if (run_start >= n) run_len = 0;
        while (i < run_start) {
            const std::size_t literal = std::min<std::size_t>(128, run_start - i);
            out.push_back(static_cast<std::uint8_t>(literal));
            out.insert(out.end(), data.begin() + static_cast<long>(i), data.begin() + static_cast<long>(i + literal));
            i += literal;
        }
        if (run_len >= 4) {
            out.push_back(static_cast<std::uint8_t>(128 + run_len));
            out.push_back(data[run_start]);
            i = run_start + run_len;
        }
    }
}

}  // namespace

std::vector<std::uint8_t> encode_rgbe(const HdrImage& img) {
    img.validate();
    const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(img.height) + " +X " +
                               std::to_string(img.width) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const bool rle = img.width >= 8 && img.width < 32768;
    std::vector<std::uint8_t> pixel(4);
    std::array<std::vector<std::uint8_t>, 4> channels;
    for (int y = 0; y < img.height; ++y) {
        for (auto& ch : channels) ch.assign(static_cast<std::size_t>(img.width), 0);
        for (int x = 0; x < img.width; ++x) {
            float_to_rgbe(&img.rgb[(static_cast<std::size_t>(y) * img.width + x) * 3], pixel.data());
            if (rle) {
                for (int c = 0; c < 4; ++c) channels[c][x] = pixel[c];
            } else {
                out.insert(out.end(), pixel.begin(), pixel.end());
            }
        }
        if (rle) {
            out.insert(out.end(), {2, 2, static_cast<std::uint8_t>(img.width >> 8),
                                   static_cast<std::uint8_t>(img.width & 0xff)});
            for (const auto& ch : channels) rle_channel(ch, out);
        }
    }
    return out;
}

HdrImage load_rgbe(const std::filesystem::path& path) {
    const auto bytes = io::read_binary_file(path);
    try {
        return parse_rgbe(bytes);
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.detail());
    }
}

void save_rgbe(const std::filesystem::path& path, const HdrImage& img) { io::write_binary_file(path, encode_rgbe(img)); }

}  // namespace facegen::appearance
