#include "facegen/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace facegen::simd {

namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = a * x[i];
        y[i] = y[i] + t;
    }
}

void scale_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
            const double t = x[i + l] * y[i + l];
            s[l] = s[l] + t;
        }
    }
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (; i < n; ++i) {
        const double t = x[i] * y[i];
        total = total + t;
    }
    return total;
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
            const double d = x[i + l] - y[i + l];
            const double t = d * d;
            s[l] = s[l] + t;
        }
    }
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        const double t = d * d;
        total = total + t;
    }
    return total;
}

constexpr KernelTable kScalar{Isa::Scalar, axpy_scalar, scale_scalar, dot_scalar, squared_distance_scalar};

const KernelTable& select() {
    const char* env = std::getenv("FACEGEN_SIMD");
    const std::string choice = env ? env : "auto";
    if (choice == "scalar") return kScalar;
    if (choice == "avx2") return avx2_kernels() ? *avx2_kernels() : kScalar;
    if (choice == "neon") return neon_kernels() ? *neon_kernels() : kScalar;
    if (const auto* t = avx2_kernels()) return *t;
    if (const auto* t = neon_kernels()) return *t;
    return kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace facegen::simd
