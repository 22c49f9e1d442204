#pragma once

// Dense double-precision kernels used by the model and appearance inner loops.
//
// Every variant follows the summation order of the scalar reference exactly:
// element-wise kernels use a separate multiply and add (never fused), and
// reductions keep four interleaved partial sums combined as (s0 + s1) + (s2 + s3)
// before the scalar tail. Dispatching to a different instruction set therefore
// never changes a result bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace facegen::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y[i] = a * x[i]
    void (*scale)(double a, const double* x, double* y, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    // sum of (x[i] - y[i])^2
    double (*squared_distance)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant was not compiled in or the CPU lacks the extension.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Best table for this CPU. The FACEGEN_SIMD environment variable
/// (scalar | avx2 | neon | auto) overrides the choice on first use.
const KernelTable& active();

// Span conveniences over the active table.
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    return active().squared_distance(x.data(), y.data(), x.size());
}

}  // namespace facegen::simd
