#include "facegen/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace facegen::simd {

#if defined(__aarch64__)

namespace {

// Two float64x2 accumulators reproduce the four interleaved partial sums of
// the scalar reference: lo holds lanes {0,1}, hi holds lanes {2,3}.

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t t = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), t));
    }
    for (; i < n; ++i) {
        const double t = a * x[i];
        y[i] = y[i] + t;
    }
}

void scale_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = a * x[i];
}

double combine(float64x2_t lo, float64x2_t hi) {
    const double s0 = vgetq_lane_f64(lo, 0), s1 = vgetq_lane_f64(lo, 1);
    const double s2 = vgetq_lane_f64(hi, 0), s3 = vgetq_lane_f64(hi, 1);
    return (s0 + s1) + (s2 + s3);
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double total = combine(lo, hi);
    for (; i < n; ++i) {
        const double t = x[i] * y[i];
        total = total + t;
    }
    return total;
}

double squared_distance_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
        lo = vaddq_f64(lo, vmulq_f64(d0, d0));
        hi = vaddq_f64(hi, vmulq_f64(d1, d1));
    }
    double total = combine(lo, hi);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        const double t = d * d;
        total = total + t;
    }
    return total;
}

constexpr KernelTable kNeon{Isa::Neon, axpy_neon, scale_neon, dot_neon, squared_distance_neon};

}  // namespace

const KernelTable* neon_kernels() { return &kNeon; }

#else

const KernelTable* neon_kernels() { return nullptr; }

#endif

}  // namespace facegen::simd
