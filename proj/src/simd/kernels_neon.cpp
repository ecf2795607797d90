// Copyright 2026-present the kinkit project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// NEON is baseline on aarch64; no extra compile flags needed.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

#include "kinkit/simd/kernels.hpp"

namespace kinkit::simd::neon {

namespace {
constexpr std::size_t kWidth = 2;  // doubles per 128-bit register
}

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (std::size_t i = tail; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double l2_sqr(const double* a, const double* b, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const float64x2_t diff = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, diff, diff);
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (std::size_t i = tail; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] + b[i];
    }
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] - b[i];
    }
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void sqdiff(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const float64x2_t diff = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        vst1q_f64(out + i, vmulq_f64(diff, diff));
    }
    for (std::size_t i = tail; i < n; ++i) {
        const double diff = a[i] - b[i];
        out[i] = diff * diff;
    }
}

void scale(const double* a, double s, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    const float64x2_t vs = vdupq_n_f64(s);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vs));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] * s;
    }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    const float64x2_t va = vdupq_n_f64(alpha);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        // mul then add, matching the scalar kernel bitwise (no fused step).
        const float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
    }
    for (std::size_t i = tail; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void signed_sqrt(const double* a, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const float64x2_t v = vld1q_f64(a + i);
        const float64x2_t mag = vsqrtq_f64(vabsq_f64(v));
        const uint64x2_t sign =
            vandq_u64(vreinterpretq_u64_f64(v), vdupq_n_u64(0x8000000000000000ULL));
        vst1q_f64(out + i,
                  vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(mag), sign)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = std::copysign(std::sqrt(std::fabs(a[i])), a[i]);
    }
}

}  // namespace kinkit::simd::neon

#endif  // __aarch64__
