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

// This translation unit is compiled with -mavx2 -mfma on x86_64. Nothing
// here runs unless the dispatcher saw AVX2+FMA in cpuid.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "kinkit/simd/kernels.hpp"

namespace kinkit::simd::avx2 {

namespace {
constexpr std::size_t kWidth = 4;  // doubles per 256-bit register

inline double hsum(__m256d v) {
    double lanes[4];
    _mm256_storeu_pd(lanes, v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < tail; i += kWidth) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double sum = hsum(acc);
    for (std::size_t i = tail; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double l2_sqr(const double* a, const double* b, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double sum = hsum(acc);
    for (std::size_t i = tail; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] + b[i];
    }
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] - b[i];
    }
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void sqdiff(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(diff, diff));
    }
    for (std::size_t i = tail; i < n; ++i) {
        const double diff = a[i] - b[i];
        out[i] = diff * diff;
    }
}

void scale(const double* a, double s, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    const __m256d vs = _mm256_set1_pd(s);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = a[i] * s;
    }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    const __m256d va = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        // y[i] + alpha*x[i] without FMA so the result matches scalar bitwise.
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (std::size_t i = tail; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void signed_sqrt(const double* a, double* out, std::size_t n) {
    const std::size_t tail = n - n % kWidth;
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    for (std::size_t i = 0; i < tail; i += kWidth) {
        const __m256d v = _mm256_loadu_pd(a + i);
        const __m256d sign = _mm256_and_pd(v, sign_bit);
        const __m256d mag = _mm256_andnot_pd(sign_bit, v);
        _mm256_storeu_pd(out + i, _mm256_or_pd(_mm256_sqrt_pd(mag), sign));
    }
    for (std::size_t i = tail; i < n; ++i) {
        out[i] = std::copysign(std::sqrt(std::fabs(a[i])), a[i]);
    }
}

}  // namespace kinkit::simd::avx2

#endif  // x86_64
