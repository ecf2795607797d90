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

#pragma once

#include <cstddef>
#include <string_view>

// Double-precision vector kernels. `scalar` holds the reference
// implementations; `avx2` / `neon` hold the wide variants. The function
// pointers at namespace scope are resolved once from CPU capabilities and
// are what the rest of the library calls.
//
// Reduction kernels (dot, l2_sqr) may use FMA, so across ISAs they agree
// only to rounding; the elementwise kernels are bit-identical by
// construction and the equivalence suite pins both contracts.

namespace kinkit::simd {

using ReduceFn = double (*)(const double* a, const double* b, std::size_t n);
using MapFn = void (*)(const double* a, const double* b, double* out, std::size_t n);
using ScaleFn = void (*)(const double* a, double s, double* out, std::size_t n);
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
using UnaryFn = void (*)(const double* a, double* out, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double l2_sqr(const double* a, const double* b, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void sqdiff(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void signed_sqrt(const double* a, double* out, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double l2_sqr(const double* a, const double* b, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void sqdiff(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void signed_sqrt(const double* a, double* out, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double l2_sqr(const double* a, const double* b, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void sqdiff(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void signed_sqrt(const double* a, double* out, std::size_t n);
}  // namespace neon
#endif

// Dispatched entry points, resolved at static initialization.
extern ReduceFn dot;
extern ReduceFn l2_sqr;
extern MapFn add;
extern MapFn sub;
extern MapFn mul;
extern MapFn sqdiff;
extern ScaleFn scale;
extern AxpyFn axpy;
extern UnaryFn signed_sqrt;

/// Name of the instruction set the dispatch table resolved to
/// ("avx2", "neon", or "scalar").
std::string_view active_isa();

}  // namespace kinkit::simd
