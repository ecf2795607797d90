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

#include "kinkit/simd/kernels.hpp"

namespace kinkit::simd {

namespace {

bool use_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool use_neon() {
#if defined(__aarch64__)
    return true;
#else
    return false;
#endif
}

}  // namespace

#if defined(__x86_64__) || defined(_M_X64)
#define KINKIT_RESOLVE(fn) (use_avx2() ? avx2::fn : scalar::fn)
#elif defined(__aarch64__)
#define KINKIT_RESOLVE(fn) (use_neon() ? neon::fn : scalar::fn)
#else
#define KINKIT_RESOLVE(fn) (scalar::fn)
#endif

ReduceFn dot = KINKIT_RESOLVE(dot);
ReduceFn l2_sqr = KINKIT_RESOLVE(l2_sqr);
MapFn add = KINKIT_RESOLVE(add);
MapFn sub = KINKIT_RESOLVE(sub);
MapFn mul = KINKIT_RESOLVE(mul);
MapFn sqdiff = KINKIT_RESOLVE(sqdiff);
ScaleFn scale = KINKIT_RESOLVE(scale);
AxpyFn axpy = KINKIT_RESOLVE(axpy);
UnaryFn signed_sqrt = KINKIT_RESOLVE(signed_sqrt);

#undef KINKIT_RESOLVE

std::string_view active_isa() {
    if (use_avx2()) {
        return "avx2";
    }
    if (use_neon()) {
        return "neon";
    }
    return "scalar";
}

}  // namespace kinkit::simd
