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

#include <cstdint>
#include <span>

namespace kinkit {

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor turns the
/// comparison absolute (at tolerance * floor) for components smaller than
/// the floor, where a pure ratio would only amplify finite-difference
/// noise.
double max_relative_error(std::span<const double> analytic, std::span<const double> estimate,
                          double floor = 1e-3);

struct GradCheckReport {
    std::size_t trials = 0;
    std::size_t failures = 0;
    double worst_error = 0.0;

    bool passed() const { return failures == 0; }
};

/// Seeded random triplet configurations (dim <= 16); analytic gradients
/// of the triplet loss against central differences at the given step.
/// Configurations within 1e-3 of the hinge kink are redrawn (the loss is
/// not differentiable there).
GradCheckReport gradcheck_triplet(std::uint64_t seed, std::size_t trials, double h,
                                  double tolerance);

/// Seeded random arcface configurations (d <= 16, n <= 8, N <= 8,
/// s in {1,16,64}, m in {0,0.3,0.5}); gradients with respect to both the
/// features and the weight matrix. Draws landing within 1e-3 of the
/// arccos clamp or the theta+m = pi cap are redrawn.
GradCheckReport gradcheck_arcface(std::uint64_t seed, std::size_t trials, double h,
                                  double tolerance);

}  // namespace kinkit
