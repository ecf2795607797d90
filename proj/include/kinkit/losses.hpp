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

#include <functional>
#include <span>
#include <vector>

#include "kinkit/embedding.hpp"

namespace kinkit {

struct Triplet {
    Embedding anchor;
    Embedding positive;
    Embedding negative;
};

struct TripletConfig {
    double margin_alpha = 0.2;
};

/// Additive-angular-margin loss parameters. `weights` holds the class
/// centers column-major (column j at weights[j*dim .. j*dim+dim)); every
/// column is expected to be unit-norm — see validate_arcface_params.
struct ArcFaceParams {
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> weights;
    double scale_s = 64.0;
    double margin_m = 0.5;

    std::span<const double> column(std::size_t j) const {
        return {weights.data() + j * dim, dim};
    }
};

struct LabeledBatch {
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;
};

/// Enforces the ArcFaceParams invariants (unit columns to 1e-10, s > 0,
/// m in [0, pi/2)). The loss functions themselves evaluate whatever they
/// are given, so finite-difference probes can perturb raw weights.
void validate_arcface_params(const ArcFaceParams& params);

/// [||a-p||^2 - ||a-n||^2 + alpha]_+
double triplet_loss(const Triplet& t, const TripletConfig& cfg);

struct TripletBatchResult {
    double loss = 0.0;                // sum over the batch
    std::vector<bool> hinge_active;   // per triplet: loss > 0
};

TripletBatchResult triplet_loss_batch(std::span<const Triplet> triplets,
                                      const TripletConfig& cfg);

struct TripletGradient {
    double loss = 0.0;
    std::vector<double> grad_anchor;
    std::vector<double> grad_positive;
    std::vector<double> grad_negative;
};

/// Analytic gradients: zero everywhere when the hinge is inactive,
/// otherwise grad_a = 2(n-p), grad_p = -2(a-p), grad_n = 2(a-n).
TripletGradient triplet_loss_with_grad(const Triplet& t, const TripletConfig& cfg);

/// Mean over the batch of -log softmax with the target logit replaced by
/// s*cos(theta_y + m); features are L2-normalized internally, the target
/// cosine is clamped to [-1+1e-7, 1-1e-7] before arccos, and theta_y + m
/// is capped at pi.
double arcface_loss(const LabeledBatch& batch, const ArcFaceParams& params);

struct ArcFaceGradient {
    double loss = 0.0;
    std::vector<std::vector<double>> grad_features;  // aligned with batch.features
    std::vector<double> grad_weights;                // column-major, dim x num_classes
};

/// Throws NearSingular when any target cosine is within 1e-7 of +-1
/// (the arccos derivative blows up there; callers may perturb and retry).
ArcFaceGradient arcface_loss_with_grad(const LabeledBatch& batch, const ArcFaceParams& params);

/// Central-difference gradient estimate, (f(x+h e_i) - f(x-h e_i)) / 2h.
/// The verification oracle used by the gradcheck suites.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> point, double h);

}  // namespace kinkit
