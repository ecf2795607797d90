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

#include "kinkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinkit/simd/kernels.hpp"

namespace kinkit {

namespace {

// Target cosines are kept this far away from +-1 before arccos so the
// derivative sin(theta)^-1 stays bounded.
constexpr double kCosClamp = 1e-7;

void check_triplet_dims(const Triplet& t) {
    vec::check_same_dim(t.anchor.dim(), t.positive.dim(), "triplet_loss(anchor/positive)");
    vec::check_same_dim(t.anchor.dim(), t.negative.dim(), "triplet_loss(anchor/negative)");
}

struct ArcFaceForward {
    double loss = 0.0;
    // Per sample: normalized feature, input norm, softmax probabilities,
    // target cosine (raw) and the angle actually used.
    std::vector<std::vector<double>> unit_features;
    std::vector<double> feature_norms;
    std::vector<std::vector<double>> probs;
    std::vector<double> target_cos_raw;
    std::vector<double> target_theta;     // after clamped arccos
    std::vector<bool> angle_capped;       // theta_y + m exceeded pi
};

ArcFaceForward arcface_forward(const LabeledBatch& batch, const ArcFaceParams& params) {
    const std::size_t n_samples = batch.features.size();
    if (n_samples == 0) {
        throw Error(errkind::EmptyBatch, "arcface_loss: empty batch");
    }
    if (batch.labels.size() != n_samples) {
        throw Error(errkind::LabelOutOfRange,
                    "arcface_loss: " + std::to_string(batch.labels.size()) + " labels for " +
                        std::to_string(n_samples) + " features");
    }
    const std::size_t d = params.dim;
    const std::size_t n_classes = params.num_classes;
    if (params.weights.size() != d * n_classes || d == 0 || n_classes == 0) {
        throw Error(errkind::DimensionMismatch,
                    "arcface_loss: weight matrix size " +
                        std::to_string(params.weights.size()) + " != d*n = " +
                        std::to_string(d * n_classes));
    }

    ArcFaceForward fwd;
    fwd.unit_features.reserve(n_samples);
    fwd.feature_norms.reserve(n_samples);
    fwd.probs.reserve(n_samples);
    fwd.target_cos_raw.reserve(n_samples);
    fwd.target_theta.reserve(n_samples);
    fwd.angle_capped.reserve(n_samples);

    double total = 0.0;
    std::vector<double> logits(n_classes);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto& x = batch.features[i];
        vec::check_same_dim(x.size(), d, "arcface_loss(feature/weights)");
        const std::size_t y = batch.labels[i];
        if (y >= n_classes) {
            throw Error(errkind::LabelOutOfRange,
                        "arcface_loss: label " + std::to_string(y) + " for " +
                            std::to_string(n_classes) + " classes");
        }

        const double norm_x = vec::norm(x);
        if (!(norm_x > kZeroNormEps)) {
            throw Error(errkind::ZeroVector, "arcface_loss: feature with zero norm");
        }
        std::vector<double> unit(d);
        simd::scale(x.data(), 1.0 / norm_x, unit.data(), d);

        // Non-target logits are plain scaled cosines; only the target goes
        // through arccos, so only the target cosine needs the clamp.
        for (std::size_t j = 0; j < n_classes; ++j) {
            logits[j] = params.scale_s * simd::dot(unit.data(), params.column(j).data(), d);
        }
        const double cos_y_raw = logits[y] / params.scale_s;
        const double cos_y = std::clamp(cos_y_raw, -1.0 + kCosClamp, 1.0 - kCosClamp);
        const double theta = std::acos(cos_y);
        const bool capped = theta + params.margin_m > std::numbers::pi;
        const double theta_m = capped ? std::numbers::pi : theta + params.margin_m;
        logits[y] = params.scale_s * std::cos(theta_m);

        const double max_z = *std::max_element(logits.begin(), logits.end());
        double sum_exp = 0.0;
        for (double z : logits) {
            sum_exp += std::exp(z - max_z);
        }
        const double lse = max_z + std::log(sum_exp);
        total += lse - logits[y];

        std::vector<double> p(n_classes);
        for (std::size_t j = 0; j < n_classes; ++j) {
            p[j] = std::exp(logits[j] - lse);
        }
        fwd.unit_features.push_back(std::move(unit));
        fwd.feature_norms.push_back(norm_x);
        fwd.probs.push_back(std::move(p));
        fwd.target_cos_raw.push_back(cos_y_raw);
        fwd.target_theta.push_back(theta);
        fwd.angle_capped.push_back(capped);
    }
    fwd.loss = total / static_cast<double>(n_samples);
    return fwd;
}

}  // namespace

void validate_arcface_params(const ArcFaceParams& params) {
    if (params.dim < 1 || params.num_classes < 1) {
        throw Error(errkind::InvalidConfig, "arcface params need d >= 1 and n >= 1");
    }
    if (params.weights.size() != params.dim * params.num_classes) {
        throw Error(errkind::DimensionMismatch,
                    "arcface weight matrix size " + std::to_string(params.weights.size()) +
                        " != d*n = " + std::to_string(params.dim * params.num_classes));
    }
    if (!(params.scale_s > 0.0) || !std::isfinite(params.scale_s)) {
        throw Error(errkind::InvalidConfig, "arcface scale s must be positive and finite");
    }
    if (!(params.margin_m >= 0.0) || !(params.margin_m < std::numbers::pi / 2)) {
        throw Error(errkind::InvalidConfig, "arcface margin m must lie in [0, pi/2)");
    }
    for (std::size_t j = 0; j < params.num_classes; ++j) {
        const auto col = params.column(j);
        vec::check_finite(col, "arcface weight column " + std::to_string(j));
        const double n = vec::norm(col);
        if (std::fabs(n - 1.0) > 1e-10) {
            throw Error(errkind::InvalidConfig,
                        "arcface weight column " + std::to_string(j) + " has norm " +
                            std::to_string(n) + ", expected 1");
        }
    }
}

double triplet_loss(const Triplet& t, const TripletConfig& cfg) {
    check_triplet_dims(t);
    const std::size_t d = t.anchor.dim();
    const double d_ap = simd::l2_sqr(t.anchor.values.data(), t.positive.values.data(), d);
    const double d_an = simd::l2_sqr(t.anchor.values.data(), t.negative.values.data(), d);
    return std::max(0.0, d_ap - d_an + cfg.margin_alpha);
}

TripletBatchResult triplet_loss_batch(std::span<const Triplet> triplets,
                                      const TripletConfig& cfg) {
    if (triplets.empty()) {
        throw Error(errkind::EmptyBatch, "triplet_loss_batch: empty batch");
    }
    TripletBatchResult result;
    result.hinge_active.reserve(triplets.size());
    for (const auto& t : triplets) {
        const double l = triplet_loss(t, cfg);
        result.loss += l;
        result.hinge_active.push_back(l > 0.0);
    }
    return result;
}

TripletGradient triplet_loss_with_grad(const Triplet& t, const TripletConfig& cfg) {
    check_triplet_dims(t);
    const std::size_t d = t.anchor.dim();
    TripletGradient g;
    g.loss = triplet_loss(t, cfg);
    g.grad_anchor.assign(d, 0.0);
    g.grad_positive.assign(d, 0.0);
    g.grad_negative.assign(d, 0.0);
    if (g.loss > 0.0) {
        simd::sub(t.negative.values.data(), t.positive.values.data(), g.grad_anchor.data(), d);
        simd::scale(g.grad_anchor.data(), 2.0, g.grad_anchor.data(), d);
        simd::sub(t.anchor.values.data(), t.positive.values.data(), g.grad_positive.data(), d);
        simd::scale(g.grad_positive.data(), -2.0, g.grad_positive.data(), d);
        simd::sub(t.anchor.values.data(), t.negative.values.data(), g.grad_negative.data(), d);
        simd::scale(g.grad_negative.data(), 2.0, g.grad_negative.data(), d);
    }
    return g;
}

double arcface_loss(const LabeledBatch& batch, const ArcFaceParams& params) {
    return arcface_forward(batch, params).loss;
}

ArcFaceGradient arcface_loss_with_grad(const LabeledBatch& batch, const ArcFaceParams& params) {
    ArcFaceForward fwd = arcface_forward(batch, params);
    const std::size_t n_samples = batch.features.size();
    const std::size_t d = params.dim;
    const std::size_t n_classes = params.num_classes;
    const double inv_n = 1.0 / static_cast<double>(n_samples);

    ArcFaceGradient out;
    out.loss = fwd.loss;
    out.grad_features.assign(n_samples, std::vector<double>(d, 0.0));
    out.grad_weights.assign(d * n_classes, 0.0);

    std::vector<double> u(d);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t y = batch.labels[i];
        if (std::fabs(fwd.target_cos_raw[i]) > 1.0 - kCosClamp) {
            throw Error(errkind::NearSingular,
                        "arcface gradient: target cosine " +
                            std::to_string(fwd.target_cos_raw[i]) + " within 1e-7 of +-1");
        }
        const double theta = fwd.target_theta[i];
        const double theta_m = theta + params.margin_m;
        // d z_y / d cos_y = s sin(theta+m)/sin(theta); zero once the angle
        // cap at pi is in effect (z_y is constant -s there).
        const double dz_target =
            fwd.angle_capped[i] ? 0.0
                                : params.scale_s * std::sin(theta_m) / std::sin(theta);

        // u = sum_j coef_j W_j with coef_j = dl/dz_j * dz_j/dcos_j.
        std::fill(u.begin(), u.end(), 0.0);
        const auto& p = fwd.probs[i];
        for (std::size_t j = 0; j < n_classes; ++j) {
            const double dldz = p[j] - (j == y ? 1.0 : 0.0);
            const double coef = dldz * (j == y ? dz_target : params.scale_s);
            simd::axpy(coef * inv_n, params.column(j).data(), u.data(), d);
            // dcos_j/dW_j = unit feature
            simd::axpy(coef * inv_n, fwd.unit_features[i].data(),
                       out.grad_weights.data() + j * d, d);
        }
        // Back through normalization: (I - uf uf^T) u / ||x||.
        const auto& uf = fwd.unit_features[i];
        const double proj = simd::dot(uf.data(), u.data(), d);
        auto& gx = out.grad_features[i];
        simd::axpy(1.0 / fwd.feature_norms[i], u.data(), gx.data(), d);
        simd::axpy(-proj / fwd.feature_norms[i], uf.data(), gx.data(), d);
    }
    return out;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> point, double h) {
    if (!(h > 0.0)) {
        throw Error(errkind::InvalidConfig, "finite_difference_gradient: h must be > 0");
    }
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double f_plus = f(x);
        x[i] = saved - h;
        const double f_minus = f(x);
        x[i] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
            throw Error(errkind::NonFiniteValue,
                        "finite_difference_gradient: f non-finite near coordinate " +
                            std::to_string(i));
        }
        grad[i] = (f_plus - f_minus) / (2.0 * h);
    }
    return grad;
}

}  // namespace kinkit
