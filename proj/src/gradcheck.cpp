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

#include "kinkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinkit/losses.hpp"
#include "kinkit/rng.hpp"

namespace kinkit {

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    for (auto& x : v) {
        x = rng.gaussian();
    }
    return v;
}

ArcFaceParams random_arcface(Rng& rng, std::size_t d, std::size_t n, double s, double m) {
    ArcFaceParams params;
    params.dim = d;
    params.num_classes = n;
    params.scale_s = s;
    params.margin_m = m;
    params.weights.resize(d * n);
    for (std::size_t j = 0; j < n; ++j) {
        auto col = vec::l2_normalize(random_vector(rng, d));
        std::copy(col.begin(), col.end(), params.weights.begin() + j * d);
    }
    return params;
}

// True when some target cosine sits near the clamp or the theta+m cap,
// where the loss is non-differentiable and the check would measure the
// kink instead of the gradient.
bool near_arcface_corner(const LabeledBatch& batch, const ArcFaceParams& params) {
    for (std::size_t i = 0; i < batch.features.size(); ++i) {
        const auto unit = vec::l2_normalize(batch.features[i]);
        double c = 0.0;
        const auto col = params.column(batch.labels[i]);
        for (std::size_t k = 0; k < params.dim; ++k) {
            c += unit[k] * col[k];
        }
        if (std::fabs(c) > 1.0 - 1e-3) {
            return true;
        }
        if (std::fabs(std::acos(std::clamp(c, -1.0, 1.0)) + params.margin_m -
                      std::numbers::pi) < 1e-3) {
            return true;
        }
    }
    return false;
}

}  // namespace

double max_relative_error(std::span<const double> analytic, std::span<const double> estimate,
                          double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom =
            std::max({std::fabs(analytic[i]), std::fabs(estimate[i]), floor});
        worst = std::max(worst, std::fabs(analytic[i] - estimate[i]) / denom);
    }
    return worst;
}

GradCheckReport gradcheck_triplet(std::uint64_t seed, std::size_t trials, double h,
                                  double tolerance) {
    Rng rng(seed);
    GradCheckReport report;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.below(15));  // 2..16
        TripletConfig cfg{rng.uniform(0.1, 0.5)};
        Triplet t;
        while (true) {
            t = Triplet{{"a", random_vector(rng, d)},
                        {"p", random_vector(rng, d)},
                        {"n", random_vector(rng, d)}};
            const double margin = vec::squared_euclidean(t.anchor.values, t.positive.values) -
                                  vec::squared_euclidean(t.anchor.values, t.negative.values) +
                                  cfg.margin_alpha;
            if (std::fabs(margin) > 1e-3) {
                break;  // stay away from the hinge kink
            }
        }

        const TripletGradient g = triplet_loss_with_grad(t, cfg);
        std::vector<double> analytic;
        analytic.insert(analytic.end(), g.grad_anchor.begin(), g.grad_anchor.end());
        analytic.insert(analytic.end(), g.grad_positive.begin(), g.grad_positive.end());
        analytic.insert(analytic.end(), g.grad_negative.begin(), g.grad_negative.end());

        std::vector<double> flat;
        flat.insert(flat.end(), t.anchor.values.begin(), t.anchor.values.end());
        flat.insert(flat.end(), t.positive.values.begin(), t.positive.values.end());
        flat.insert(flat.end(), t.negative.values.begin(), t.negative.values.end());

        const auto f = [&](std::span<const double> x) {
            Triplet probe{{"a", {x.begin(), x.begin() + d}},
                          {"p", {x.begin() + d, x.begin() + 2 * d}},
                          {"n", {x.begin() + 2 * d, x.end()}}};
            return triplet_loss(probe, cfg);
        };
        const auto fd = finite_difference_gradient(f, flat, h);

        const double err = max_relative_error(analytic, fd);
        report.worst_error = std::max(report.worst_error, err);
        report.failures += err > tolerance;
        ++report.trials;
    }
    return report;
}

GradCheckReport gradcheck_arcface(std::uint64_t seed, std::size_t trials, double h,
                                  double tolerance) {
    Rng rng(seed);
    constexpr double kScales[] = {1.0, 16.0, 64.0};
    constexpr double kMargins[] = {0.0, 0.3, 0.5};

    GradCheckReport report;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.below(15));  // 2..16
        const std::size_t n = 2 + static_cast<std::size_t>(rng.below(7));   // 2..8
        const std::size_t batch_n = 1 + static_cast<std::size_t>(rng.below(8));
        const double s = kScales[rng.below(3)];
        const double m = kMargins[rng.below(3)];

        ArcFaceParams params;
        LabeledBatch batch;
        while (true) {
            params = random_arcface(rng, d, n, s, m);
            batch.features.clear();
            batch.labels.clear();
            for (std::size_t i = 0; i < batch_n; ++i) {
                auto x = random_vector(rng, d);
                // Random positive length exercises the internal
                // normalization chain.
                const double len = rng.uniform(0.5, 2.0);
                for (auto& v : x) {
                    v *= len;
                }
                batch.features.push_back(std::move(x));
                batch.labels.push_back(rng.below(n));
            }
            if (!near_arcface_corner(batch, params)) {
                break;
            }
        }

        const ArcFaceGradient g = arcface_loss_with_grad(batch, params);

        // Features.
        std::vector<double> flat_x;
        std::vector<double> analytic_x;
        for (std::size_t i = 0; i < batch_n; ++i) {
            flat_x.insert(flat_x.end(), batch.features[i].begin(), batch.features[i].end());
            analytic_x.insert(analytic_x.end(), g.grad_features[i].begin(),
                              g.grad_features[i].end());
        }
        const auto f_x = [&](std::span<const double> x) {
            LabeledBatch probe;
            probe.labels = batch.labels;
            for (std::size_t i = 0; i < batch_n; ++i) {
                probe.features.emplace_back(x.begin() + i * d, x.begin() + (i + 1) * d);
            }
            return arcface_loss(probe, params);
        };
        const auto fd_x = finite_difference_gradient(f_x, flat_x, h);
        double err = max_relative_error(analytic_x, fd_x);

        // Weight matrix.
        const auto f_w = [&](std::span<const double> w) {
            ArcFaceParams probe = params;
            probe.weights.assign(w.begin(), w.end());
            return arcface_loss(batch, probe);
        };
        const auto fd_w = finite_difference_gradient(f_w, params.weights, h);
        err = std::max(err, max_relative_error(g.grad_weights, fd_w));

        report.worst_error = std::max(report.worst_error, err);
        report.failures += err > tolerance;
        ++report.trials;
    }
    return report;
}

}  // namespace kinkit
