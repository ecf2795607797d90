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

#include "kinkit/metric_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "kinkit/rng.hpp"
#include "kinkit/simd/kernels.hpp"

namespace kinkit {

namespace {

void validate_labeled(const LabeledEmbeddings& data) {
    if (data.items.empty()) {
        throw Error(errkind::EmptyInput, "no labeled embeddings");
    }
    if (data.items.size() != data.labels.size()) {
        throw Error(errkind::InvalidConfig,
                    std::to_string(data.labels.size()) + " labels for " +
                        std::to_string(data.items.size()) + " embeddings");
    }
    const std::size_t d = data.items.front().dim();
    for (const auto& e : data.items) {
        vec::check_same_dim(e.dim(), d, "labeled embeddings");
    }
}

bool any_valid_triplet(const LabeledEmbeddings& data) {
    // Needs two distinct classes and one class with two members.
    std::vector<std::size_t> counts;
    for (std::size_t label : data.labels) {
        if (label >= counts.size()) {
            counts.resize(label + 1, 0);
        }
        ++counts[label];
    }
    std::size_t classes_present = 0;
    bool has_pair = false;
    for (std::size_t c : counts) {
        if (c > 0) {
            ++classes_present;
        }
        if (c >= 2) {
            has_pair = true;
        }
    }
    return classes_present >= 2 && has_pair;
}

std::vector<double> pairwise_sq_dist(const LabeledEmbeddings& data) {
    const std::size_t t = data.items.size();
    const std::size_t d = data.items.front().dim();
    std::vector<double> dist(t * t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = i + 1; j < t; ++j) {
            const double v = simd::l2_sqr(data.items[i].values.data(),
                                          data.items[j].values.data(), d);
            dist[i * t + j] = v;
            dist[j * t + i] = v;
        }
    }
    return dist;
}

// Gradient of the normalized projection: given g on z_hat = z/||z||,
// returns (g - (z_hat . g) z_hat) / ||z||.
void chain_through_normalize(std::span<const double> unit, double norm,
                             std::span<const double> g_unit, std::span<double> g_raw) {
    const std::size_t d = unit.size();
    const double proj = simd::dot(unit.data(), g_unit.data(), d);
    for (std::size_t k = 0; k < d; ++k) {
        g_raw[k] = (g_unit[k] - proj * unit[k]) / norm;
    }
}

struct ProjectedItem {
    std::vector<double> raw;   // z = M v
    std::vector<double> unit;  // z / ||z||
    double norm = 0.0;
};

ProjectedItem project_item(const ProjectionHead& head, const Embedding& e) {
    ProjectedItem out;
    out.raw.resize(head.d_out);
    for (std::size_t r = 0; r < head.d_out; ++r) {
        out.raw[r] = simd::dot(head.row(r).data(), e.values.data(), head.d_in);
    }
    out.norm = vec::norm(out.raw);
    if (!(out.norm > kZeroNormEps)) {
        throw Error(errkind::ZeroVector,
                    "projection annihilates embedding '" + e.image_id + "'");
    }
    out.unit.resize(head.d_out);
    simd::scale(out.raw.data(), 1.0 / out.norm, out.unit.data(), head.d_out);
    return out;
}

// Relative error with an absolute floor; the trainer's smoke check of the
// chain rule (the rigorous per-loss checks live in the gradcheck suites).
void check_matrix_gradient(const std::vector<double>& analytic,
                           const std::function<double(std::span<const double>)>& f,
                           std::span<const double> matrix, std::size_t sample_count,
                           std::uint64_t seed) {
    if (sample_count == 0 || matrix.empty()) {
        return;
    }
    Rng pick(seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<double> x(matrix.begin(), matrix.end());
    const double h = 1e-5;
    for (std::size_t s = 0; s < std::min(sample_count, x.size()); ++s) {
        const std::size_t i = static_cast<std::size_t>(pick.below(x.size()));
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-3});
        if (std::fabs(fd - analytic[i]) / denom > 1e-3) {
            throw Error(errkind::GradientCheckFailed,
                        "matrix entry " + std::to_string(i) + ": analytic " +
                            std::to_string(analytic[i]) + " vs finite difference " +
                            std::to_string(fd));
        }
    }
}

}  // namespace

std::vector<TripletIndices> mine_triplet_indices(const LabeledEmbeddings& data,
                                                 MiningStrategy strategy, double margin_alpha) {
    validate_labeled(data);
    if (!any_valid_triplet(data)) {
        throw Error(errkind::InsufficientClasses,
                    "mining needs two classes and a class with two members");
    }
    const std::size_t t = data.items.size();

    // Canonical order: enumerate over indices sorted by image_id so the
    // output is sorted by (anchor, positive, negative) identifiers.
    std::vector<std::size_t> by_id(t);
    for (std::size_t i = 0; i < t; ++i) {
        by_id[i] = i;
    }
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
        return data.items[a].image_id < data.items[b].image_id;
    });

    std::vector<double> dist;
    if (strategy != MiningStrategy::all) {
        dist = pairwise_sq_dist(data);
    }

    std::vector<TripletIndices> out;
    for (std::size_t a : by_id) {
        for (std::size_t p : by_id) {
            if (p == a || data.labels[p] != data.labels[a]) {
                continue;
            }
            if (strategy == MiningStrategy::hard) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_n = t;
                for (std::size_t n : by_id) {
                    if (data.labels[n] == data.labels[a]) {
                        continue;
                    }
                    if (dist[a * t + n] < best) {
                        best = dist[a * t + n];
                        best_n = n;
                    }
                }
                if (best_n != t) {
                    out.push_back({a, p, best_n});
                }
                continue;
            }
            for (std::size_t n : by_id) {
                if (data.labels[n] == data.labels[a]) {
                    continue;
                }
                if (strategy == MiningStrategy::semi_hard) {
                    const double d_ap = dist[a * t + p];
                    const double d_an = dist[a * t + n];
                    if (!(d_ap < d_an && d_an < d_ap + margin_alpha)) {
                        continue;
                    }
                }
                out.push_back({a, p, n});
            }
        }
    }
    return out;
}

std::vector<Triplet> mine_triplets(const LabeledEmbeddings& data, MiningStrategy strategy,
                                   double margin_alpha) {
    std::vector<Triplet> out;
    for (const auto& idx : mine_triplet_indices(data, strategy, margin_alpha)) {
        out.push_back({data.items[idx.anchor], data.items[idx.positive],
                       data.items[idx.negative]});
    }
    return out;
}

std::vector<double> project_values(const ProjectionHead& head, std::span<const double> v) {
    vec::check_same_dim(v.size(), head.d_in, "project");
    std::vector<double> z(head.d_out);
    for (std::size_t r = 0; r < head.d_out; ++r) {
        z[r] = simd::dot(head.row(r).data(), v.data(), head.d_in);
    }
    return vec::l2_normalize(z);
}

Embedding project(const ProjectionHead& head, const Embedding& v) {
    return Embedding{v.image_id, project_values(head, v.values)};
}

TrainResult train_projection(const LabeledEmbeddings& data, const TrainConfig& cfg) {
    validate_labeled(data);
    if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0) {
        throw Error(errkind::InvalidConfig, "learning_rate must be finite and >= 0");
    }
    if (cfg.epochs == 0 || cfg.output_dim == 0) {
        throw Error(errkind::InvalidConfig, "epochs and output_dim must be >= 1");
    }
    if (cfg.batch_size == 0 || cfg.batch_size > data.items.size()) {
        throw Error(errkind::InvalidConfig,
                    "batch_size must lie in [1, dataset size = " +
                        std::to_string(data.items.size()) + "]");
    }

    const std::size_t d_in = data.items.front().dim();
    const std::size_t d_out = cfg.output_dim;
    Rng rng(cfg.seed);

    ProjectionHead head{d_in, d_out, std::vector<double>(d_out * d_in)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
    for (auto& w : head.matrix) {
        w = rng.uniform(-bound, bound);
    }

    const std::size_t n_classes =
        1 + *std::max_element(data.labels.begin(), data.labels.end());
    ArcFaceParams arc;
    if (cfg.loss_kind == LossKind::arcface) {
        arc.dim = d_out;
        arc.num_classes = n_classes;
        arc.scale_s = cfg.arcface.scale_s;
        arc.margin_m = cfg.arcface.margin_m;
        arc.weights.resize(d_out * n_classes);
        for (auto& w : arc.weights) {
            w = rng.gaussian();
        }
        for (std::size_t j = 0; j < n_classes; ++j) {
            double* col = arc.weights.data() + j * d_out;
            const double n = vec::norm({col, d_out});
            if (!(n > kZeroNormEps)) {
                col[0] = 1.0;  // pathological draw
                continue;
            }
            simd::scale(col, 1.0 / n, col, d_out);
        }
        validate_arcface_params(arc);
    }

    std::vector<double> velocity(head.matrix.size(), 0.0);
    std::vector<double> w_velocity(arc.weights.size(), 0.0);
    std::vector<double> grad(head.matrix.size());
    std::vector<double> g_raw(d_out);
    std::vector<double> epoch_losses;
    epoch_losses.reserve(cfg.epochs);
    bool gradcheck_pending = cfg.gradcheck_entries > 0;

    const TripletConfig tcfg = cfg.triplet;

    // Projects the batch's items with the current matrix; key = item index.
    auto project_batch = [&](const std::vector<std::size_t>& indices) {
        std::unordered_map<std::size_t, ProjectedItem> out;
        for (std::size_t idx : indices) {
            if (!out.contains(idx)) {
                out.emplace(idx, project_item(head, data.items[idx]));
            }
        }
        return out;
    };

    auto apply_update = [&](std::vector<double>& vel, std::vector<double>& param,
                            const std::vector<double>& g) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * g[i];
            param[i] += vel[i];
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // The reported history is an evaluation at the epoch-start weights
        // in canonical order, so it is independent of the batch shuffle
        // (and exactly constant when the learning rate is zero).
        double epoch_eval = 0.0;

        if (cfg.loss_kind == LossKind::triplet) {
            // Mine once per epoch on the epoch-start projections.
            LabeledEmbeddings projected;
            projected.labels = data.labels;
            projected.items.reserve(data.items.size());
            for (std::size_t i = 0; i < data.items.size(); ++i) {
                projected.items.push_back(
                    {data.items[i].image_id, project_item(head, data.items[i]).unit});
            }
            auto triplets = mine_triplet_indices(projected, cfg.mining, tcfg.margin_alpha);
            for (const auto& tri : triplets) {
                epoch_eval += triplet_loss({{"a", projected.items[tri.anchor].values},
                                            {"p", projected.items[tri.positive].values},
                                            {"n", projected.items[tri.negative].values}},
                                           tcfg);
            }
            if (cfg.mean_reduction && !triplets.empty()) {
                epoch_eval /= static_cast<double>(triplets.size());
            }
            epoch_losses.push_back(epoch_eval);

            rng.shuffle(triplets);
            if (triplets.empty()) {
                continue;
            }

            for (std::size_t start = 0; start < triplets.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, triplets.size());
                std::vector<std::size_t> involved;
                for (std::size_t k = start; k < end; ++k) {
                    involved.push_back(triplets[k].anchor);
                    involved.push_back(triplets[k].positive);
                    involved.push_back(triplets[k].negative);
                }
                auto proj = project_batch(involved);

                std::fill(grad.begin(), grad.end(), 0.0);
                double batch_loss = 0.0;
                for (std::size_t k = start; k < end; ++k) {
                    const auto& tri = triplets[k];
                    Triplet t{{data.items[tri.anchor].image_id, proj.at(tri.anchor).unit},
                              {data.items[tri.positive].image_id, proj.at(tri.positive).unit},
                              {data.items[tri.negative].image_id, proj.at(tri.negative).unit}};
                    TripletGradient g = triplet_loss_with_grad(t, tcfg);
                    batch_loss += g.loss;
                    const std::size_t roles[3] = {tri.anchor, tri.positive, tri.negative};
                    const std::vector<double>* gu[3] = {&g.grad_anchor, &g.grad_positive,
                                                        &g.grad_negative};
                    for (int r = 0; r < 3; ++r) {
                        const auto& item = proj.at(roles[r]);
                        chain_through_normalize(item.unit, item.norm, *gu[r], g_raw);
                        for (std::size_t row = 0; row < d_out; ++row) {
                            simd::axpy(g_raw[row], data.items[roles[r]].values.data(),
                                       grad.data() + row * d_in, d_in);
                        }
                    }
                }
                if (!std::isfinite(batch_loss)) {
                    throw Error(errkind::NonFiniteLoss,
                                "non-finite loss at epoch " + std::to_string(epoch));
                }

                if (gradcheck_pending) {
                    gradcheck_pending = false;
                    std::vector<TripletIndices> frozen(triplets.begin() + start,
                                                       triplets.begin() + end);
                    auto f = [&](std::span<const double> m) {
                        ProjectionHead probe{d_in, d_out,
                                             std::vector<double>(m.begin(), m.end())};
                        double total = 0.0;
                        for (const auto& tri : frozen) {
                            Triplet t{{"a", project_item(probe, data.items[tri.anchor]).unit},
                                      {"p", project_item(probe, data.items[tri.positive]).unit},
                                      {"n", project_item(probe, data.items[tri.negative]).unit}};
                            total += triplet_loss(t, tcfg);
                        }
                        return total;
                    };
                    check_matrix_gradient(grad, f, head.matrix, cfg.gradcheck_entries,
                                          cfg.seed);
                }

                apply_update(velocity, head.matrix, grad);
            }
        } else {
            LabeledBatch full;
            full.labels = data.labels;
            for (const auto& item : data.items) {
                full.features.push_back(project_item(head, item).raw);
            }
            epoch_eval = arcface_loss(full, arc);
            if (!cfg.mean_reduction) {
                epoch_eval *= static_cast<double>(data.items.size());
            }
            epoch_losses.push_back(epoch_eval);

            std::vector<std::size_t> order(data.items.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                order[i] = i;
            }
            rng.shuffle(order);

            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, order.size());
                std::vector<std::size_t> involved(order.begin() + start, order.begin() + end);
                auto proj = project_batch(involved);

                LabeledBatch batch;
                for (std::size_t k = start; k < end; ++k) {
                    batch.features.push_back(proj.at(order[k]).raw);
                    batch.labels.push_back(data.labels[order[k]]);
                }
                ArcFaceGradient g;
                try {
                    g = arcface_loss_with_grad(batch, arc);
                } catch (const Error& e) {
                    if (e.kind() == errkind::NearSingular) {
                        continue;  // saturated target; skip the step
                    }
                    throw;
                }
                if (!std::isfinite(g.loss)) {
                    throw Error(errkind::NonFiniteLoss,
                                "non-finite loss at epoch " + std::to_string(epoch));
                }

                std::fill(grad.begin(), grad.end(), 0.0);
                for (std::size_t k = start; k < end; ++k) {
                    const std::size_t idx = order[k];
                    for (std::size_t row = 0; row < d_out; ++row) {
                        simd::axpy(g.grad_features[k - start][row],
                                   data.items[idx].values.data(), grad.data() + row * d_in,
                                   d_in);
                    }
                }

                if (gradcheck_pending) {
                    gradcheck_pending = false;
                    auto f = [&](std::span<const double> m) {
                        ProjectionHead probe{d_in, d_out,
                                             std::vector<double>(m.begin(), m.end())};
                        LabeledBatch b;
                        for (std::size_t k = start; k < end; ++k) {
                            b.features.push_back(project_item(probe, data.items[order[k]]).raw);
                            b.labels.push_back(data.labels[order[k]]);
                        }
                        return arcface_loss(b, arc);
                    };
                    check_matrix_gradient(grad, f, head.matrix, cfg.gradcheck_entries,
                                          cfg.seed);
                }

                apply_update(velocity, head.matrix, grad);
                apply_update(w_velocity, arc.weights, g.grad_weights);
                // Keep the class centers on the sphere.
                for (std::size_t j = 0; j < n_classes; ++j) {
                    double* col = arc.weights.data() + j * d_out;
                    const double n = vec::norm({col, d_out});
                    if (n > kZeroNormEps) {
                        simd::scale(col, 1.0 / n, col, d_out);
                    }
                }
            }
        }
    }

    return {std::move(head), std::move(epoch_losses)};
}

}  // namespace kinkit
