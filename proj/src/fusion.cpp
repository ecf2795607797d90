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

#include "kinkit/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "kinkit/rng.hpp"
#include "kinkit/simd/kernels.hpp"

namespace kinkit {

namespace {

// Appends the five combination blocks for one source pair into `out`.
void append_blocks(std::span<const double> a, std::span<const double> b,
                   std::vector<double>& out) {
    const std::size_t d = a.size();
    const std::size_t base = out.size();
    out.resize(base + 5 * d);
    double* p = out.data() + base;

    simd::add(a.data(), b.data(), p, d);
    simd::sub(a.data(), b.data(), p + d, d);
    simd::mul(a.data(), b.data(), p + 2 * d, d);

    std::vector<double> tmp_a(d), tmp_b(d);
    simd::signed_sqrt(a.data(), tmp_a.data(), d);
    simd::signed_sqrt(b.data(), tmp_b.data(), d);
    simd::add(tmp_a.data(), tmp_b.data(), p + 3 * d, d);

    simd::mul(a.data(), a.data(), tmp_a.data(), d);
    simd::mul(b.data(), b.data(), tmp_b.data(), d);
    simd::add(tmp_a.data(), tmp_b.data(), p + 4 * d, d);
}

double sigmoid(double x) {
    // Split on sign so the exp never overflows.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::vector<double> signed_sqrt(std::span<const double> v) {
    std::vector<double> out(v.size());
    simd::signed_sqrt(v.data(), out.data(), v.size());
    return out;
}

FusedPairFeature fuse_pair(const Embedding& x1, const Embedding& x2) {
    vec::check_same_dim(x1.dim(), x2.dim(), "fuse_pair");
    FusedPairFeature f;
    f.dim1 = x1.dim();
    f.values.reserve(5 * f.dim1);
    append_blocks(x1.values, x2.values, f.values);
    return f;
}

FusedPairFeature fuse_pair_joint(const Embedding& x1_a, const Embedding& x2_a,
                                 const Embedding& x1_b, const Embedding& x2_b) {
    vec::check_same_dim(x1_a.dim(), x2_a.dim(), "fuse_pair_joint(source A)");
    vec::check_same_dim(x1_b.dim(), x2_b.dim(), "fuse_pair_joint(source B)");
    FusedPairFeature f;
    f.dim1 = x1_a.dim();
    f.dim2 = x1_b.dim();
    f.values.reserve(5 * (f.dim1 + f.dim2));
    append_blocks(x1_a.values, x2_a.values, f.values);
    append_blocks(x1_b.values, x2_b.values, f.values);
    return f;
}

PairClassifier train_pair_classifier(const std::vector<std::vector<double>>& features,
                                     const std::vector<int>& labels,
                                     const ClassifierTrainConfig& cfg) {
    if (features.empty()) {
        throw Error(errkind::EmptyInput, "no training features");
    }
    if (features.size() != labels.size()) {
        throw Error(errkind::InvalidConfig,
                    std::to_string(labels.size()) + " labels for " +
                        std::to_string(features.size()) + " features");
    }
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        vec::check_same_dim(f.size(), dim, "train_pair_classifier");
    }
    const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 1; });
    const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
    if (!has_pos || !has_neg) {
        throw Error(errkind::SingleClass, "training labels are uniform");
    }

    Rng rng(cfg.seed);
    PairClassifier clf;
    clf.weights.resize(dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& w : clf.weights) {
        w = rng.uniform(-bound, bound);
    }

    const std::size_t m = features.size();
    const std::size_t batch = cfg.batch_size == 0 ? m : std::min(cfg.batch_size, m);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) {
        order[i] = i;
    }
    std::vector<double> grad_w(dim);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < m) {
            rng.shuffle(order);
        }
        for (std::size_t start = 0; start < m; start += batch) {
            const std::size_t end = std::min(start + batch, m);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto& x = features[order[k]];
                const double p =
                    sigmoid(simd::dot(clf.weights.data(), x.data(), dim) + clf.bias);
                const double residual = p - static_cast<double>(labels[order[k]]);
                simd::axpy(residual, x.data(), grad_w.data(), dim);
                grad_b += residual;
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            simd::axpy(-cfg.learning_rate * inv, grad_w.data(), clf.weights.data(), dim);
            clf.bias -= cfg.learning_rate * inv * grad_b;
        }
    }

    for (double w : clf.weights) {
        if (!std::isfinite(w)) {
            throw Error(errkind::NonFiniteLoss, "classifier diverged to non-finite weights");
        }
    }
    if (!std::isfinite(clf.bias)) {
        throw Error(errkind::NonFiniteLoss, "classifier diverged to non-finite bias");
    }
    return clf;
}

double classify_pair(const PairClassifier& clf, std::span<const double> feature) {
    vec::check_same_dim(feature.size(), clf.weights.size(), "classify_pair");
    return sigmoid(simd::dot(clf.weights.data(), feature.data(), feature.size()) + clf.bias);
}

}  // namespace kinkit
