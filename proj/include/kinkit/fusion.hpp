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
#include <vector>

#include "kinkit/embedding.hpp"

namespace kinkit {

/// Five-block pair descriptor: for each source, the concatenation of
/// x1+x2, x1-x2, x1*x2, ssqrt(x1)+ssqrt(x2), x1^2+x2^2 (length 5*D per
/// source).
struct FusedPairFeature {
    std::vector<double> values;
    std::size_t dim1 = 0;
    std::size_t dim2 = 0;  // zero for a single-source feature
};

struct PairClassifier {
    std::vector<double> weights;
    double bias = 0.0;
};

struct ClassifierTrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 200;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 42;
};

/// Elementwise sign(x) * sqrt(|x|). Keeps the square-root block defined
/// on signed features.
std::vector<double> signed_sqrt(std::span<const double> v);

FusedPairFeature fuse_pair(const Embedding& x1, const Embedding& x2);

/// Source-A blocks followed by source-B blocks; length 5*(D_A + D_B).
FusedPairFeature fuse_pair_joint(const Embedding& x1_a, const Embedding& x2_a,
                                 const Embedding& x1_b, const Embedding& x2_b);

/// Logistic regression over pair features (binary cross-entropy, seeded
/// gradient descent). Labels are 0/1; throws SingleClass when uniform.
PairClassifier train_pair_classifier(const std::vector<std::vector<double>>& features,
                                     const std::vector<int>& labels,
                                     const ClassifierTrainConfig& cfg);

/// sigmoid(weights . feature + bias), strictly inside (0, 1).
double classify_pair(const PairClassifier& clf, std::span<const double> feature);

}  // namespace kinkit
