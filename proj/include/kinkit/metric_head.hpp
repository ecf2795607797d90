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

#include "kinkit/losses.hpp"

namespace kinkit {

enum class LossKind { triplet, arcface };
enum class MiningStrategy { all, semi_hard, hard };

/// Linear projection head, the desk-scale stand-in for a deep extractor.
/// Row-major d_out x d_in.
struct ProjectionHead {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::vector<double> matrix;

    std::span<const double> row(std::size_t r) const { return {matrix.data() + r * d_in, d_in}; }
};

struct TrainConfig {
    LossKind loss_kind = LossKind::triplet;
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    MiningStrategy mining = MiningStrategy::semi_hard;
    double momentum = 0.0;         // 0 disables; 0.9 is the conventional setting
    bool mean_reduction = true;    // epoch history as mean per triplet/sample (else sum)
    std::size_t output_dim = 16;
    // Matrix entries finite-difference-checked on the first batch before
    // any update; 0 disables the check.
    std::size_t gradcheck_entries = 64;
    TripletConfig triplet;
    struct {
        double scale_s = 64.0;
        double margin_m = 0.5;
    } arcface;
};

struct LabeledEmbeddings {
    std::vector<Embedding> items;
    std::vector<std::size_t> labels;  // dense class indices
};

struct TripletIndices {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

/// Mines label-valid triplets (anchor/positive share a class, negative
/// does not), in canonical order sorted by (anchor, positive, negative)
/// image_id. `all` enumerates every combination; `semi_hard` keeps those
/// with d(a,p) < d(a,n) < d(a,p) + alpha; `hard` keeps, per (a,p), the
/// negative minimizing d(a,n). Distances are squared Euclidean between
/// the embeddings as given.
///
/// Throws InsufficientClasses when no valid triplet combination exists at
/// all; an empty result from a filtering strategy is valid output.
std::vector<TripletIndices> mine_triplet_indices(const LabeledEmbeddings& data,
                                                 MiningStrategy strategy, double margin_alpha);

std::vector<Triplet> mine_triplets(const LabeledEmbeddings& data, MiningStrategy strategy,
                                   double margin_alpha);

struct TrainResult {
    ProjectionHead head;
    std::vector<double> epoch_losses;
};

/// Seeded, single-threaded gradient descent on the projection matrix (and
/// the class-center matrix on the arcface route). Projected embeddings are
/// L2-normalized before every loss evaluation. Deterministic: identical
/// config and data give bit-identical results.
TrainResult train_projection(const LabeledEmbeddings& data, const TrainConfig& cfg);

/// l2_normalize(matrix * v). Throws ZeroVector if the projection
/// annihilates v.
Embedding project(const ProjectionHead& head, const Embedding& v);

std::vector<double> project_values(const ProjectionHead& head, std::span<const double> v);

}  // namespace kinkit
