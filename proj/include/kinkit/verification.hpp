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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kinkit/embedding.hpp"
#include "kinkit/fusion.hpp"
#include "kinkit/scoring.hpp"

namespace kinkit {

struct PairQuery {
    std::string pair_id;
    std::string image_id_1;
    std::string image_id_2;
    std::string ptype;  // relationship category, e.g. "F-D"; opaque
    std::optional<int> label;
};

struct PairPrediction {
    std::string pair_id;
    double score = 0.0;
    int label = 0;
};

struct VerificationReport {
    double overall_accuracy = 0.0;
    double macro_average = 0.0;
    std::map<std::string, double> per_category_accuracy;
    std::map<std::string, std::size_t> per_category_count;
    std::size_t total = 0;
};

/// Builds the descriptor the pair-classifier scorer consumes. sqdiff is
/// the squared difference of the L2-normalized embeddings; fused is the
/// five-block combination of the raw embeddings; fused_joint additionally
/// concatenates the blocks from a second store.
std::vector<double> pair_descriptor(const EmbeddingStore& store,
                                    const EmbeddingStore* store2, const PairQuery& query,
                                    PairDescriptor kind);

/// Scores each query (output order equals input order) and binarizes at
/// the scorer's effective threshold. cd/idw score the squared Euclidean
/// distance between the L2-normalized embeddings; raw_cosine scores the
/// cosine directly.
std::vector<PairPrediction> verify_pairs(const EmbeddingStore& store,
                                         const std::vector<PairQuery>& queries,
                                         const ScorerConfig& scorer,
                                         const CalibrationSet* calibration = nullptr,
                                         const PairClassifier* classifier = nullptr,
                                         const EmbeddingStore* store2 = nullptr);

/// Accuracy against the queries' labels: micro (overall), per ptype, and
/// the macro mean over categories.
VerificationReport evaluate_verification(const std::vector<PairPrediction>& predictions,
                                         const std::vector<PairQuery>& labeled_queries);

}  // namespace kinkit
