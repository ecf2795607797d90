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

#include <string>
#include <unordered_map>
#include <vector>

#include "kinkit/embedding.hpp"

namespace kinkit {

struct ProbeSubject {
    std::string probe_id;
    std::vector<Embedding> embeddings;  // one or more images of the subject
};

struct Gallery {
    std::vector<Embedding> entries;  // indexed 0..N-1
};

/// K rows, each a permutation of gallery indices ordered by descending
/// similarity to the corresponding probe.
struct RankMatrix {
    std::vector<std::string> probe_ids;
    std::vector<std::vector<std::size_t>> rows;
};

/// image_id -> family_id; the MAP ground truth.
using FamilyLabels = std::unordered_map<std::string, std::string>;

enum class Aggregation { mean, max_sim };

/// Mean aggregation: L2-normalize the members, average, renormalize.
/// Throws ZeroVector on exact cancellation. (max_sim defers aggregation
/// to scoring time: a gallery score is the max over member cosines.)
Embedding aggregate_probe_mean(const ProbeSubject& subject);

struct RankedRow {
    std::vector<std::size_t> indices;       // descending similarity
    std::vector<double> similarities;       // aligned with indices
};

/// Exhaustive cosine ranking of the gallery against one probe; ties break
/// toward the smaller gallery index.
RankedRow rank_gallery(const ProbeSubject& subject, const Gallery& gallery,
                       Aggregation strategy);

RankMatrix build_rank_matrix(const std::vector<ProbeSubject>& probes, const Gallery& gallery,
                             Aggregation strategy);

/// (1/R) * sum_j Precision@j * rel(j) over the ranked relevance flags.
/// `cutoff` of 0 scores the full ranking; otherwise only the top `cutoff`
/// ranks contribute (the normalizer stays R).
double average_precision(const std::vector<bool>& ranked_relevance, std::size_t num_relevant,
                         std::size_t cutoff = 0);

struct MapOptions {
    std::size_t cutoff = 0;          // 0 = full ranking
    bool skip_no_relevant = false;   // skip probes without relevant items
};

struct MapResult {
    double map = 0.0;
    std::vector<std::pair<std::string, double>> per_probe;  // probes actually scored
    std::vector<std::string> skipped;                       // probes without relevant items
};

/// Mean over probes of average precision; a gallery item is relevant when
/// it shares the probe's family_id.
MapResult mean_average_precision(const RankMatrix& matrix,
                                 const std::vector<ProbeSubject>& probes,
                                 const Gallery& gallery, const FamilyLabels& labels,
                                 const MapOptions& options = {});

}  // namespace kinkit
