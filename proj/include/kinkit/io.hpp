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
#include <utility>
#include <vector>

#include "kinkit/embedding.hpp"
#include "kinkit/fusion.hpp"
#include "kinkit/metric_head.hpp"
#include "kinkit/retrieval.hpp"
#include "kinkit/scoring.hpp"
#include "kinkit/verification.hpp"

// CSV formats, the toolkit's public contract. All files are UTF-8 with
// '.' decimal separators and LF line endings; writers render doubles as
// the shortest decimal that round-trips the 64-bit value, so every
// write/load pair is lossless.

namespace kinkit::io {

/// Shortest round-trip rendering of a double.
std::string format_double(double v);

/// Strict full-token parse (scientific notation accepted).
double parse_double(const std::string& token, const std::string& context);

/// Header `image_id,v0,...,v{D-1}`; D inferred from the header.
EmbeddingStore load_embeddings(const std::string& path);
void write_embeddings(const std::string& path, const EmbeddingStore& store);

/// Header `pair_id,image_id_1,image_id_2,ptype` with optional trailing
/// `label` column (0/1).
std::vector<PairQuery> load_pairs(const std::string& path);

/// Probe header `probe_id,image_id` (repeated probe_id groups images per
/// subject, first-appearance order); gallery header
/// `gallery_index,image_id` with contiguous 0-based indices. Image ids
/// must resolve in the store.
std::pair<std::vector<ProbeSubject>, Gallery> load_probes_gallery(
    const std::string& probe_path, const std::string& gallery_path,
    const EmbeddingStore& store);

/// Header `image_id,family_id`.
FamilyLabels load_family_labels(const std::string& path);

/// Header `distance,label`.
CalibrationSet load_calibration(const std::string& path);
void write_calibration(const std::string& path, const CalibrationSet& cal);

/// Header `pair_id,score,label`.
void write_predictions(const std::string& path, const std::vector<PairPrediction>& predictions);
std::vector<PairPrediction> load_predictions(const std::string& path);

/// Header `probe_id,r0,...,r{N-1}`, one row per probe.
void write_rank_matrix(const std::string& path, const RankMatrix& matrix);
RankMatrix load_rank_matrix(const std::string& path);

/// Header `row,c0,...,c{d_in-1}`, one row per output dimension.
void write_projection_head(const std::string& path, const ProjectionHead& head);
ProjectionHead load_projection_head(const std::string& path);

/// A `bias,<value>` row followed by `w,<index>,<value>` rows.
void write_pair_classifier(const std::string& path, const PairClassifier& clf);
PairClassifier load_pair_classifier(const std::string& path);

/// Header `pair_id,f0,...,f{L-1}`.
void write_fused_features(const std::string& path,
                          const std::vector<std::string>& pair_ids,
                          const std::vector<FusedPairFeature>& features);

/// Header `scope,category,count,accuracy` with overall, per-category, and
/// macro rows.
void write_verification_report(const std::string& path, const VerificationReport& report);

/// Header `probe_id,average_precision`.
void write_probe_aps(const std::string& path, const MapResult& result);

}  // namespace kinkit::io
