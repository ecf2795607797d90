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

#include <cstddef>
#include <optional>
#include <vector>

#include "kinkit/errors.hpp"

namespace kinkit {

/// Labeled (distance, kin) observations backing the CD and IDW maps.
struct CalibrationSet {
    struct Observation {
        double distance = 0.0;
        int kin_label = 0;  // 1 kin, 0 non-kin
    };
    std::vector<Observation> observations;

    void validate() const;  // non-negative finite distances, labels in {0,1}
};

enum class ScorerKind { raw_cosine, cd, idw, pair_classifier };

/// Pair descriptor fed to the classifier scorer.
enum class PairDescriptor { sqdiff, fused, fused_joint };

struct ScorerConfig {
    ScorerKind kind = ScorerKind::raw_cosine;
    double idw_power = 2.0;
    std::size_t idw_k = 0;  // 0 = use all calibration points
    std::optional<double> threshold;
    bool cd_kin_only = false;  // restrict the CD pool to kin-labeled distances
    PairDescriptor descriptor = PairDescriptor::sqdiff;
    bool symmetrize = false;  // average pair scores over both argument orders

    /// 0.6 for the raw-cosine scorer, 0.5 for the probability scorers,
    /// unless overridden.
    double effective_threshold() const {
        if (threshold) {
            return *threshold;
        }
        return kind == ScorerKind::raw_cosine ? 0.6 : 0.5;
    }
};

/// 1 - ECDF(d) over the calibration distances (right-continuous step
/// function): the fraction of calibration distances strictly greater
/// than d. Small distances map to high kin probability.
double cd_score(const CalibrationSet& cal, double d, bool kin_only = false);

/// Shepard interpolation of the kin labels: over the k calibration points
/// nearest to d (ties broken by ascending observation index; k = 0 means
/// all), sum(w_i y_i)/sum(w_i) with w_i = |d - d_i|^-p. Exact matches
/// short-circuit to the mean label of the matching points.
double idw_score(const CalibrationSet& cal, double d, double p = 2.0, std::size_t k = 0);

/// 1 if score >= threshold else 0 (boundary counts as kin).
int binarize(double score, double threshold);

// Prepared forms: validate and pre-sort once, then score many queries.

class CdScorer {
public:
    CdScorer(const CalibrationSet& cal, bool kin_only);
    double operator()(double d) const;

private:
    std::vector<double> sorted_distances_;
};

class IdwScorer {
public:
    IdwScorer(const CalibrationSet& cal, double p, std::size_t k);
    double operator()(double d) const;

private:
    double power_;
    std::size_t k_;
    // Canonical (distance, label) order makes the k=ALL sums independent
    // of the calibration file's row order.
    std::vector<CalibrationSet::Observation> canonical_;
    std::vector<CalibrationSet::Observation> by_index_;
};

}  // namespace kinkit
