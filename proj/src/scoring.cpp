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

#include "kinkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kinkit {

void CalibrationSet::validate() const {
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& obs = observations[i];
        if (!std::isfinite(obs.distance) || obs.distance < 0.0) {
            throw Error(errkind::NonFiniteValue,
                        "calibration distance at index " + std::to_string(i) +
                            " must be finite and non-negative");
        }
        if (obs.kin_label != 0 && obs.kin_label != 1) {
            throw Error(errkind::InvalidLabel,
                        "calibration label at index " + std::to_string(i) +
                            " must be 0 or 1");
        }
    }
}

CdScorer::CdScorer(const CalibrationSet& cal, bool kin_only) {
    cal.validate();
    for (const auto& obs : cal.observations) {
        if (!kin_only || obs.kin_label == 1) {
            sorted_distances_.push_back(obs.distance);
        }
    }
    if (sorted_distances_.empty()) {
        throw Error(errkind::EmptyCalibration,
                    kin_only ? "no kin-labeled calibration distances"
                             : "empty calibration set");
    }
    std::sort(sorted_distances_.begin(), sorted_distances_.end());
}

double CdScorer::operator()(double d) const {
    const auto at_most = std::upper_bound(sorted_distances_.begin(), sorted_distances_.end(), d) -
                         sorted_distances_.begin();
    return 1.0 - static_cast<double>(at_most) / static_cast<double>(sorted_distances_.size());
}

IdwScorer::IdwScorer(const CalibrationSet& cal, double p, std::size_t k)
    : power_(p), k_(k), by_index_(cal.observations) {
    cal.validate();
    if (by_index_.empty()) {
        throw Error(errkind::EmptyCalibration, "empty calibration set");
    }
    if (!(p > 0.0)) {
        throw Error(errkind::InvalidConfig, "idw power must be > 0");
    }
    canonical_ = by_index_;
    std::sort(canonical_.begin(), canonical_.end(), [](const auto& a, const auto& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.kin_label < b.kin_label;
    });
}

double IdwScorer::operator()(double d) const {
    // Selection (and the exact-match rule) run over the k nearest points;
    // k = 0 selects everything.
    const std::size_t take = (k_ == 0 || k_ >= by_index_.size()) ? by_index_.size() : k_;

    const std::vector<CalibrationSet::Observation>* pool = &canonical_;
    std::vector<CalibrationSet::Observation> selected;
    if (take < by_index_.size()) {
        std::vector<std::size_t> idx(by_index_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return std::fabs(d - by_index_[a].distance) < std::fabs(d - by_index_[b].distance);
        });
        idx.resize(take);
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) {
            selected.push_back(by_index_[i]);
        }
        pool = &selected;
    }

    // Shepard's exact-interpolation limit.
    std::size_t match_count = 0;
    std::size_t match_kin = 0;
    for (const auto& obs : *pool) {
        if (obs.distance == d) {
            ++match_count;
            match_kin += static_cast<std::size_t>(obs.kin_label);
        }
    }
    if (match_count > 0) {
        return static_cast<double>(match_kin) / static_cast<double>(match_count);
    }

    double weight_sum = 0.0;
    double weighted_labels = 0.0;
    bool overflow = false;
    for (const auto& obs : *pool) {
        const double w = 1.0 / std::pow(std::fabs(d - obs.distance), power_);
        if (std::isinf(w)) {
            overflow = true;
            break;
        }
        weight_sum += w;
        weighted_labels += w * static_cast<double>(obs.kin_label);
    }
    if (overflow) {
        // Weights too large to represent: the nearest points dominate
        // completely, so average the labels at the minimal distance.
        double best = std::numeric_limits<double>::infinity();
        for (const auto& obs : *pool) {
            best = std::min(best, std::fabs(d - obs.distance));
        }
        std::size_t count = 0;
        std::size_t kin = 0;
        for (const auto& obs : *pool) {
            if (std::fabs(d - obs.distance) == best) {
                ++count;
                kin += static_cast<std::size_t>(obs.kin_label);
            }
        }
        return static_cast<double>(kin) / static_cast<double>(count);
    }
    return std::clamp(weighted_labels / weight_sum, 0.0, 1.0);
}

double cd_score(const CalibrationSet& cal, double d, bool kin_only) {
    return CdScorer(cal, kin_only)(d);
}

double idw_score(const CalibrationSet& cal, double d, double p, std::size_t k) {
    return IdwScorer(cal, p, k)(d);
}

int binarize(double score, double threshold) {
    return score >= threshold ? 1 : 0;
}

}  // namespace kinkit
