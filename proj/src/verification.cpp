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

#include "kinkit/verification.hpp"

#include <unordered_map>

namespace kinkit {

namespace {

double normalized_sq_distance(const Embedding& a, const Embedding& b) {
    return vec::squared_euclidean(vec::l2_normalize(a.values), vec::l2_normalize(b.values));
}

PairQuery swapped(const PairQuery& q) {
    PairQuery s = q;
    std::swap(s.image_id_1, s.image_id_2);
    return s;
}

}  // namespace

std::vector<double> pair_descriptor(const EmbeddingStore& store, const EmbeddingStore* store2,
                                    const PairQuery& query, PairDescriptor kind) {
    const Embedding& a = store.at(query.image_id_1);
    const Embedding& b = store.at(query.image_id_2);
    switch (kind) {
        case PairDescriptor::sqdiff:
            return vec::squared_difference(vec::l2_normalize(a.values),
                                           vec::l2_normalize(b.values));
        case PairDescriptor::fused:
            return fuse_pair(a, b).values;
        case PairDescriptor::fused_joint: {
            if (store2 == nullptr) {
                throw Error(errkind::InvalidConfig,
                            "fused_joint descriptor needs a second embedding store");
            }
            const Embedding& a2 = store2->at(query.image_id_1);
            const Embedding& b2 = store2->at(query.image_id_2);
            return fuse_pair_joint(a, b, a2, b2).values;
        }
    }
    throw Error(errkind::InvalidConfig, "unknown pair descriptor");
}

std::vector<PairPrediction> verify_pairs(const EmbeddingStore& store,
                                         const std::vector<PairQuery>& queries,
                                         const ScorerConfig& scorer,
                                         const CalibrationSet* calibration,
                                         const PairClassifier* classifier,
                                         const EmbeddingStore* store2) {
    std::optional<CdScorer> cd;
    std::optional<IdwScorer> idw;
    if (scorer.kind == ScorerKind::cd || scorer.kind == ScorerKind::idw) {
        if (calibration == nullptr) {
            throw Error(errkind::MissingCalibration,
                        "cd/idw scorers need a calibration set");
        }
        if (scorer.kind == ScorerKind::cd) {
            cd.emplace(*calibration, scorer.cd_kin_only);
        } else {
            idw.emplace(*calibration, scorer.idw_power, scorer.idw_k);
        }
    }
    if (scorer.kind == ScorerKind::pair_classifier && classifier == nullptr) {
        throw Error(errkind::MissingClassifier, "pair_classifier scorer needs a classifier");
    }

    const double threshold = scorer.effective_threshold();
    std::vector<PairPrediction> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        double score = 0.0;
        switch (scorer.kind) {
            case ScorerKind::raw_cosine:
                score = cosine_similarity(store.at(q.image_id_1), store.at(q.image_id_2));
                break;
            case ScorerKind::cd:
                score = (*cd)(normalized_sq_distance(store.at(q.image_id_1),
                                                     store.at(q.image_id_2)));
                break;
            case ScorerKind::idw:
                score = (*idw)(normalized_sq_distance(store.at(q.image_id_1),
                                                      store.at(q.image_id_2)));
                break;
            case ScorerKind::pair_classifier: {
                score = classify_pair(*classifier,
                                      pair_descriptor(store, store2, q, scorer.descriptor));
                if (scorer.symmetrize) {
                    const double rev = classify_pair(
                        *classifier, pair_descriptor(store, store2, swapped(q),
                                                     scorer.descriptor));
                    score = 0.5 * (score + rev);
                }
                break;
            }
        }
        out.push_back({q.pair_id, score, binarize(score, threshold)});
    }
    return out;
}

VerificationReport evaluate_verification(const std::vector<PairPrediction>& predictions,
                                         const std::vector<PairQuery>& labeled_queries) {
    if (predictions.empty()) {
        throw Error(errkind::EmptyInput, "no predictions to evaluate");
    }
    std::unordered_map<std::string, const PairQuery*> by_id;
    for (const auto& q : labeled_queries) {
        by_id.emplace(q.pair_id, &q);
    }

    VerificationReport report;
    std::map<std::string, std::size_t> correct_by_cat;
    std::size_t correct = 0;
    for (const auto& pred : predictions) {
        auto it = by_id.find(pred.pair_id);
        if (it == by_id.end() || !it->second->label.has_value()) {
            throw Error(errkind::MissingLabel,
                        "no ground-truth label for pair '" + pred.pair_id + "'");
        }
        const PairQuery& q = *it->second;
        const bool hit = pred.label == *q.label;
        correct += hit;
        correct_by_cat[q.ptype] += hit;
        report.per_category_count[q.ptype] += 1;
    }
    report.total = predictions.size();
    report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(report.total);

    double macro_sum = 0.0;
    for (const auto& [cat, count] : report.per_category_count) {
        const double acc = static_cast<double>(correct_by_cat[cat]) / static_cast<double>(count);
        report.per_category_accuracy[cat] = acc;
        macro_sum += acc;
    }
    report.macro_average = macro_sum / static_cast<double>(report.per_category_count.size());
    return report;
}

}  // namespace kinkit
