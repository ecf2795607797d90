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

#include "kinkit/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "kinkit/simd/kernels.hpp"

namespace kinkit {

namespace vec {

void check_same_dim(std::size_t da, std::size_t db, const char* op) {
    if (da != db) {
        throw Error(errkind::DimensionMismatch,
                    std::string(op) + ": dimensions " + std::to_string(da) + " and " +
                        std::to_string(db) + " differ");
    }
}

void check_finite(std::span<const double> v, const std::string& context) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw Error(errkind::NonFiniteValue, context + ": non-finite value");
        }
    }
}

double norm(std::span<const double> v) {
    return std::sqrt(simd::dot(v.data(), v.data(), v.size()));
}

std::vector<double> l2_normalize(std::span<const double> v) {
    const double n = norm(v);
    if (!(n > kZeroNormEps)) {
        throw Error(errkind::ZeroVector,
                    "l2_normalize: norm " + std::to_string(n) + " <= 1e-12");
    }
    std::vector<double> out(v.size());
    simd::scale(v.data(), 1.0 / n, out.data(), v.size());
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    check_same_dim(a.size(), b.size(), "cosine_similarity");
    const double na = norm(a);
    const double nb = norm(b);
    if (!(na > kZeroNormEps) || !(nb > kZeroNormEps)) {
        throw Error(errkind::ZeroVector, "cosine_similarity: degenerate input norm");
    }
    const double cos = simd::dot(a.data(), b.data(), a.size()) / (na * nb);
    return std::clamp(cos, -1.0, 1.0);
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
    check_same_dim(a.size(), b.size(), "squared_euclidean");
    return simd::l2_sqr(a.data(), b.data(), a.size());
}

std::vector<double> squared_difference(std::span<const double> a, std::span<const double> b) {
    check_same_dim(a.size(), b.size(), "squared_difference");
    std::vector<double> out(a.size());
    simd::sqdiff(a.data(), b.data(), out.data(), a.size());
    return out;
}

}  // namespace vec

Embedding l2_normalize(const Embedding& v) {
    return Embedding{v.image_id, vec::l2_normalize(v.values)};
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    return vec::cosine_similarity(a.values, b.values);
}

double squared_euclidean(const Embedding& a, const Embedding& b) {
    return vec::squared_euclidean(a.values, b.values);
}

std::vector<double> squared_difference(const Embedding& a, const Embedding& b) {
    return vec::squared_difference(a.values, b.values);
}

void EmbeddingStore::insert(Embedding e) {
    if (e.image_id.empty()) {
        throw Error(errkind::MalformedRow, "embedding with empty image_id");
    }
    if (e.values.empty()) {
        throw Error(errkind::InconsistentDimension,
                    "embedding '" + e.image_id + "' has zero dimension");
    }
    vec::check_finite(e.values, "embedding '" + e.image_id + "'");
    if (entries_.empty()) {
        dimension_ = e.values.size();
    } else if (e.values.size() != dimension_) {
        throw Error(errkind::InconsistentDimension,
                    "embedding '" + e.image_id + "' has dimension " +
                        std::to_string(e.values.size()) + ", store has " +
                        std::to_string(dimension_));
    }
    auto [it, inserted] = index_.emplace(e.image_id, entries_.size());
    if (!inserted) {
        throw Error(errkind::DuplicateId, "duplicate image_id '" + e.image_id + "'");
    }
    entries_.push_back(std::move(e));
}

const Embedding& EmbeddingStore::at(const std::string& image_id) const {
    auto it = index_.find(image_id);
    if (it == index_.end()) {
        throw Error(errkind::UnknownImageId, "unknown image_id '" + image_id + "'");
    }
    return entries_[it->second];
}

bool EmbeddingStore::contains(const std::string& image_id) const {
    return index_.find(image_id) != index_.end();
}

}  // namespace kinkit
