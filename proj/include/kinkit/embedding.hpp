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

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kinkit/errors.hpp"

namespace kinkit {

// Norms below this are treated as degenerate (ZeroVector).
inline constexpr double kZeroNormEps = 1e-12;

/// A face's feature descriptor: an identified fixed-length real vector.
struct Embedding {
    std::string image_id;
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
};

// Span-level primitives. All Embedding operations are thin wrappers over
// these; the trainers and pipelines call them directly on raw buffers.
namespace vec {

double norm(std::span<const double> v);

/// v / ||v||. Throws ZeroVector when ||v|| <= 1e-12.
std::vector<double> l2_normalize(std::span<const double> v);

/// dot(a,b) / (||a|| ||b||), clamped to [-1, 1]. Symmetric in its
/// arguments exactly: both sides multiply identical lane pairs.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double squared_euclidean(std::span<const double> a, std::span<const double> b);

std::vector<double> squared_difference(std::span<const double> a, std::span<const double> b);

void check_same_dim(std::size_t da, std::size_t db, const char* op);
void check_finite(std::span<const double> v, const std::string& context);

}  // namespace vec

Embedding l2_normalize(const Embedding& v);
double cosine_similarity(const Embedding& a, const Embedding& b);
double squared_euclidean(const Embedding& a, const Embedding& b);
std::vector<double> squared_difference(const Embedding& a, const Embedding& b);

/// Read-only after load; all entries share one dimension, ids are unique.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    /// Rejects empty ids, duplicate ids, non-finite values, and dimension
    /// drift against the store's dimension.
    void insert(Embedding e);

    const Embedding& at(const std::string& image_id) const;  // throws UnknownImageId
    bool contains(const std::string& image_id) const;

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t dimension() const noexcept { return dimension_; }

    /// Entries in insertion order.
    const std::vector<Embedding>& entries() const noexcept { return entries_; }

private:
    std::vector<Embedding> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t dimension_ = 0;
};

}  // namespace kinkit
