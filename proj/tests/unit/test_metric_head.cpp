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

#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "kinkit/metric_head.hpp"
#include "kinkit/rng.hpp"

using namespace kinkit;

namespace {

LabeledEmbeddings two_by_two() {
    LabeledEmbeddings data;
    data.items = {{"a0", {0.0, 0.0}}, {"a1", {0.1, 0.0}}, {"b0", {5.0, 5.0}},
                  {"b1", {5.1, 5.0}}};
    data.labels = {0, 0, 1, 1};
    return data;
}

// Brute-force oracle: every index triple, validity re-derived from labels.
std::size_t count_valid_triplets(const LabeledEmbeddings& data) {
    std::size_t count = 0;
    for (std::size_t a = 0; a < data.items.size(); ++a) {
        for (std::size_t p = 0; p < data.items.size(); ++p) {
            for (std::size_t n = 0; n < data.items.size(); ++n) {
                if (a != p && data.labels[a] == data.labels[p] &&
                    data.labels[n] != data.labels[a]) {
                    ++count;
                }
            }
        }
    }
    return count;
}

LabeledEmbeddings gaussian_clusters(Rng& rng, std::size_t families, std::size_t per_family,
                                    std::size_t dim, double sigma) {
    LabeledEmbeddings data;
    for (std::size_t f = 0; f < families; ++f) {
        std::vector<double> center(dim);
        for (auto& c : center) {
            c = rng.gaussian();
        }
        center = vec::l2_normalize(center);
        for (std::size_t i = 0; i < per_family; ++i) {
            std::vector<double> v(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                v[k] = center[k] + sigma * rng.gaussian();
            }
            data.items.push_back(
                {"f" + std::to_string(f) + "_i" + std::to_string(i), std::move(v)});
            data.labels.push_back(f);
        }
    }
    return data;
}

}  // namespace

TEST_CASE("mine_triplets: exhaustive strategy matches hand counts") {
    const auto data = two_by_two();
    const auto triplets = mine_triplet_indices(data, MiningStrategy::all, 0.2);
    CHECK(triplets.size() == 8);  // 2 ordered (a,p) pairs per class x 2 negatives
    CHECK(triplets.size() == count_valid_triplets(data));
    for (const auto& t : triplets) {
        CHECK(data.labels[t.anchor] == data.labels[t.positive]);
        CHECK(t.anchor != t.positive);
        CHECK(data.labels[t.negative] != data.labels[t.anchor]);
    }
}

TEST_CASE("mine_triplets: count law over random labeled sets") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        LabeledEmbeddings data;
        const std::size_t total = 3 + rng.below(12);
        const std::size_t classes = 2 + rng.below(3);
        for (std::size_t i = 0; i < total; ++i) {
            data.items.push_back({"e" + std::to_string(i), {rng.gaussian(), rng.gaussian()}});
            data.labels.push_back(rng.below(classes));
        }
        std::map<std::size_t, std::size_t> sizes;
        for (auto label : data.labels) {
            ++sizes[label];
        }
        std::size_t expected = 0;
        for (const auto& [label, size] : sizes) {
            expected += size * (size - 1) * (total - size);
        }
        const bool valid = sizes.size() >= 2 && expected > 0;

        if (!valid) {
            CHECK_THROWS_AS(mine_triplet_indices(data, MiningStrategy::all, 0.2), Error);
            continue;
        }
        const auto triplets = mine_triplet_indices(data, MiningStrategy::all, 0.2);
        CHECK(triplets.size() == expected);
        CHECK(triplets.size() == count_valid_triplets(data));
        for (const auto& t : triplets) {
            CHECK(t.anchor != t.positive);
            CHECK(data.labels[t.anchor] == data.labels[t.positive]);
            CHECK(data.labels[t.negative] != data.labels[t.anchor]);
        }
        // Canonical order: sorted by identifier triple.
        const auto key = [&](const TripletIndices& t) {
            return std::tuple(data.items[t.anchor].image_id, data.items[t.positive].image_id,
                              data.items[t.negative].image_id);
        };
        for (std::size_t i = 1; i < triplets.size(); ++i) {
            CHECK(key(triplets[i - 1]) < key(triplets[i]));
        }
    }
}

TEST_CASE("mine_triplets: single class and empty windows") {
    LabeledEmbeddings single;
    single.items = {{"x", {1.0}}, {"y", {2.0}}};
    single.labels = {0, 0};
    try {
        mine_triplet_indices(single, MiningStrategy::all, 0.2);
        FAIL("expected InsufficientClasses");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::InsufficientClasses);
    }

    // Every negative far beyond d(a,p) + alpha: semi-hard window is empty.
    LabeledEmbeddings far;
    far.items = {{"a", {0.0, 0.0}}, {"b", {0.1, 0.0}}, {"c", {100.0, 0.0}}};
    far.labels = {0, 0, 1};
    CHECK(mine_triplet_indices(far, MiningStrategy::semi_hard, 0.2).empty());
    CHECK(mine_triplets(far, MiningStrategy::all, 0.2).size() == 2);
}

TEST_CASE("mine_triplets: semi-hard window and hard negatives") {
    // d(a,p)=1; negatives at squared distances 4 (inside the alpha=4
    // window) and 16 (outside).
    LabeledEmbeddings data;
    data.items = {{"a", {0.0, 0.0}},
                  {"p", {1.0, 0.0}},
                  {"n_near", {2.0, 0.0}},
                  {"n_far", {4.0, 0.0}}};
    data.labels = {0, 0, 1, 1};

    const auto semi = mine_triplet_indices(data, MiningStrategy::semi_hard, 4.0);
    // Window (1, 5): only n_near at 4 qualifies, and only for anchor a;
    // for anchor p, d(p,n_near)=1 is not strictly above d(p,a)=1 and
    // d(p,n_far)=9 is outside.
    REQUIRE(semi.size() == 1);
    CHECK(data.items[semi[0].anchor].image_id == "a");
    CHECK(data.items[semi[0].negative].image_id == "n_near");

    const auto hard = mine_triplet_indices(data, MiningStrategy::hard, 4.0);
    REQUIRE(hard.size() == 4);  // one per (a,p) ordered pair, both classes
    for (const auto& t : hard) {
        // Hardest negative for class-0 anchors is n_near; for class-1
        // anchors it is p (nearest of {a, p} to both negatives).
        if (data.labels[t.anchor] == 0) {
            CHECK(data.items[t.negative].image_id == "n_near");
        } else {
            CHECK(data.items[t.negative].image_id == "p");
        }
    }
}

TEST_CASE("project: identity, annihilation, and rectangular maps") {
    ProjectionHead identity{2, 2, {1.0, 0.0, 0.0, 1.0}};
    const Embedding unit{"u", {0.6, 0.8}};
    const auto projected = project(identity, unit);
    CHECK(projected.values[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(projected.values[1] == doctest::Approx(0.8).epsilon(1e-15));

    ProjectionHead zeros{2, 2, {0.0, 0.0, 0.0, 0.0}};
    try {
        project(zeros, unit);
        FAIL("expected ZeroVector");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::ZeroVector);
    }

    ProjectionHead rect{3, 2, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0}};
    const auto mapped = project(rect, Embedding{"v", {3.0, 4.0, 12.0}});
    CHECK(mapped.values[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(mapped.values[1] == doctest::Approx(0.8).epsilon(1e-12));

    CHECK_THROWS_AS(project(rect, Embedding{"w", {1.0, 2.0}}), Error);
}

TEST_CASE("train_projection: determinism, zero learning rate, loss improvement") {
    Rng rng(42);
    const auto data = gaussian_clusters(rng, 4, 6, 8, 0.15);

    TrainConfig cfg;
    cfg.loss_kind = LossKind::triplet;
    cfg.learning_rate = 0.05;
    cfg.epochs = 12;
    cfg.batch_size = 16;
    cfg.seed = 7;
    cfg.mining = MiningStrategy::semi_hard;
    cfg.output_dim = 4;
    cfg.triplet.margin_alpha = 0.2;

    const auto first = train_projection(data, cfg);
    const auto second = train_projection(data, cfg);
    CHECK(first.epoch_losses == second.epoch_losses);  // bitwise
    CHECK(first.head.matrix == second.head.matrix);
    CHECK(first.epoch_losses.size() == cfg.epochs);

    TrainConfig frozen = cfg;
    frozen.learning_rate = 0.0;
    const auto still = train_projection(data, frozen);
    for (std::size_t e = 1; e < still.epoch_losses.size(); ++e) {
        CHECK(still.epoch_losses[e] == still.epoch_losses[0]);
    }

    CHECK(first.epoch_losses.back() < first.epoch_losses.front());
}

TEST_CASE("train_projection: arcface route runs, improves, deterministic") {
    Rng rng(43);
    const auto data = gaussian_clusters(rng, 3, 8, 8, 0.1);

    TrainConfig cfg;
    cfg.loss_kind = LossKind::arcface;
    cfg.learning_rate = 0.01;
    cfg.epochs = 15;
    cfg.batch_size = 8;
    cfg.seed = 5;
    cfg.output_dim = 4;
    cfg.arcface.scale_s = 16.0;
    cfg.arcface.margin_m = 0.3;

    const auto result = train_projection(data, cfg);
    CHECK(result.epoch_losses.size() == cfg.epochs);
    CHECK(result.epoch_losses.back() < result.epoch_losses.front());

    const auto repeat = train_projection(data, cfg);
    CHECK(repeat.head.matrix == result.head.matrix);
}

TEST_CASE("train_projection separates cluster members") {
    Rng rng(44);
    const auto train_data = gaussian_clusters(rng, 5, 10, 16, 0.1);

    TrainConfig cfg;
    cfg.loss_kind = LossKind::triplet;
    cfg.learning_rate = 0.05;
    cfg.epochs = 25;
    cfg.batch_size = 32;
    cfg.seed = 11;
    cfg.output_dim = 8;

    const auto result = train_projection(train_data, cfg);

    double same_sum = 0.0;
    double cross_sum = 0.0;
    std::size_t same_n = 0;
    std::size_t cross_n = 0;
    Rng eval_rng(45);
    for (int k = 0; k < 400; ++k) {
        const std::size_t i = eval_rng.below(train_data.items.size());
        const std::size_t j = eval_rng.below(train_data.items.size());
        if (i == j) {
            continue;
        }
        const auto pi = project(result.head, train_data.items[i]);
        const auto pj = project(result.head, train_data.items[j]);
        const double cos = cosine_similarity(pi, pj);
        if (train_data.labels[i] == train_data.labels[j]) {
            same_sum += cos;
            ++same_n;
        } else {
            cross_sum += cos;
            ++cross_n;
        }
    }
    REQUIRE(same_n > 0);
    REQUIRE(cross_n > 0);
    CHECK(same_sum / static_cast<double>(same_n) >
          cross_sum / static_cast<double>(cross_n));
}

TEST_CASE("train_projection validates its config") {
    const auto data = two_by_two();
    TrainConfig cfg;
    cfg.batch_size = 100;  // > dataset size
    try {
        train_projection(data, cfg);
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::InvalidConfig);
    }
}
