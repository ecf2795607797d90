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

#include <algorithm>
#include <cmath>
#include <set>

#include "kinkit/retrieval.hpp"
#include "kinkit/rng.hpp"

using namespace kinkit;

namespace {

// Test-local oracle machinery: its own cosine, its own sort, its own AP
// accumulation; shares nothing with the pipeline implementation.
namespace oracle {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> mean_of_normalized(const std::vector<std::vector<double>>& members) {
    std::vector<double> out(members.front().size(), 0.0);
    for (const auto& m : members) {
        double n = 0.0;
        for (double v : m) {
            n += v * v;
        }
        n = std::sqrt(n);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += m[i] / n;
        }
    }
    for (auto& v : out) {
        v /= static_cast<double>(members.size());
    }
    return out;
}

// AP for one probe: rank gallery items by cosine (stable on index ties),
// then accumulate precision at each relevant position.
double average_precision(const std::vector<std::vector<double>>& probe_members,
                         const std::string& probe_family,
                         const std::vector<std::vector<double>>& gallery,
                         const std::vector<std::string>& gallery_families) {
    const auto q = mean_of_normalized(probe_members);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        scored.emplace_back(cosine(q, gallery[i]), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    std::size_t relevant_total = 0;
    for (const auto& fam : gallery_families) {
        relevant_total += fam == probe_family;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < scored.size(); ++rank) {
        if (gallery_families[scored[rank].second] == probe_family) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(relevant_total);
}

}  // namespace oracle

Embedding emb(const std::string& id, std::vector<double> v) {
    return Embedding{id, std::move(v)};
}

}  // namespace

TEST_CASE("aggregate_probe_mean hand-worked cases") {
    const ProbeSubject twin{"p", {emb("i1", {0.5, 0.0}), emb("i2", {2.0, 0.0})}};
    const auto agg = aggregate_probe_mean(twin);
    CHECK(agg.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(agg.values[1] == doctest::Approx(0.0).epsilon(1e-15));

    const ProbeSubject cancel{"p", {emb("i1", {1.0, 0.0}), emb("i2", {-1.0, 0.0})}};
    try {
        aggregate_probe_mean(cancel);
        FAIL("expected ZeroVector");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::ZeroVector);
    }

    const ProbeSubject diag{"p", {emb("i1", {1.0, 0.0}), emb("i2", {0.0, 1.0})}};
    const auto mixed = aggregate_probe_mean(diag);
    const double root_half = std::sqrt(0.5);
    CHECK(mixed.values[0] == doctest::Approx(root_half).epsilon(1e-14));
    CHECK(mixed.values[1] == doctest::Approx(root_half).epsilon(1e-14));
}

TEST_CASE("rank_gallery orders by descending cosine with index tie-breaks") {
    const ProbeSubject probe{"p", {emb("q", {1.0, 0.0})}};
    Gallery gallery;
    gallery.entries = {emb("g0", {1.0, 0.0}), emb("g1", {0.0, 1.0}), emb("g2", {0.6, 0.8})};

    const auto row = rank_gallery(probe, gallery, Aggregation::mean);
    CHECK(row.indices == std::vector<std::size_t>{0, 2, 1});
    CHECK(row.similarities[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row.similarities[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(row.similarities[2] == doctest::Approx(0.0).epsilon(1e-12));

    Gallery identical;
    identical.entries = {emb("g0", {1.0, 1.0}), emb("g1", {1.0, 1.0}), emb("g2", {1.0, 1.0})};
    const auto tied = rank_gallery(probe, identical, Aggregation::mean);
    CHECK(tied.indices == std::vector<std::size_t>{0, 1, 2});

    Gallery single;
    single.entries = {emb("g0", {3.0, 4.0})};
    CHECK(rank_gallery(probe, single, Aggregation::mean).indices ==
          std::vector<std::size_t>{0});
}

TEST_CASE("rank_gallery is invariant under positive gallery rescaling") {
    Rng rng(81);
    const ProbeSubject probe{"p", {emb("q", {0.3, -0.2, 0.9, 0.1})}};
    Gallery gallery;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> v(4);
        for (auto& x : v) {
            x = rng.gaussian();
        }
        gallery.entries.push_back(emb("g" + std::to_string(i), std::move(v)));
    }
    const auto base = rank_gallery(probe, gallery, Aggregation::mean);

    Gallery scaled = gallery;
    for (std::size_t i = 0; i < scaled.entries.size(); ++i) {
        const double factor = 0.25 * static_cast<double>(i + 1);
        for (auto& x : scaled.entries[i].values) {
            x *= factor;
        }
    }
    const auto rescaled = rank_gallery(probe, scaled, Aggregation::mean);
    CHECK(rescaled.indices == base.indices);
}

TEST_CASE("max_sim aggregation equals mean for single-image probes") {
    Rng rng(82);
    const ProbeSubject probe{"p", {emb("q", {0.4, 1.2, -0.3})}};
    Gallery gallery;
    for (int i = 0; i < 8; ++i) {
        gallery.entries.push_back(
            emb("g" + std::to_string(i), {rng.gaussian(), rng.gaussian(), rng.gaussian()}));
    }
    const auto mean_row = rank_gallery(probe, gallery, Aggregation::mean);
    const auto max_row = rank_gallery(probe, gallery, Aggregation::max_sim);
    CHECK(mean_row.indices == max_row.indices);
    for (std::size_t j = 0; j < mean_row.similarities.size(); ++j) {
        CHECK(max_row.similarities[j] ==
              doctest::Approx(mean_row.similarities[j]).epsilon(1e-12));
    }
}

TEST_CASE("build_rank_matrix rows are permutations with non-increasing similarity") {
    Rng rng(83);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 2 + rng.below(6);
        const std::size_t k = 1 + rng.below(6);
        const std::size_t n = 1 + rng.below(25);

        std::vector<ProbeSubject> probes;
        for (std::size_t i = 0; i < k; ++i) {
            ProbeSubject p{"p" + std::to_string(i), {}};
            const std::size_t members = 1 + rng.below(3);
            for (std::size_t m = 0; m < members; ++m) {
                std::vector<double> v(d);
                for (auto& x : v) {
                    x = rng.gaussian() + 0.1;  // keep away from the zero vector
                }
                p.embeddings.push_back(emb(p.probe_id + "_m" + std::to_string(m), v));
            }
            probes.push_back(std::move(p));
        }
        Gallery gallery;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(d);
            for (auto& x : v) {
                x = rng.gaussian() + 0.1;
            }
            gallery.entries.push_back(emb("g" + std::to_string(i), std::move(v)));
        }

        const auto strategy = trial % 2 == 0 ? Aggregation::mean : Aggregation::max_sim;
        const auto matrix = build_rank_matrix(probes, gallery, strategy);
        REQUIRE(matrix.rows.size() == k);
        for (std::size_t i = 0; i < k; ++i) {
            std::set<std::size_t> seen(matrix.rows[i].begin(), matrix.rows[i].end());
            CHECK(seen.size() == n);
            CHECK(*seen.begin() == 0);
            CHECK(*seen.rbegin() == n - 1);

            const auto row = rank_gallery(probes[i], gallery, strategy);
            CHECK(row.indices == matrix.rows[i]);
            for (std::size_t j = 1; j < row.similarities.size(); ++j) {
                CHECK(row.similarities[j] <= row.similarities[j - 1]);
            }
        }
    }
}

TEST_CASE("average_precision hand-worked cases") {
    CHECK(average_precision({true, false, true}, 2) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
    CHECK(average_precision({true, true, false, false}, 2) == 1.0);
    // Single relevant item ranked last: 1/N.
    CHECK(average_precision({false, false, false, true}, 1) ==
          doctest::Approx(0.25).epsilon(1e-15));

    try {
        average_precision({false, false}, 0);
        FAIL("expected NoRelevant");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::NoRelevant);
    }
}

TEST_CASE("average_precision with a cutoff only scores the head of the ranking") {
    // Relevant at ranks 1 and 4; cutoff 2 sees only the first.
    const std::vector<bool> flags = {true, false, false, true};
    CHECK(average_precision(flags, 2) ==
          doctest::Approx((1.0 + 2.0 / 4.0) / 2.0).epsilon(1e-15));
    CHECK(average_precision(flags, 2, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(average_precision(flags, 2, 100) == average_precision(flags, 2));
}

TEST_CASE("mean_average_precision matches the brute-force oracle") {
    Rng rng(84);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 3 + rng.below(5);
        const std::size_t families = 3 + rng.below(4);
        const std::size_t k = 2 + rng.below(5);
        const std::size_t n = 10 + rng.below(30);

        std::vector<std::vector<double>> centers;
        for (std::size_t f = 0; f < families; ++f) {
            std::vector<double> c(d);
            for (auto& x : c) {
                x = rng.gaussian();
            }
            centers.push_back(vec::l2_normalize(c));
        }

        FamilyLabels labels;
        std::vector<ProbeSubject> probes;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t fam = i % families;
            ProbeSubject p{"p" + std::to_string(i), {}};
            const std::size_t members = 1 + rng.below(2);
            for (std::size_t m = 0; m < members; ++m) {
                std::vector<double> v(d);
                for (std::size_t q = 0; q < d; ++q) {
                    v[q] = centers[fam][q] + 0.3 * rng.gaussian();
                }
                const std::string id = p.probe_id + "_m" + std::to_string(m);
                p.embeddings.push_back(emb(id, v));
                labels[id] = "fam" + std::to_string(fam);
            }
            probes.push_back(std::move(p));
        }

        Gallery gallery;
        std::vector<std::string> gallery_families;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t fam = i % families;  // every family is present
            std::vector<double> v(d);
            for (std::size_t q = 0; q < d; ++q) {
                v[q] = centers[fam][q] + 0.3 * rng.gaussian();
            }
            const std::string id = "g" + std::to_string(i);
            gallery.entries.push_back(emb(id, v));
            labels[id] = "fam" + std::to_string(fam);
            gallery_families.push_back("fam" + std::to_string(fam));
        }

        const auto matrix = build_rank_matrix(probes, gallery, Aggregation::mean);
        const auto result = mean_average_precision(matrix, probes, gallery, labels);

        double oracle_sum = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            std::vector<std::vector<double>> members;
            for (const auto& m : probes[i].embeddings) {
                members.push_back(m.values);
            }
            std::vector<std::vector<double>> gallery_values;
            for (const auto& g : gallery.entries) {
                gallery_values.push_back(g.values);
            }
            oracle_sum += oracle::average_precision(
                members, "fam" + std::to_string(i % families), gallery_values,
                gallery_families);
        }
        const double oracle_map = oracle_sum / static_cast<double>(probes.size());
        CHECK(std::fabs(result.map - oracle_map) <= 1e-12);
    }
}

TEST_CASE("mean_average_precision is invariant under probe permutation") {
    Rng rng(85);
    const std::size_t d = 4;
    FamilyLabels labels;
    std::vector<ProbeSubject> probes;
    Gallery gallery;
    for (int i = 0; i < 6; ++i) {
        const std::string fam = "fam" + std::to_string(i % 3);
        const std::string pid = "p" + std::to_string(i);
        std::vector<double> v(d);
        for (auto& x : v) {
            x = rng.gaussian();
        }
        probes.push_back({pid, {emb(pid + "_m0", v)}});
        labels[pid + "_m0"] = fam;
    }
    for (int i = 0; i < 15; ++i) {
        const std::string fam = "fam" + std::to_string(i % 3);
        const std::string gid = "g" + std::to_string(i);
        std::vector<double> v(d);
        for (auto& x : v) {
            x = rng.gaussian();
        }
        gallery.entries.push_back(emb(gid, v));
        labels[gid] = fam;
    }

    const auto matrix = build_rank_matrix(probes, gallery, Aggregation::mean);
    const auto base = mean_average_precision(matrix, probes, gallery, labels);

    std::vector<std::size_t> order = {3, 0, 5, 1, 4, 2};
    std::vector<ProbeSubject> shuffled;
    RankMatrix shuffled_matrix;
    for (std::size_t idx : order) {
        shuffled.push_back(probes[idx]);
        shuffled_matrix.probe_ids.push_back(matrix.probe_ids[idx]);
        shuffled_matrix.rows.push_back(matrix.rows[idx]);
    }
    const auto permuted = mean_average_precision(shuffled_matrix, shuffled, gallery, labels);
    CHECK(std::fabs(permuted.map - base.map) <= 1e-12);
}

TEST_CASE("mean_average_precision NoRelevant handling") {
    FamilyLabels labels = {{"p0_m0", "lonely"}, {"g0", "famA"}, {"g1", "famB"}};
    std::vector<ProbeSubject> probes = {{"p0", {emb("p0_m0", {1.0, 0.0})}}};
    Gallery gallery;
    gallery.entries = {emb("g0", {1.0, 0.0}), emb("g1", {0.0, 1.0})};
    const auto matrix = build_rank_matrix(probes, gallery, Aggregation::mean);

    try {
        mean_average_precision(matrix, probes, gallery, labels);
        FAIL("expected NoRelevant");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::NoRelevant);
    }

    MapOptions skip;
    skip.skip_no_relevant = true;
    try {
        mean_average_precision(matrix, probes, gallery, labels, skip);
        FAIL("expected NoRelevant (every probe skipped)");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::NoRelevant);
    }

    // Unlabeled gallery image.
    FamilyLabels incomplete = {{"p0_m0", "famA"}, {"g0", "famA"}};
    try {
        mean_average_precision(matrix, probes, gallery, incomplete);
        FAIL("expected UnknownImageId");
    } catch (const Error& e) {
        CHECK(e.kind() == errkind::UnknownImageId);
    }
}
