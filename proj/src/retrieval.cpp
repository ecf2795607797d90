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

#include "kinkit/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "kinkit/simd/kernels.hpp"

namespace kinkit {

namespace {

void validate_probe(const ProbeSubject& subject) {
    if (subject.embeddings.empty()) {
        throw Error(errkind::EmptyInput, "probe '" + subject.probe_id + "' has no embeddings");
    }
    const std::size_t d = subject.embeddings.front().dim();
    for (const auto& e : subject.embeddings) {
        vec::check_same_dim(e.dim(), d, "probe embeddings");
    }
}

const std::string& family_of(const FamilyLabels& labels, const std::string& image_id) {
    auto it = labels.find(image_id);
    if (it == labels.end()) {
        throw Error(errkind::UnknownImageId,
                    "no family label for image '" + image_id + "'");
    }
    return it->second;
}

}  // namespace

Embedding aggregate_probe_mean(const ProbeSubject& subject) {
    validate_probe(subject);
    const std::size_t d = subject.embeddings.front().dim();
    std::vector<double> mean(d, 0.0);
    for (const auto& e : subject.embeddings) {
        const auto unit = vec::l2_normalize(e.values);
        simd::add(mean.data(), unit.data(), mean.data(), d);
    }
    simd::scale(mean.data(), 1.0 / static_cast<double>(subject.embeddings.size()), mean.data(),
                d);
    try {
        return Embedding{subject.probe_id, vec::l2_normalize(mean)};
    } catch (const Error& e) {
        if (e.kind() == errkind::ZeroVector) {
            throw Error(errkind::ZeroVector,
                        "probe '" + subject.probe_id + "': member embeddings cancel in the mean");
        }
        throw;
    }
}

RankedRow rank_gallery(const ProbeSubject& subject, const Gallery& gallery,
                       Aggregation strategy) {
    validate_probe(subject);
    if (gallery.entries.empty()) {
        throw Error(errkind::EmptyInput, "empty gallery");
    }

    const std::size_t n = gallery.entries.size();
    std::vector<double> sims(n);
    if (strategy == Aggregation::mean) {
        const Embedding agg = aggregate_probe_mean(subject);
        for (std::size_t i = 0; i < n; ++i) {
            sims[i] = cosine_similarity(agg, gallery.entries[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double best = -2.0;
            for (const auto& member : subject.embeddings) {
                best = std::max(best, cosine_similarity(member, gallery.entries[i]));
            }
            sims[i] = best;
        }
    }

    RankedRow row;
    row.indices.resize(n);
    std::iota(row.indices.begin(), row.indices.end(), std::size_t{0});
    std::sort(row.indices.begin(), row.indices.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) {
            return sims[a] > sims[b];
        }
        return a < b;  // deterministic tie-break
    });
    row.similarities.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        row.similarities[j] = sims[row.indices[j]];
    }
    return row;
}

RankMatrix build_rank_matrix(const std::vector<ProbeSubject>& probes, const Gallery& gallery,
                             Aggregation strategy) {
    if (probes.empty()) {
        throw Error(errkind::EmptyInput, "no probe subjects");
    }
    RankMatrix matrix;
    matrix.probe_ids.reserve(probes.size());
    for (const auto& p : probes) {
        matrix.probe_ids.push_back(p.probe_id);
    }
    matrix.rows.resize(probes.size());

    // Rows are independent; errors are collected and re-thrown with the
    // probe attached so parallel order never changes the report.
    std::vector<std::string> errors(probes.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                matrix.rows[i] = rank_gallery(probes[i], gallery, strategy).indices;
            } catch (const Error& e) {
                errors[i] = std::string(e.kind()) + "|probe '" + probes[i].probe_id +
                            "': " + e.what();
            }
        }
    };

    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min({hw, probes.size(), std::size_t{8}});
    if (workers <= 1 || probes.size() * gallery.entries.size() < 4096) {
        work(0, probes.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (probes.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(begin + chunk, probes.size());
            if (begin < end) {
                pool.emplace_back(work, begin, end);
            }
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    for (const auto& err : errors) {
        if (!err.empty()) {
            const auto sep = err.find('|');
            throw Error(err.substr(0, sep), err.substr(sep + 1));
        }
    }
    return matrix;
}

double average_precision(const std::vector<bool>& ranked_relevance, std::size_t num_relevant,
                         std::size_t cutoff) {
    if (num_relevant == 0) {
        throw Error(errkind::NoRelevant, "average_precision with zero relevant items");
    }
    std::size_t ones = 0;
    for (bool r : ranked_relevance) {
        ones += r;
    }
    if (ones != num_relevant) {
        throw Error(errkind::InvalidConfig,
                    "relevance flags carry " + std::to_string(ones) + " ones, expected " +
                        std::to_string(num_relevant));
    }
    const std::size_t limit = (cutoff == 0 || cutoff > ranked_relevance.size())
                                  ? ranked_relevance.size()
                                  : cutoff;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < limit; ++j) {
        if (ranked_relevance[j]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(j + 1);
        }
    }
    return sum / static_cast<double>(num_relevant);
}

MapResult mean_average_precision(const RankMatrix& matrix,
                                 const std::vector<ProbeSubject>& probes,
                                 const Gallery& gallery, const FamilyLabels& labels,
                                 const MapOptions& options) {
    if (matrix.rows.empty()) {
        throw Error(errkind::EmptyInput, "empty rank matrix");
    }
    if (matrix.rows.size() != probes.size()) {
        throw Error(errkind::InvalidConfig,
                    "rank matrix has " + std::to_string(matrix.rows.size()) + " rows for " +
                        std::to_string(probes.size()) + " probes");
    }

    std::vector<std::string> gallery_families;
    gallery_families.reserve(gallery.entries.size());
    for (const auto& e : gallery.entries) {
        gallery_families.push_back(family_of(labels, e.image_id));
    }

    MapResult result;
    double sum = 0.0;
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        validate_probe(probes[i]);
        if (matrix.probe_ids[i] != probes[i].probe_id) {
            throw Error(errkind::InvalidConfig,
                        "rank matrix row " + std::to_string(i) + " is for probe '" +
                            matrix.probe_ids[i] + "', expected '" + probes[i].probe_id + "'");
        }
        const std::string& family = family_of(labels, probes[i].embeddings.front().image_id);
        std::size_t relevant = 0;
        for (const auto& fam : gallery_families) {
            relevant += fam == family;
        }
        if (relevant == 0) {
            if (options.skip_no_relevant) {
                result.skipped.push_back(matrix.probe_ids[i]);
                continue;
            }
            throw Error(errkind::NoRelevant,
                        "probe '" + matrix.probe_ids[i] + "' has no relevant gallery item");
        }
        const auto& row = matrix.rows[i];
        if (row.size() != gallery.entries.size()) {
            throw Error(errkind::InvalidConfig,
                        "rank row for probe '" + matrix.probe_ids[i] + "' has " +
                            std::to_string(row.size()) + " entries for a gallery of " +
                            std::to_string(gallery.entries.size()));
        }
        std::vector<bool> flags(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] >= gallery_families.size()) {
                throw Error(errkind::InvalidConfig,
                            "rank row for probe '" + matrix.probe_ids[i] +
                                "' references gallery index " + std::to_string(row[j]));
            }
            flags[j] = gallery_families[row[j]] == family;
        }
        const double ap = average_precision(flags, relevant, options.cutoff);
        result.per_probe.emplace_back(matrix.probe_ids[i], ap);
        sum += ap;
    }
    if (result.per_probe.empty()) {
        throw Error(errkind::NoRelevant, "every probe was skipped");
    }
    result.map = sum / static_cast<double>(result.per_probe.size());
    return result;
}

}  // namespace kinkit
