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

#include "kinkit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace kinkit::io {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

// Reads all lines, stripping a trailing '\r' so CRLF inputs still parse.
std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(errkind::IoFailure, "cannot open '" + path + "' for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) {
            throw Error(errkind::IoFailure, "cannot open '" + path + "' for writing");
        }
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out_ << ',';
            }
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void line(const std::string& text) { out_ << text << '\n'; }

    void finish() {
        out_.flush();
        if (!out_) {
            throw Error(errkind::IoFailure, "write to '" + path_ + "' failed");
        }
    }

private:
    std::string path_;
    std::ofstream out_;
};

void expect_header(const std::vector<std::string>& lines, const std::string& expected,
                   const std::string& path) {
    if (lines.empty() || lines[0] != expected) {
        throw Error(errkind::MalformedHeader,
                    "'" + path + "': expected header '" + expected + "'" +
                        (lines.empty() ? " in empty file" : ", got '" + lines[0] + "'"));
    }
}

std::string vector_header(const std::string& id_column, const std::string& prefix,
                          std::size_t count) {
    std::string h = id_column;
    for (std::size_t i = 0; i < count; ++i) {
        h += ',' + prefix + std::to_string(i);
    }
    return h;
}

// Validates a header of the form `id_column,<prefix>0,...` and returns
// the vector width.
std::size_t parse_vector_header(const std::string& header, const std::string& id_column,
                                const std::string& prefix, const std::string& path) {
    const auto fields = split_csv(header);
    if (fields.empty() || fields[0] != id_column || fields.size() < 2) {
        throw Error(errkind::MalformedHeader,
                    "'" + path + "': expected header '" + id_column + "," + prefix + "0,...'");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
        if (fields[i] != prefix + std::to_string(i - 1)) {
            throw Error(errkind::MalformedHeader,
                        "'" + path + "': header column " + std::to_string(i) + " is '" +
                            fields[i] + "', expected '" + prefix + std::to_string(i - 1) + "'");
        }
    }
    return fields.size() - 1;
}

std::size_t parse_index(const std::string& token, const std::string& context) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Error(errkind::MalformedRow, context + ": '" + token + "' is not an index");
    }
    return value;
}

int parse_binary_label(const std::string& token, const std::string& context) {
    if (token == "0") {
        return 0;
    }
    if (token == "1") {
        return 1;
    }
    throw Error(errkind::InvalidLabel, context + ": label '" + token + "' is not 0 or 1");
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& token, const std::string& context) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Error(errkind::MalformedRow, context + ": '" + token + "' is not a number");
    }
    return value;
}

EmbeddingStore load_embeddings(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw Error(errkind::MalformedHeader, "'" + path + "': empty file");
    }
    const std::size_t dim = parse_vector_header(lines[0], "image_id", "v", path);

    EmbeddingStore store;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != dim + 1) {
            throw Error(errkind::InconsistentDimension,
                        where + ": row has " + std::to_string(fields.size() - 1) +
                            " values, header declares " + std::to_string(dim));
        }
        Embedding e;
        e.image_id = fields[0];
        if (e.image_id.empty()) {
            throw Error(errkind::MalformedRow, where + ": empty image_id");
        }
        e.values.reserve(dim);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            const double v = parse_double(fields[k], where);
            if (!std::isfinite(v)) {
                throw Error(errkind::NonFiniteValue,
                            where + ": value '" + fields[k] + "' is not finite");
            }
            e.values.push_back(v);
        }
        store.insert(std::move(e));
    }
    return store;
}

void write_embeddings(const std::string& path, const EmbeddingStore& store) {
    CsvWriter out(path);
    out.line(vector_header("image_id", "v", store.dimension()));
    for (const auto& e : store.entries()) {
        std::string row = e.image_id;
        for (double v : e.values) {
            row += ',' + format_double(v);
        }
        out.line(row);
    }
    out.finish();
}

std::vector<PairQuery> load_pairs(const std::string& path) {
    const auto lines = read_lines(path);
    const std::string base = "pair_id,image_id_1,image_id_2,ptype";
    bool labeled = false;
    if (!lines.empty() && lines[0] == base + ",label") {
        labeled = true;
    } else {
        expect_header(lines, base, path);
    }

    std::vector<PairQuery> out;
    const std::size_t expected = labeled ? 5 : 4;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != expected) {
            throw Error(errkind::MalformedRow,
                        where + ": expected " + std::to_string(expected) + " fields, got " +
                            std::to_string(fields.size()));
        }
        PairQuery q;
        q.pair_id = fields[0];
        q.image_id_1 = fields[1];
        q.image_id_2 = fields[2];
        q.ptype = fields[3];
        if (q.pair_id.empty() || q.image_id_1.empty() || q.image_id_2.empty()) {
            throw Error(errkind::MalformedRow, where + ": empty identifier");
        }
        if (labeled) {
            q.label = parse_binary_label(fields[4], where);
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::pair<std::vector<ProbeSubject>, Gallery> load_probes_gallery(
    const std::string& probe_path, const std::string& gallery_path,
    const EmbeddingStore& store) {
    const auto probe_lines = read_lines(probe_path);
    expect_header(probe_lines, "probe_id,image_id", probe_path);

    std::vector<ProbeSubject> probes;
    std::unordered_map<std::string, std::size_t> probe_index;
    for (std::size_t i = 1; i < probe_lines.size(); ++i) {
        if (probe_lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + probe_path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(probe_lines[i]);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw Error(errkind::MalformedRow, where + ": expected 'probe_id,image_id'");
        }
        auto [it, inserted] = probe_index.emplace(fields[0], probes.size());
        if (inserted) {
            probes.push_back({fields[0], {}});
        }
        probes[it->second].embeddings.push_back(store.at(fields[1]));
    }
    if (probes.empty()) {
        throw Error(errkind::EmptyInput, "'" + probe_path + "': no probe rows");
    }

    const auto gallery_lines = read_lines(gallery_path);
    expect_header(gallery_lines, "gallery_index,image_id", gallery_path);
    Gallery gallery;
    for (std::size_t i = 1; i < gallery_lines.size(); ++i) {
        if (gallery_lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + gallery_path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(gallery_lines[i]);
        if (fields.size() != 2 || fields[1].empty()) {
            throw Error(errkind::MalformedRow, where + ": expected 'gallery_index,image_id'");
        }
        const std::size_t index = parse_index(fields[0], where);
        if (index != gallery.entries.size()) {
            throw Error(errkind::NonContiguousGalleryIndex,
                        where + ": index " + fields[0] + ", expected " +
                            std::to_string(gallery.entries.size()));
        }
        gallery.entries.push_back(store.at(fields[1]));
    }
    if (gallery.entries.empty()) {
        throw Error(errkind::EmptyInput, "'" + gallery_path + "': no gallery rows");
    }
    return {std::move(probes), std::move(gallery)};
}

FamilyLabels load_family_labels(const std::string& path) {
    const auto lines = read_lines(path);
    expect_header(lines, "image_id,family_id", path);
    FamilyLabels labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw Error(errkind::MalformedRow, where + ": expected 'image_id,family_id'");
        }
        if (!labels.emplace(fields[0], fields[1]).second) {
            throw Error(errkind::DuplicateId, where + ": duplicate image_id '" + fields[0] + "'");
        }
    }
    return labels;
}

CalibrationSet load_calibration(const std::string& path) {
    const auto lines = read_lines(path);
    expect_header(lines, "distance,label", path);
    CalibrationSet cal;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 2) {
            throw Error(errkind::MalformedRow, where + ": expected 'distance,label'");
        }
        cal.observations.push_back(
            {parse_double(fields[0], where), parse_binary_label(fields[1], where)});
    }
    cal.validate();
    return cal;
}

void write_calibration(const std::string& path, const CalibrationSet& cal) {
    CsvWriter out(path);
    out.line("distance,label");
    for (const auto& obs : cal.observations) {
        out.line(format_double(obs.distance) + ',' + std::to_string(obs.kin_label));
    }
    out.finish();
}

void write_predictions(const std::string& path,
                       const std::vector<PairPrediction>& predictions) {
    CsvWriter out(path);
    out.line("pair_id,score,label");
    for (const auto& p : predictions) {
        out.line(p.pair_id + ',' + format_double(p.score) + ',' + std::to_string(p.label));
    }
    out.finish();
}

std::vector<PairPrediction> load_predictions(const std::string& path) {
    const auto lines = read_lines(path);
    expect_header(lines, "pair_id,score,label", path);
    std::vector<PairPrediction> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 3 || fields[0].empty()) {
            throw Error(errkind::MalformedRow, where + ": expected 'pair_id,score,label'");
        }
        out.push_back({fields[0], parse_double(fields[1], where),
                       parse_binary_label(fields[2], where)});
    }
    return out;
}

void write_rank_matrix(const std::string& path, const RankMatrix& matrix) {
    CsvWriter out(path);
    const std::size_t n = matrix.rows.empty() ? 0 : matrix.rows.front().size();
    out.line(vector_header("probe_id", "r", n));
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        std::string row = matrix.probe_ids[i];
        for (std::size_t idx : matrix.rows[i]) {
            row += ',' + std::to_string(idx);
        }
        out.line(row);
    }
    out.finish();
}

RankMatrix load_rank_matrix(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw Error(errkind::MalformedHeader, "'" + path + "': empty file");
    }
    const std::size_t n = parse_vector_header(lines[0], "probe_id", "r", path);
    RankMatrix matrix;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != n + 1 || fields[0].empty()) {
            throw Error(errkind::MalformedRow,
                        where + ": expected probe_id plus " + std::to_string(n) + " ranks");
        }
        std::vector<std::size_t> row;
        row.reserve(n);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            row.push_back(parse_index(fields[k], where));
        }
        matrix.probe_ids.push_back(fields[0]);
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

void write_projection_head(const std::string& path, const ProjectionHead& head) {
    CsvWriter out(path);
    out.line(vector_header("row", "c", head.d_in));
    for (std::size_t r = 0; r < head.d_out; ++r) {
        std::string row = std::to_string(r);
        for (double v : head.row(r)) {
            row += ',' + format_double(v);
        }
        out.line(row);
    }
    out.finish();
}

ProjectionHead load_projection_head(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw Error(errkind::MalformedHeader, "'" + path + "': empty file");
    }
    const std::size_t d_in = parse_vector_header(lines[0], "row", "c", path);
    ProjectionHead head{d_in, 0, {}};
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != d_in + 1) {
            throw Error(errkind::MalformedRow,
                        where + ": expected row index plus " + std::to_string(d_in) +
                            " coefficients");
        }
        if (parse_index(fields[0], where) != head.d_out) {
            throw Error(errkind::MalformedRow,
                        where + ": row index " + fields[0] + ", expected " +
                            std::to_string(head.d_out));
        }
        for (std::size_t k = 1; k < fields.size(); ++k) {
            head.matrix.push_back(parse_double(fields[k], where));
        }
        ++head.d_out;
    }
    if (head.d_out == 0) {
        throw Error(errkind::EmptyInput, "'" + path + "': no head rows");
    }
    return head;
}

void write_pair_classifier(const std::string& path, const PairClassifier& clf) {
    CsvWriter out(path);
    out.line("bias," + format_double(clf.bias));
    for (std::size_t i = 0; i < clf.weights.size(); ++i) {
        out.line("w," + std::to_string(i) + ',' + format_double(clf.weights[i]));
    }
    out.finish();
}

PairClassifier load_pair_classifier(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw Error(errkind::MalformedHeader, "'" + path + "': empty file");
    }
    const auto first = split_csv(lines[0]);
    if (first.size() != 2 || first[0] != "bias") {
        throw Error(errkind::MalformedHeader, "'" + path + "': expected leading 'bias,<value>' row");
    }
    PairClassifier clf;
    clf.bias = parse_double(first[1], "'" + path + "' bias");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const std::string where = "'" + path + "' line " + std::to_string(i + 1);
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 3 || fields[0] != "w") {
            throw Error(errkind::MalformedRow, where + ": expected 'w,<index>,<value>'");
        }
        if (parse_index(fields[1], where) != clf.weights.size()) {
            throw Error(errkind::MalformedRow,
                        where + ": weight index " + fields[1] + ", expected " +
                            std::to_string(clf.weights.size()));
        }
        clf.weights.push_back(parse_double(fields[2], where));
    }
    if (clf.weights.empty()) {
        throw Error(errkind::EmptyInput, "'" + path + "': no weight rows");
    }
    return clf;
}

void write_fused_features(const std::string& path, const std::vector<std::string>& pair_ids,
                          const std::vector<FusedPairFeature>& features) {
    if (pair_ids.size() != features.size()) {
        throw Error(errkind::InvalidConfig, "pair id / feature count mismatch");
    }
    CsvWriter out(path);
    const std::size_t len = features.empty() ? 0 : features.front().values.size();
    out.line(vector_header("pair_id", "f", len));
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::string row = pair_ids[i];
        for (double v : features[i].values) {
            row += ',' + format_double(v);
        }
        out.line(row);
    }
    out.finish();
}

void write_verification_report(const std::string& path, const VerificationReport& report) {
    CsvWriter out(path);
    out.line("scope,category,count,accuracy");
    out.line("overall,," + std::to_string(report.total) + ',' +
             format_double(report.overall_accuracy));
    for (const auto& [cat, acc] : report.per_category_accuracy) {
        out.line("category," + cat + ',' + std::to_string(report.per_category_count.at(cat)) +
                 ',' + format_double(acc));
    }
    out.line("macro,," + std::to_string(report.per_category_accuracy.size()) + ',' +
             format_double(report.macro_average));
    out.finish();
}

void write_probe_aps(const std::string& path, const MapResult& result) {
    CsvWriter out(path);
    out.line("probe_id,average_precision");
    for (const auto& [probe_id, ap] : result.per_probe) {
        out.line(probe_id + ',' + format_double(ap));
    }
    out.finish();
}

}  // namespace kinkit::io
