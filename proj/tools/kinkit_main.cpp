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

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "kinkit/gradcheck.hpp"
#include "kinkit/io.hpp"
#include "kinkit/simd/kernels.hpp"

namespace {

using namespace kinkit;

struct CommonOptions {
    std::string embeddings;
    std::string embeddings2;
    std::string output;
    std::uint64_t seed = 42;
};

ScorerKind parse_scorer(const std::string& name) {
    static const std::map<std::string, ScorerKind> kinds = {
        {"raw_cosine", ScorerKind::raw_cosine},
        {"cd", ScorerKind::cd},
        {"idw", ScorerKind::idw},
        {"pair_classifier", ScorerKind::pair_classifier},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) {
        throw Error(errkind::InvalidConfig, "unknown scorer '" + name + "'");
    }
    return it->second;
}

PairDescriptor parse_descriptor(const std::string& name) {
    static const std::map<std::string, PairDescriptor> kinds = {
        {"sqdiff", PairDescriptor::sqdiff},
        {"fused", PairDescriptor::fused},
        {"fused_joint", PairDescriptor::fused_joint},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) {
        throw Error(errkind::InvalidConfig, "unknown descriptor '" + name + "'");
    }
    return it->second;
}

// Pairs the store's embeddings with dense family labels; entries without
// a family label are excluded.
LabeledEmbeddings labeled_from_families(const EmbeddingStore& store,
                                        const FamilyLabels& families) {
    LabeledEmbeddings data;
    std::map<std::string, std::size_t> dense;
    for (const auto& e : store.entries()) {
        auto it = families.find(e.image_id);
        if (it == families.end()) {
            continue;
        }
        auto [slot, inserted] = dense.emplace(it->second, dense.size());
        data.items.push_back(e);
        data.labels.push_back(slot->second);
    }
    if (data.items.empty()) {
        throw Error(errkind::EmptyInput, "no embeddings with family labels");
    }
    return data;
}

double pair_distance(const EmbeddingStore& store, const PairQuery& q) {
    const auto a = vec::l2_normalize(store.at(q.image_id_1).values);
    const auto b = vec::l2_normalize(store.at(q.image_id_2).values);
    return vec::squared_euclidean(a, b);
}

int run(int argc, char** argv) {
    CLI::App app{"kinkit: kinship verification and retrieval over precomputed face embeddings"};
    app.require_subcommand(1);

    CommonOptions common;
    app.add_option("--embeddings", common.embeddings, "embeddings CSV (image_id,v0,...)");
    app.add_option("--embeddings2", common.embeddings2,
                   "second embeddings CSV for joint descriptors");
    app.add_option("--output", common.output, "output file path");
    app.add_option("--seed", common.seed, "seed for stochastic commands (default 42)");

    // verify
    auto* verify = app.add_subcommand("verify", "score pairs and binarize at the threshold");
    std::string verify_pairs_path;
    std::string scorer_name = "raw_cosine";
    std::string descriptor_name = "sqdiff";
    std::string calibration_path;
    std::string classifier_path;
    std::optional<double> threshold;
    double idw_power = 2.0;
    std::size_t idw_k = 0;
    bool cd_kin_only = false;
    bool symmetrize = false;
    verify->add_option("--pairs", verify_pairs_path, "pair queries CSV")->required();
    verify->add_option("--scorer", scorer_name, "raw_cosine|cd|idw|pair_classifier");
    verify->add_option("--descriptor", descriptor_name, "sqdiff|fused|fused_joint");
    verify->add_option("--calibration", calibration_path, "calibration CSV for cd/idw");
    verify->add_option("--classifier", classifier_path, "classifier CSV for pair_classifier");
    verify->add_option("--threshold", threshold,
                       "decision threshold (default 0.6 raw_cosine, 0.5 otherwise)");
    verify->add_option("--idw-power", idw_power, "Shepard exponent (default 2)");
    verify->add_option("--idw-k", idw_k, "IDW neighbor count, 0 = all (default)");
    verify->add_flag("--cd-kin-only", cd_kin_only, "restrict the CD pool to kin distances");
    verify->add_flag("--symmetrize", symmetrize, "average classifier scores over both orders");

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "rank the gallery for every probe");
    std::string probes_path;
    std::string gallery_path;
    std::string aggregate_name = "mean";
    retrieve->add_option("--probes", probes_path, "probe CSV (probe_id,image_id)")->required();
    retrieve->add_option("--gallery", gallery_path, "gallery CSV (gallery_index,image_id)")
        ->required();
    retrieve->add_option("--aggregate", aggregate_name, "mean|max_sim (default mean)");

    // calibrate
    auto* calibrate =
        app.add_subcommand("calibrate", "build a calibration set from labeled pairs");
    std::string calibrate_pairs_path;
    calibrate->add_option("--pairs", calibrate_pairs_path, "labeled pair CSV")->required();

    // train-head
    auto* train_head = app.add_subcommand("train-head", "train a linear projection head");
    std::string families_path;
    std::string loss_name = "triplet";
    std::string mining_name = "semi_hard";
    std::optional<double> margin;
    double scale_s = 64.0;
    std::size_t epochs = 50;
    double lr = 0.05;
    std::size_t batch_size = 32;
    std::size_t output_dim = 16;
    double momentum = 0.0;
    train_head->add_option("--families", families_path, "family labels CSV")->required();
    train_head->add_option("--loss", loss_name, "triplet|arcface");
    train_head->add_option("--mining", mining_name, "all|semi_hard|hard");
    train_head->add_option("--margin", margin,
                           "triplet alpha (default 0.2) or arcface m (default 0.5)");
    train_head->add_option("--scale", scale_s, "arcface scale s (default 64)");
    train_head->add_option("--epochs", epochs, "training epochs (default 50)");
    train_head->add_option("--lr", lr, "learning rate (default 0.05)");
    train_head->add_option("--batch-size", batch_size, "batch size (default 32)");
    train_head->add_option("--dout", output_dim, "head output dimension (default 16)");
    train_head->add_option("--momentum", momentum, "momentum coefficient (default 0)");

    // train-pair-classifier
    auto* train_clf =
        app.add_subcommand("train-pair-classifier", "train a logistic pair classifier");
    std::string clf_pairs_path;
    std::string clf_descriptor_name = "sqdiff";
    std::size_t clf_epochs = 200;
    double clf_lr = 0.1;
    std::size_t clf_batch = 0;
    train_clf->add_option("--pairs", clf_pairs_path, "labeled pair CSV")->required();
    train_clf->add_option("--descriptor", clf_descriptor_name, "sqdiff|fused|fused_joint");
    train_clf->add_option("--epochs", clf_epochs, "training epochs (default 200)");
    train_clf->add_option("--lr", clf_lr, "learning rate (default 0.1)");
    train_clf->add_option("--batch-size", clf_batch, "batch size, 0 = full batch (default)");

    // eval-verification
    auto* eval_ver = app.add_subcommand("eval-verification", "accuracy report for predictions");
    std::string eval_pairs_path;
    std::string predictions_path;
    eval_ver->add_option("--pairs", eval_pairs_path, "labeled pair CSV")->required();
    eval_ver->add_option("--predictions", predictions_path, "predictions CSV")->required();

    // eval-retrieval
    auto* eval_ret = app.add_subcommand("eval-retrieval", "MAP for a rank matrix");
    std::string ranks_path;
    std::string ret_probes_path;
    std::string ret_gallery_path;
    std::string ret_families_path;
    std::size_t map_cutoff = 0;
    bool skip_no_relevant = false;
    eval_ret->add_option("--ranks", ranks_path, "rank matrix CSV")->required();
    eval_ret->add_option("--probes", ret_probes_path, "probe CSV")->required();
    eval_ret->add_option("--gallery", ret_gallery_path, "gallery CSV")->required();
    eval_ret->add_option("--families", ret_families_path, "family labels CSV")->required();
    eval_ret->add_option("--map-cutoff", map_cutoff, "AP rank cutoff, 0 = full ranking");
    eval_ret->add_flag("--skip-no-relevant", skip_no_relevant,
                       "skip probes without relevant gallery items (warns)");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "emit pair descriptors for a pair file");
    std::string fuse_pairs_path;
    std::string fuse_descriptor_name = "fused";
    fuse->add_option("--pairs", fuse_pairs_path, "pair queries CSV")->required();
    fuse->add_option("--descriptor", fuse_descriptor_name, "sqdiff|fused|fused_joint");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "run the finite-difference suites");
    std::size_t trials = 100;
    double gc_h = 1e-5;
    double gc_tolerance = 1e-4;
    gradcheck->add_option("--trials", trials, "configurations per suite (default 100)");
    gradcheck->add_option("--step", gc_h, "finite-difference step (default 1e-5)");
    gradcheck->add_option("--tolerance", gc_tolerance, "max relative error (default 1e-4)");

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    auto require = [](const std::string& value, const std::string& flag) -> const std::string& {
        if (value.empty()) {
            throw Error(errkind::InvalidConfig, "missing required flag " + flag);
        }
        return value;
    };

    if (verify->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        const auto queries = io::load_pairs(verify_pairs_path);
        ScorerConfig cfg;
        cfg.kind = parse_scorer(scorer_name);
        cfg.descriptor = parse_descriptor(descriptor_name);
        cfg.threshold = threshold;
        cfg.idw_power = idw_power;
        cfg.idw_k = idw_k;
        cfg.cd_kin_only = cd_kin_only;
        cfg.symmetrize = symmetrize;

        std::optional<CalibrationSet> cal;
        if (!calibration_path.empty()) {
            cal = io::load_calibration(calibration_path);
        }
        std::optional<PairClassifier> clf;
        if (!classifier_path.empty()) {
            clf = io::load_pair_classifier(classifier_path);
        }
        std::optional<EmbeddingStore> store2;
        if (!common.embeddings2.empty()) {
            store2 = io::load_embeddings(common.embeddings2);
        }
        const auto predictions =
            verify_pairs(store, queries, cfg, cal ? &*cal : nullptr, clf ? &*clf : nullptr,
                         store2 ? &*store2 : nullptr);
        io::write_predictions(require(common.output, "--output"), predictions);
        std::cout << "wrote " << predictions.size() << " predictions (threshold "
                  << io::format_double(cfg.effective_threshold()) << ")\n";
        return 0;
    }

    if (retrieve->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        auto [probes, gallery] = io::load_probes_gallery(probes_path, gallery_path, store);
        Aggregation strategy;
        if (aggregate_name == "mean") {
            strategy = Aggregation::mean;
        } else if (aggregate_name == "max_sim") {
            strategy = Aggregation::max_sim;
        } else {
            throw Error(errkind::InvalidConfig, "unknown aggregation '" + aggregate_name + "'");
        }
        const auto matrix = build_rank_matrix(probes, gallery, strategy);
        io::write_rank_matrix(require(common.output, "--output"), matrix);
        std::cout << "wrote " << matrix.rows.size() << " x " << gallery.entries.size()
                  << " rank matrix\n";
        return 0;
    }

    if (calibrate->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        const auto queries = io::load_pairs(calibrate_pairs_path);
        CalibrationSet cal;
        for (const auto& q : queries) {
            if (!q.label.has_value()) {
                throw Error(errkind::MissingLabel,
                            "pair '" + q.pair_id + "' has no label; calibrate needs labeled pairs");
            }
            cal.observations.push_back({pair_distance(store, q), *q.label});
        }
        if (cal.observations.empty()) {
            throw Error(errkind::EmptyInput, "no pairs to calibrate on");
        }
        io::write_calibration(require(common.output, "--output"), cal);
        std::cout << "wrote " << cal.observations.size() << " calibration observations\n";
        return 0;
    }

    if (train_head->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        const auto families = io::load_family_labels(families_path);
        const auto data = labeled_from_families(store, families);

        TrainConfig cfg;
        if (loss_name == "triplet") {
            cfg.loss_kind = LossKind::triplet;
        } else if (loss_name == "arcface") {
            cfg.loss_kind = LossKind::arcface;
        } else {
            throw Error(errkind::InvalidConfig, "unknown loss '" + loss_name + "'");
        }
        if (mining_name == "all") {
            cfg.mining = MiningStrategy::all;
        } else if (mining_name == "semi_hard") {
            cfg.mining = MiningStrategy::semi_hard;
        } else if (mining_name == "hard") {
            cfg.mining = MiningStrategy::hard;
        } else {
            throw Error(errkind::InvalidConfig, "unknown mining strategy '" + mining_name + "'");
        }
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.batch_size = std::min(batch_size, data.items.size());
        cfg.seed = common.seed;
        cfg.momentum = momentum;
        cfg.output_dim = output_dim;
        cfg.triplet.margin_alpha = margin.value_or(0.2);
        cfg.arcface.scale_s = scale_s;
        cfg.arcface.margin_m = margin.value_or(0.5);

        std::cout << "seed " << cfg.seed << "\n";
        std::cout << "training on " << data.items.size() << " of " << store.size()
                  << " embeddings (" << loss_name << " loss, " << mining_name << " mining)\n";
        const auto result = train_projection(data, cfg);
        for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
            std::cout << "epoch " << e << " loss " << io::format_double(result.epoch_losses[e])
                      << "\n";
        }
        io::write_projection_head(require(common.output, "--output"), result.head);
        std::cout << "wrote " << result.head.d_out << " x " << result.head.d_in << " head\n";
        return 0;
    }

    if (train_clf->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        const auto queries = io::load_pairs(clf_pairs_path);
        const auto descriptor = parse_descriptor(clf_descriptor_name);
        std::optional<EmbeddingStore> store2;
        if (!common.embeddings2.empty()) {
            store2 = io::load_embeddings(common.embeddings2);
        }
        std::vector<std::vector<double>> features;
        std::vector<int> labels;
        for (const auto& q : queries) {
            if (!q.label.has_value()) {
                throw Error(errkind::MissingLabel,
                            "pair '" + q.pair_id + "' has no label; training needs labeled pairs");
            }
            features.push_back(
                pair_descriptor(store, store2 ? &*store2 : nullptr, q, descriptor));
            labels.push_back(*q.label);
        }
        ClassifierTrainConfig cfg;
        cfg.learning_rate = clf_lr;
        cfg.epochs = clf_epochs;
        cfg.batch_size = clf_batch;
        cfg.seed = common.seed;
        std::cout << "seed " << cfg.seed << "\n";
        const auto clf = train_pair_classifier(features, labels, cfg);
        io::write_pair_classifier(require(common.output, "--output"), clf);
        std::cout << "wrote classifier over " << clf.weights.size() << " feature dims\n";
        return 0;
    }

    if (eval_ver->parsed()) {
        const auto queries = io::load_pairs(eval_pairs_path);
        const auto predictions = io::load_predictions(predictions_path);
        const auto report = evaluate_verification(predictions, queries);
        std::cout << "overall_accuracy " << io::format_double(report.overall_accuracy) << "\n";
        for (const auto& [cat, acc] : report.per_category_accuracy) {
            std::cout << "category " << cat << " accuracy " << io::format_double(acc) << " ("
                      << report.per_category_count.at(cat) << " pairs)\n";
        }
        std::cout << "macro_average " << io::format_double(report.macro_average) << "\n";
        if (!common.output.empty()) {
            io::write_verification_report(common.output, report);
        }
        return 0;
    }

    if (eval_ret->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        auto [probes, gallery] =
            io::load_probes_gallery(ret_probes_path, ret_gallery_path, store);
        const auto matrix = io::load_rank_matrix(ranks_path);
        const auto families = io::load_family_labels(ret_families_path);
        MapOptions options;
        options.cutoff = map_cutoff;
        options.skip_no_relevant = skip_no_relevant;
        const auto result = mean_average_precision(matrix, probes, gallery, families, options);
        for (const auto& probe_id : result.skipped) {
            std::cerr << "warning: probe '" << probe_id << "' has no relevant gallery item\n";
        }
        std::cout << "MAP " << io::format_double(result.map) << " over "
                  << result.per_probe.size() << " probes\n";
        if (!common.output.empty()) {
            io::write_probe_aps(common.output, result);
        }
        return 0;
    }

    if (fuse->parsed()) {
        const auto store = io::load_embeddings(require(common.embeddings, "--embeddings"));
        const auto queries = io::load_pairs(fuse_pairs_path);
        const auto descriptor = parse_descriptor(fuse_descriptor_name);
        std::optional<EmbeddingStore> store2;
        if (!common.embeddings2.empty()) {
            store2 = io::load_embeddings(common.embeddings2);
        }
        std::vector<std::string> ids;
        std::vector<FusedPairFeature> features;
        for (const auto& q : queries) {
            FusedPairFeature f;
            f.values = pair_descriptor(store, store2 ? &*store2 : nullptr, q, descriptor);
            f.dim1 = store.dimension();
            f.dim2 = store2 ? store2->dimension() : 0;
            ids.push_back(q.pair_id);
            features.push_back(std::move(f));
        }
        io::write_fused_features(require(common.output, "--output"), ids, features);
        std::cout << "wrote " << features.size() << " descriptors\n";
        return 0;
    }

    if (gradcheck->parsed()) {
        std::cout << "seed " << common.seed << "\n";
        std::cout << "simd " << simd::active_isa() << "\n";
        const auto triplet = gradcheck_triplet(common.seed, trials, gc_h, gc_tolerance);
        std::cout << (triplet.passed() ? "PASS" : "FAIL") << " triplet: " << triplet.trials
                  << " configs, max rel err " << io::format_double(triplet.worst_error) << "\n";
        const auto arcface = gradcheck_arcface(common.seed, trials, gc_h, gc_tolerance);
        std::cout << (arcface.passed() ? "PASS" : "FAIL") << " arcface: " << arcface.trials
                  << " configs, max rel err " << io::format_double(arcface.worst_error) << "\n";
        return triplet.passed() && arcface.passed() ? 0 : 1;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const kinkit::Error& e) {
        std::cerr << "ERROR " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR Internal: " << e.what() << "\n";
        return 2;
    }
}
