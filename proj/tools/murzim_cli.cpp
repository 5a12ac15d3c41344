#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "murzim/api.hpp"
#include "murzim/synthetic.hpp"

namespace {

namespace fs = std::filesystem;

// Relative paths resolve against MURZIM_DATA_DIR when it is set.
std::string resolve(const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    const char* base = std::getenv("MURZIM_DATA_DIR");
    if (base == nullptr || *base == '\0') return path;
    return (fs::path(base) / path).string();
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

murzim::Precision parse_precision(int bits) {
    if (bits == 32) return murzim::Precision::Float32;
    if (bits == 64) return murzim::Precision::Float64;
    throw std::invalid_argument("--precision must be 32 or 64");
}

struct TrainFlags {
    std::size_t dim = 64;
    std::size_t batch_size = 512;
    double lr = 0.004;
    double l2 = 1e-5;
    int epochs = 10;
    int steps = 1;
    int patience = 3;
    std::uint64_t seed = 42;
    int precision = 32;
    std::string attributes = "";
    double clip_norm = 0.0;
    bool binary_edges = false;
    bool no_bridge_empty = false;
    bool per_channel_gru = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--dim", f.dim, "Embedding dimension");
    cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
    cmd->add_option("--lr", f.lr, "Initial learning rate");
    cmd->add_option("--l2", f.l2, "L2 penalty");
    cmd->add_option("--epochs", f.epochs, "Training epochs");
    cmd->add_option("--steps", f.steps, "Propagation steps");
    cmd->add_option("--patience", f.patience, "Early-stopping patience (<=0 disables)");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--precision", f.precision, "Float precision (32 or 64)");
    cmd->add_option("--attributes", f.attributes,
                    "Comma-separated attribute names, or 'none' for the K=0 ablation");
    cmd->add_option("--clip-norm", f.clip_norm, "Gradient clipping norm (0 disables)");
    cmd->add_flag("--binary-edges", f.binary_edges, "Collapse repeated edges to weight 1");
    cmd->add_flag("--no-bridge-empty", f.no_bridge_empty,
                  "Do not connect across empty attribute positions");
    cmd->add_flag("--per-channel-gru", f.per_channel_gru, "Separate GRU weights per channel");
}

murzim::TrainConfig to_config(const TrainFlags& f) {
    murzim::TrainConfig cfg;
    cfg.dim = f.dim;
    cfg.batch_size = f.batch_size;
    cfg.initial_lr = f.lr;
    cfg.l2 = f.l2;
    cfg.epochs = f.epochs;
    cfg.steps = f.steps;
    cfg.patience = f.patience;
    cfg.seed = f.seed;
    cfg.precision = parse_precision(f.precision);
    if (f.clip_norm > 0) cfg.clip_norm = f.clip_norm;
    cfg.graph.binary_edges = f.binary_edges;
    cfg.graph.bridge_empty = !f.no_bridge_empty;
    cfg.shared_gru = !f.per_channel_gru;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Murzim: attribute-augmented graph-neural-network sequential recommender"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse and preprocess session logs into a bundle");
    std::string sessions_path, attrs_path, out_dir;
    murzim::IngestOptions iopts;
    std::string delimiter = ",";
    ingest->add_option("--sessions", sessions_path, "Sessions CSV")->required();
    ingest->add_option("--attributes-file", attrs_path, "Attributes CSV");
    ingest->add_option("--out", out_dir, "Output bundle directory")->required();
    ingest->add_option("--min-occ", iopts.min_item_occurrences, "Minimum item occurrences");
    ingest->add_option("--min-len", iopts.min_session_length, "Minimum session length");
    ingest->add_option("--filter-passes", iopts.filter_passes,
                       "Filtering passes (-1 = fixpoint)");
    ingest->add_option("--holdout", iopts.holdout, "Trailing test window (timestamp units)");
    ingest->add_option("--delimiter", delimiter, "Field delimiter");
    ingest->add_option("--session-col", iopts.fmt.session_col, "Session id column");
    ingest->add_option("--item-col", iopts.fmt.item_col, "Item id column");
    ingest->add_option("--time-col", iopts.fmt.time_col, "Timestamp column");

    // score-attrs
    auto* score = app.add_subcommand("score-attrs", "Rank attributes by concentration score");
    std::string score_bundle;
    score->add_option("--bundle", score_bundle, "Bundle directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the model");
    std::string train_bundle, ckpt_out, metrics_out;
    TrainFlags tf;
    train_cmd->add_option("--bundle", train_bundle, "Bundle directory")->required();
    train_cmd->add_option("--out", ckpt_out, "Checkpoint output path")->required();
    train_cmd->add_option("--metrics-log", metrics_out, "Per-epoch metrics CSV path");
    add_train_flags(train_cmd, tf);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and/or baselines");
    std::string eval_ckpt, eval_bundle, baseline_arg;
    std::size_t topk = 20;
    bool knn_raw = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path");
    eval_cmd->add_option("--bundle", eval_bundle, "Bundle directory")->required();
    eval_cmd->add_option("--topk", topk, "Cutoff K for Recall@K / MRR@K");
    eval_cmd->add_option("--baseline", baseline_arg,
                         "Comma-separated baselines: pop, spop, itemknn, or 'all'");
    eval_cmd->add_flag("--knn-raw-counts", knn_raw, "Item-KNN without cosine normalization");

    // recommend
    auto* rec_cmd = app.add_subcommand("recommend", "Score a prefix and print top-K items");
    std::string rec_ckpt, rec_items;
    std::size_t rec_topk = 20;
    rec_cmd->add_option("--checkpoint", rec_ckpt, "Checkpoint path")->required();
    rec_cmd->add_option("--items", rec_items, "Comma-separated item ids (the prefix)")
        ->required();
    rec_cmd->add_option("--topk", rec_topk, "Number of items to print");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
    murzim::SyntheticSpec spec;
    std::string synth_sessions_out, synth_attrs_out, signal_type = "random";
    std::size_t num_values = 10, num_decoys = 0;
    synth_cmd->add_option("--items", spec.num_items, "Item count");
    synth_cmd->add_option("--sessions", spec.num_sessions, "Session count");
    synth_cmd->add_option("--min-len", spec.min_length, "Minimum session length");
    synth_cmd->add_option("--max-len", spec.max_length, "Maximum session length");
    synth_cmd->add_option("--values", num_values, "Attribute cardinality");
    synth_cmd->add_option("--decoy-attrs", num_decoys, "Extra uniform attributes");
    synth_cmd->add_option("--signal", signal_type, "attribute-driven | markov | random");
    synth_cmd->add_option("--p", spec.p, "Attribute-consistent transition probability");
    synth_cmd->add_option("--seed", spec.seed, "RNG seed");
    synth_cmd->add_option("--out-sessions", synth_sessions_out, "Sessions CSV path")->required();
    synth_cmd->add_option("--out-attrs", synth_attrs_out, "Attributes CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*ingest) {
            if (delimiter.size() != 1) throw std::invalid_argument("--delimiter must be one character");
            iopts.fmt.delimiter = delimiter[0];
            iopts.sessions_path = resolve(sessions_path);
            iopts.attributes_path = resolve(attrs_path);
            auto s = murzim::run_ingest(iopts, resolve(out_dir));
            std::printf("items        %zu\n", s.items);
            std::printf("train        %zu sessions, %zu examples\n", s.train_sessions,
                        s.train_examples);
            std::printf("test         %zu sessions, %zu examples\n", s.test_sessions,
                        s.test_examples);
            std::printf("avg. length  %.2f\n", s.avg_length);
            for (const auto& [name, count] : s.attr_value_counts)
                std::printf("attribute    %s: %zu values\n", name.c_str(), count);
            if (s.skipped_attr_rows)
                std::printf("skipped      %zu attribute rows for unknown items\n",
                            s.skipped_attr_rows);
            if (s.trimmed_test_items || s.dropped_test_sessions)
                std::printf("trimmed      %zu unseen test items, dropped %zu short test sessions\n",
                            s.trimmed_test_items, s.dropped_test_sessions);
        } else if (*score) {
            auto report = murzim::score_bundle_attributes(resolve(score_bundle));
            std::printf("attribute,score\n");
            for (const auto& [name, value] : report.scores)
                std::printf("%s,%.4f\n", name.c_str(), value);
        } else if (*train_cmd) {
            std::vector<std::string> names;
            if (tf.attributes == "none")
                names = {"none"};
            else if (!tf.attributes.empty())
                names = split_csv(tf.attributes);
            auto outcome = murzim::run_train(resolve(train_bundle), to_config(tf), names,
                                             resolve(ckpt_out), resolve(metrics_out));
            for (const auto& e : outcome.log)
                std::printf("epoch %d  loss %.6f  recall@%zu %.4f  mrr@%zu %.4f  lr %g\n",
                            e.epoch, e.loss, to_config(tf).eval_topk, e.recall,
                            to_config(tf).eval_topk, e.mrr, e.lr);
            if (outcome.diverged) {
                std::fprintf(stderr, "training diverged; last good checkpoint saved\n");
                return 3;
            }
            std::printf("best epoch %d; checkpoint written to %s\n", outcome.best_epoch,
                        ckpt_out.c_str());
        } else if (*eval_cmd) {
            std::vector<std::string> baselines;
            if (baseline_arg == "all")
                baselines = {"pop", "spop", "itemknn"};
            else if (!baseline_arg.empty())
                baselines = split_csv(baseline_arg);
            if (eval_ckpt.empty() && baselines.empty())
                throw std::invalid_argument("eval: need --checkpoint and/or --baseline");
            auto reports = murzim::run_eval(resolve(eval_ckpt), resolve(eval_bundle), topk,
                                            baselines, knn_raw);
            std::printf("model,recall@%zu,mrr@%zu,examples\n", topk, topk);
            for (const auto& r : reports)
                std::printf("%s,%.4f,%.4f,%zu\n", r.model.c_str(), r.recall, r.mrr, r.count);
        } else if (*rec_cmd) {
            auto recs = murzim::run_recommend(resolve(rec_ckpt), split_csv(rec_items), rec_topk);
            std::printf("item_id,probability\n");
            for (const auto& r : recs)
                std::printf("%s,%.6g\n", r.item_id.c_str(), r.probability);
        } else if (*synth_cmd) {
            if (signal_type == "attribute-driven") {
                spec.signal = murzim::SignalType::AttributeDriven;
                spec.attrs.push_back({"signal", num_values, true});
            } else if (signal_type == "markov") {
                spec.signal = murzim::SignalType::Markov;
                spec.attrs.push_back({"attr0", num_values, false});
            } else if (signal_type == "random") {
                spec.signal = murzim::SignalType::Random;
                spec.attrs.push_back({"attr0", num_values, false});
            } else {
                throw std::invalid_argument("unknown --signal '" + signal_type + "'");
            }
            for (std::size_t i = 0; i < num_decoys; ++i)
                spec.attrs.push_back({"decoy" + std::to_string(i), num_values, false});
            auto [sessions, attrs] = murzim::generate(spec);
            murzim::write_sessions_csv(sessions, resolve(synth_sessions_out));
            murzim::write_attributes_csv(sessions, attrs, resolve(synth_attrs_out));
            std::printf("wrote %zu sessions over %zu items\n", sessions.sessions.size(),
                        sessions.num_items());
        }
    } catch (const murzim::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
