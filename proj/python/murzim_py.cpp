#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "murzim/api.hpp"
#include "murzim/attribute_score.hpp"
#include "murzim/graph.hpp"
#include "murzim/synthetic.hpp"

namespace py = pybind11;
using namespace murzim;

namespace {

TrainConfig make_config(std::size_t dim, std::size_t batch_size, double lr, double l2,
                        int epochs, int steps, int patience, std::uint64_t seed, int precision,
                        double clip_norm) {
    TrainConfig cfg;
    cfg.dim = dim;
    cfg.batch_size = batch_size;
    cfg.initial_lr = lr;
    cfg.l2 = l2;
    cfg.epochs = epochs;
    cfg.steps = steps;
    cfg.patience = patience;
    cfg.seed = seed;
    if (precision == 64)
        cfg.precision = Precision::Float64;
    else if (precision == 32)
        cfg.precision = Precision::Float32;
    else
        throw std::invalid_argument("precision must be 32 or 64");
    if (clip_norm > 0) cfg.clip_norm = clip_norm;
    return cfg;
}

py::dict log_to_dict(const EpochLog& e) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["loss"] = e.loss;
    d["recall"] = e.recall;
    d["mrr"] = e.mrr;
    d["lr"] = e.lr;
    return d;
}

}  // namespace

PYBIND11_MODULE(_murzim, m) {
    m.doc() = "Attribute-augmented graph-neural-network session recommender";

    py::register_exception<DataError>(m, "DataError");

    m.def(
        "ingest",
        [](const std::string& sessions, const std::string& out, const std::string& attributes,
           std::size_t min_occ, std::size_t min_len, int filter_passes, double holdout) {
            IngestOptions opts;
            opts.sessions_path = sessions;
            opts.attributes_path = attributes;
            opts.min_item_occurrences = min_occ;
            opts.min_session_length = min_len;
            opts.filter_passes = filter_passes;
            opts.holdout = holdout;
            auto s = run_ingest(opts, out);
            py::dict d;
            d["items"] = s.items;
            d["train_sessions"] = s.train_sessions;
            d["test_sessions"] = s.test_sessions;
            d["train_examples"] = s.train_examples;
            d["test_examples"] = s.test_examples;
            d["avg_length"] = s.avg_length;
            d["attr_value_counts"] = s.attr_value_counts;
            d["skipped_attr_rows"] = s.skipped_attr_rows;
            return d;
        },
        py::arg("sessions"), py::arg("out"), py::arg("attributes") = std::string(),
        py::arg("min_occ") = 3, py::arg("min_len") = 2, py::arg("filter_passes") = -1,
        py::arg("holdout") = 86400.0,
        "Parse and preprocess session logs into a bundle directory");

    m.def("score_attributes",
          [](const std::string& bundle) { return score_bundle_attributes(bundle).scores; },
          py::arg("bundle"), "Rank the bundle's attributes by concentration score");

    m.def(
        "train",
        [](const std::string& bundle, const std::string& out,
           const std::vector<std::string>& attributes, std::size_t dim, std::size_t batch_size,
           double lr, double l2, int epochs, int steps, int patience, std::uint64_t seed,
           int precision, double clip_norm, const std::string& metrics_log) {
            auto outcome = run_train(
                bundle,
                make_config(dim, batch_size, lr, l2, epochs, steps, patience, seed, precision,
                            clip_norm),
                attributes, out, metrics_log);
            py::dict d;
            py::list log;
            for (const auto& e : outcome.log) log.append(log_to_dict(e));
            d["log"] = log;
            d["best_epoch"] = outcome.best_epoch;
            d["diverged"] = outcome.diverged;
            d["skipped_batches"] = outcome.skipped_batches;
            return d;
        },
        py::arg("bundle"), py::arg("out"), py::arg("attributes") = std::vector<std::string>{},
        py::arg("dim") = 64, py::arg("batch_size") = 512, py::arg("lr") = 0.004,
        py::arg("l2") = 1e-5, py::arg("epochs") = 10, py::arg("steps") = 1,
        py::arg("patience") = 3, py::arg("seed") = 42, py::arg("precision") = 32,
        py::arg("clip_norm") = 0.0, py::arg("metrics_log") = std::string(),
        "Train on a bundle and write a checkpoint");

    m.def(
        "evaluate",
        [](const std::string& bundle, const std::string& checkpoint, std::size_t topk,
           const std::vector<std::string>& baselines, bool knn_raw_counts) {
            auto reports = run_eval(checkpoint, bundle, topk, baselines, knn_raw_counts);
            py::list out;
            for (const auto& r : reports) {
                py::dict d;
                d["model"] = r.model;
                d["recall"] = r.recall;
                d["mrr"] = r.mrr;
                d["count"] = r.count;
                d["topk"] = r.topk;
                out.append(d);
            }
            return out;
        },
        py::arg("bundle"), py::arg("checkpoint") = std::string(), py::arg("topk") = 20,
        py::arg("baselines") = std::vector<std::string>{}, py::arg("knn_raw_counts") = false,
        "Evaluate a checkpoint and/or the non-neural baselines on a bundle's test split");

    m.def(
        "recommend",
        [](const std::string& checkpoint, const std::vector<std::string>& items,
           std::size_t topk) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& r : run_recommend(checkpoint, items, topk))
                out.emplace_back(r.item_id, r.probability);
            return out;
        },
        py::arg("checkpoint"), py::arg("items"), py::arg("topk") = 20,
        "Top-K (item, probability) pairs for a raw item-id prefix");

    m.def(
        "write_synthetic",
        [](const std::string& out_sessions, const std::string& out_attrs, std::size_t items,
           std::size_t sessions, std::size_t min_len, std::size_t max_len,
           const std::string& signal, std::size_t values, std::size_t decoy_attrs, double p,
           std::uint64_t seed) {
            SyntheticSpec spec;
            spec.num_items = items;
            spec.num_sessions = sessions;
            spec.min_length = min_len;
            spec.max_length = max_len;
            spec.p = p;
            spec.seed = seed;
            if (signal == "attribute-driven") {
                spec.signal = SignalType::AttributeDriven;
                spec.attrs.push_back({"signal", values, true});
            } else if (signal == "markov") {
                spec.signal = SignalType::Markov;
                spec.attrs.push_back({"attr0", values, false});
            } else if (signal == "random") {
                spec.signal = SignalType::Random;
                spec.attrs.push_back({"attr0", values, false});
            } else {
                throw std::invalid_argument("signal must be attribute-driven, markov, or random");
            }
            for (std::size_t i = 0; i < decoy_attrs; ++i)
                spec.attrs.push_back({"decoy" + std::to_string(i), values, false});
            auto [set, table] = generate(spec);
            write_sessions_csv(set, out_sessions);
            write_attributes_csv(set, table, out_attrs);
            return set.sessions.size();
        },
        py::arg("out_sessions"), py::arg("out_attrs"), py::arg("items") = 200,
        py::arg("sessions") = 1000, py::arg("min_len") = 3, py::arg("max_len") = 8,
        py::arg("signal") = "attribute-driven", py::arg("values") = 10,
        py::arg("decoy_attrs") = 0, py::arg("p") = 0.9, py::arg("seed") = 1,
        "Write a seeded synthetic corpus as session/attribute CSV files");

    m.def(
        "session_graph",
        [](const std::vector<int>& prefix, bool binary_edges) {
            GraphOptions opts;
            opts.binary_edges = binary_edges;
            auto g = build_item_graph(prefix, opts);
            py::dict d;
            d["nodes"] = g.nodes;
            d["m_in"] = g.m_in;
            d["m_out"] = g.m_out;
            d["last_slots"] = g.last_slots;
            return d;
        },
        py::arg("prefix"), py::arg("binary_edges") = false,
        "Item session graph with row-normalized incoming/outgoing adjacency");
}
