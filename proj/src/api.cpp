#include "murzim/api.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "murzim/synthetic.hpp"

namespace murzim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kBundleVersion = 1;

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string sessions_csv(const SessionSet& set) {
    std::ostringstream os;
    os << "session_id,item_id,timestamp\n";
    for (const auto& s : set.sessions)
        for (std::size_t t = 0; t < s.items.size(); ++t)
            os << s.id << "," << set.vocab[static_cast<std::size_t>(s.items[t])] << ","
               << s.times[t] << "\n";
    return os.str();
}

std::string attributes_csv(const SessionSet& set, const AttributeTable& table) {
    std::ostringstream os;
    os << "item_id,attribute,value\n";
    for (const auto& attr : table.attrs)
        for (std::size_t i = 0; i < attr.item_values.size(); ++i)
            for (int v : attr.item_values[i])
                os << set.vocab[i] << "," << attr.name << ","
                   << attr.values[static_cast<std::size_t>(v)] << "\n";
    return os.str();
}

// Re-parses a bundle CSV against a fixed vocabulary.
SessionSet parse_with_vocab(const fs::path& path, const std::vector<std::string>& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    SessionSet raw = parse_sessions(in);
    SessionSet out;
    out.vocab = vocab;
    for (std::size_t i = 0; i < vocab.size(); ++i) out.index[vocab[i]] = static_cast<int>(i);
    for (auto& s : raw.sessions) {
        for (int& item : s.items) {
            const std::string& id = raw.vocab[static_cast<std::size_t>(item)];
            int idx = out.lookup(id);
            if (idx < 0)
                throw DataError(path.string() + ": item '" + id + "' not in bundle vocabulary");
            item = idx;
        }
        out.sessions.push_back(std::move(s));
    }
    return out;
}

}  // namespace

BundleSummary run_ingest(const IngestOptions& opts, const std::string& out_dir) {
    std::ifstream sess_in(opts.sessions_path);
    if (!sess_in) throw DataError("cannot open sessions file " + opts.sessions_path);
    SessionSet raw = parse_sessions(sess_in, opts.fmt);
    SessionSet clean = preprocess(raw, opts.min_item_occurrences, opts.min_session_length,
                                  opts.filter_passes);
    TimeSplit split = split_by_time(clean, opts.holdout);

    BundleSummary summary;
    AttributeTable attrs;
    if (!opts.attributes_path.empty()) {
        std::ifstream attr_in(opts.attributes_path);
        if (!attr_in) throw DataError("cannot open attributes file " + opts.attributes_path);
        attrs = parse_attributes(attr_in, split.train, opts.fmt, &summary.skipped_attr_rows);
    }

    summary.items = split.train.num_items();
    summary.train_sessions = split.train.sessions.size();
    summary.test_sessions = split.test.sessions.size();
    summary.train_examples = augment_prefixes(split.train).size();
    summary.test_examples = augment_prefixes(split.test).size();
    summary.trimmed_test_items = split.trimmed_test_items;
    summary.dropped_test_sessions = split.dropped_test_sessions;
    std::size_t total_len = 0, total_sessions = 0;
    for (const auto* set : {&split.train, &split.test}) {
        for (const auto& s : set->sessions) total_len += s.items.size();
        total_sessions += set->sessions.size();
    }
    summary.avg_length =
        total_sessions ? static_cast<double>(total_len) / static_cast<double>(total_sessions) : 0.0;
    for (const auto& a : attrs.attrs)
        summary.attr_value_counts.emplace_back(a.name, a.values.size());

    fs::create_directories(out_dir);
    json meta;
    meta["version"] = kBundleVersion;
    meta["vocab"] = split.train.vocab;
    meta["items"] = summary.items;
    meta["train_sessions"] = summary.train_sessions;
    meta["test_sessions"] = summary.test_sessions;
    meta["avg_length"] = summary.avg_length;
    json attr_meta = json::array();
    for (const auto& [name, count] : summary.attr_value_counts)
        attr_meta.push_back({{"name", name}, {"num_values", count}});
    meta["attributes"] = std::move(attr_meta);
    write_text(fs::path(out_dir) / "meta.json", meta.dump(2) + "\n");
    write_text(fs::path(out_dir) / "train_sessions.csv", sessions_csv(split.train));
    write_text(fs::path(out_dir) / "test_sessions.csv", sessions_csv(split.test));
    write_text(fs::path(out_dir) / "attributes.csv", attributes_csv(split.train, attrs));
    return summary;
}

Bundle load_bundle(const std::string& dir) {
    json meta;
    try {
        meta = json::parse(read_text(fs::path(dir) / "meta.json"));
    } catch (const json::exception& e) {
        throw DataError(dir + "/meta.json: " + e.what());
    }
    if (meta.at("version").get<int>() != kBundleVersion)
        throw DataError(dir + ": unsupported bundle version");
    const auto vocab = meta.at("vocab").get<std::vector<std::string>>();

    Bundle bundle;
    bundle.train = parse_with_vocab(fs::path(dir) / "train_sessions.csv", vocab);
    bundle.test = parse_with_vocab(fs::path(dir) / "test_sessions.csv", vocab);
    std::ifstream attr_in(fs::path(dir) / "attributes.csv");
    if (attr_in) bundle.attrs = parse_attributes(attr_in, bundle.train);
    return bundle;
}

AttributeScoreReport score_bundle_attributes(const std::string& bundle_dir) {
    Bundle bundle = load_bundle(bundle_dir);
    return rank_attributes(bundle.train, bundle.attrs);
}

TrainOutcome run_train(const std::string& bundle_dir, const TrainConfig& cfg,
                       const std::vector<std::string>& attribute_names,
                       const std::string& checkpoint_out, const std::string& metrics_log_out) {
    Bundle bundle = load_bundle(bundle_dir);
    AttributeTable selected;
    if (attribute_names.size() == 1 && attribute_names[0] == "none") {
        // K = 0 ablation
    } else if (attribute_names.empty()) {
        selected = bundle.attrs;
    } else {
        selected = select_attributes(bundle.attrs, attribute_names);
    }

    TrainResult result = train(bundle.train, selected, cfg);
    if (!checkpoint_out.empty()) save_checkpoint(result.best, checkpoint_out);
    if (!metrics_log_out.empty()) write_metrics_log(result.log, metrics_log_out);

    TrainOutcome outcome;
    outcome.log = result.log;
    outcome.skipped_batches = result.skipped_batches;
    outcome.diverged = result.diverged;
    outcome.best_epoch = result.best.epoch;
    return outcome;
}

std::vector<EvalReport> run_eval(const std::string& checkpoint_path,
                                 const std::string& bundle_dir, std::size_t k,
                                 const std::vector<std::string>& baselines,
                                 bool knn_raw_counts) {
    Bundle bundle = load_bundle(bundle_dir);
    auto test_examples = augment_prefixes(bundle.test);

    std::vector<EvalReport> reports;
    if (!checkpoint_path.empty()) {
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        if (ckpt.vocab != bundle.train.vocab)
            throw DataError("checkpoint vocabulary does not match bundle " + bundle_dir);
        reports.push_back(evaluate_model(ckpt.params, ckpt.attrs, test_examples, k,
                                         ckpt.cfg.graph));
    }
    for (const auto& name : baselines) {
        Ranker ranker;
        if (name == "pop")
            ranker = pop_baseline(bundle.train);
        else if (name == "spop")
            ranker = spop_baseline(bundle.train);
        else if (name == "itemknn")
            ranker = itemknn_baseline(bundle.train, knn_raw_counts);
        else
            throw std::invalid_argument("unknown baseline '" + name + "'");
        reports.push_back(
            evaluate_ranker(ranker, test_examples, bundle.train.num_items(), k, name));
    }
    return reports;
}

std::vector<Recommendation> run_recommend(const std::string& checkpoint_path,
                                          const std::vector<std::string>& item_ids,
                                          std::size_t k) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < ckpt.vocab.size(); ++i)
        index[ckpt.vocab[i]] = static_cast<int>(i);

    std::vector<int> prefix;
    for (const auto& id : item_ids) {
        auto it = index.find(id);
        if (it == index.end()) throw DataError("unknown item id '" + id + "'");
        prefix.push_back(it->second);
    }
    if (prefix.empty()) throw std::invalid_argument("recommend: empty item list");

    auto channels = build_channels(prefix, ckpt.attrs, ckpt.cfg.graph);
    GraphBatch batch = batch_graphs({std::move(channels)}, {0});
    ForwardOutput out = forward(ckpt.params, ckpt.attrs, batch);
    const auto& probs = out.scores[0];

    auto order = rank_items(probs);
    std::vector<Recommendation> recs;
    for (std::size_t i = 0; i < order.size() && i < k; ++i)
        recs.push_back({ckpt.vocab[static_cast<std::size_t>(order[i])],
                        probs[static_cast<std::size_t>(order[i])]});
    return recs;
}

}  // namespace murzim
