#pragma once

#include <string>
#include <vector>

#include "murzim/attribute_score.hpp"
#include "murzim/data.hpp"
#include "murzim/evaluator.hpp"
#include "murzim/trainer.hpp"

namespace murzim {

// Dataset bundle: a directory of versioned files (meta.json, train_sessions.csv,
// test_sessions.csv, attributes.csv) produced by ingest.

struct IngestOptions {
    std::string sessions_path;
    std::string attributes_path;  // optional
    FormatConfig fmt;
    std::size_t min_item_occurrences = 3;
    std::size_t min_session_length = 2;
    int filter_passes = -1;       // -1 = iterate to fixpoint
    double holdout = 86400;       // trailing window whose sessions form the test set
};

struct BundleSummary {
    std::size_t items = 0;
    std::size_t train_sessions = 0;
    std::size_t test_sessions = 0;
    std::size_t train_examples = 0;
    std::size_t test_examples = 0;
    double avg_length = 0.0;
    std::vector<std::pair<std::string, std::size_t>> attr_value_counts;
    std::size_t skipped_attr_rows = 0;
    std::size_t trimmed_test_items = 0;
    std::size_t dropped_test_sessions = 0;
};

struct Bundle {
    SessionSet train;
    SessionSet test;
    AttributeTable attrs;
};

BundleSummary run_ingest(const IngestOptions& opts, const std::string& out_dir);
Bundle load_bundle(const std::string& dir);

AttributeScoreReport score_bundle_attributes(const std::string& bundle_dir);

struct TrainOutcome {
    std::vector<EpochLog> log;
    std::size_t skipped_batches = 0;
    bool diverged = false;
    int best_epoch = 0;
};

// attribute_names: explicit selection; an empty list means every attribute in
// the bundle; the single entry "none" trains the K=0 ablation.
TrainOutcome run_train(const std::string& bundle_dir, const TrainConfig& cfg,
                       const std::vector<std::string>& attribute_names,
                       const std::string& checkpoint_out, const std::string& metrics_log_out);

std::vector<EvalReport> run_eval(const std::string& checkpoint_path,
                                 const std::string& bundle_dir, std::size_t k,
                                 const std::vector<std::string>& baselines,
                                 bool knn_raw_counts = false);

struct Recommendation {
    std::string item_id;
    double probability = 0.0;
};

std::vector<Recommendation> run_recommend(const std::string& checkpoint_path,
                                          const std::vector<std::string>& item_ids,
                                          std::size_t k);

}  // namespace murzim
