#pragma once

#include <optional>
#include <string>
#include <vector>

#include "murzim/model.hpp"

namespace murzim {

struct TrainConfig {
    std::size_t dim = 64;
    std::size_t batch_size = 512;
    double l2 = 1e-5;
    double initial_lr = 0.004;
    double lr_decay = 0.1;       // multiply by this every decay_every epochs
    int decay_every = 2;
    int epochs = 10;
    int patience = 3;            // early stop on validation Recall@20; <=0 disables
    std::uint64_t seed = 42;
    int steps = 1;
    Precision precision = Precision::Float32;
    bool shared_gru = true;
    bool shared_attention = false;
    double init_gamma = 10.0;
    double val_fraction = 0.1;   // trailing sessions by time; 0 evaluates on train
    std::size_t eval_topk = 20;
    std::optional<double> clip_norm;
    GraphOptions graph;
};

struct AdamState {
    std::vector<Mat> m, v;
    long step = 0;
};

// Bias-corrected Adam over the flattened parameter list. Grads with non-finite
// entries must be filtered by the caller (train() skips those batches).
void adam_step(std::vector<Mat*> params, const std::vector<Mat>& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double recall = 0.0;
    double mrr = 0.0;
    double lr = 0.0;
};

struct Checkpoint {
    std::uint32_t version = 1;
    TrainConfig cfg;
    std::vector<std::string> vocab;
    AttributeTable attrs;        // the selected attributes, keyed by item index
    ModelParams params;
    AdamState opt;
    int epoch = 0;
    std::string rng_state;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
    std::size_t skipped_batches = 0;
    bool diverged = false;
};

// Mini-batch training over prefix-augmented examples from the given sessions.
// The attribute table must already be restricted to the selected attributes.
TrainResult train(const SessionSet& sessions, const AttributeTable& attrs,
                  const TrainConfig& cfg);

// Versioned binary container; round trips are bitwise lossless for the stored
// precision. Corrupt or truncated files raise DataError with the byte offset.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_metrics_log(const std::vector<EpochLog>& log, const std::string& path,
                       char delimiter = ',');

}  // namespace murzim
