#pragma once

#include <string>
#include <vector>

#include "murzim/graph.hpp"
#include "murzim/rng.hpp"
#include "murzim/tensor.hpp"

namespace murzim {

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    std::size_t size() const { return rows * cols; }
};

struct ModelConfig {
    std::size_t dim = 64;
    std::size_t num_attrs = 0;       // K
    int steps = 1;                   // propagation steps
    bool shared_gru = true;          // one gated-GNN for all channels
    bool shared_attention = false;   // W1/W2/q/c/W3 per channel by default
    bool attr_mean_over_containing = false;  // divide by indicator count instead of |V_s0|
    double init_gamma = 10.0;
    Precision precision = Precision::Float32;
};

struct GruMats {
    Mat w_update, u_update, b_update;
    Mat w_reset, u_reset, b_reset;
    Mat w_cand, u_cand, b_cand;
};

struct AttnMats {
    Mat w1, w2;   // d x d
    Mat q, c;     // 1 x d
    Mat w3;       // d x 2d
};

// All trainable parameters. gamma is stored as a raw log so the effective
// cosine temperature exp(raw) stays positive.
struct ModelParams {
    ModelConfig cfg;
    std::size_t vocab = 0;

    Mat item_emb;                 // |V| x d
    std::vector<Mat> attr_proj;   // K projections, d x d
    std::vector<GruMats> gru;     // 1 if shared, else 1+K
    std::vector<AttnMats> attn;   // 1 if shared, else 1+K
    Mat w_fuse;                   // d x d
    Mat raw_gamma;                // 1 x 1

    static ModelParams init(const ModelConfig& cfg, std::size_t vocab, Rng& rng);

    // Flat views over every trainable matrix, in a fixed order.
    std::vector<Mat*> all();
    std::vector<const Mat*> all() const;
    std::vector<std::string> names() const;

    const GruMats& gru_for(std::size_t channel) const {
        return gru[cfg.shared_gru ? 0 : channel];
    }
    const AttnMats& attn_for(std::size_t channel) const {
        return attn[cfg.shared_attention ? 0 : channel];
    }
};

// Tape-resident mirror of ModelParams; gradients land on these tensors.
struct TapeModel {
    Tensor item_emb;
    std::vector<Tensor> attr_proj;
    std::vector<GruWeights> gru;
    struct AttnTensors {
        Tensor w1, w2, q, c, w3;
    };
    std::vector<AttnTensors> attn;
    Tensor w_fuse;
    Tensor raw_gamma;
    const ModelParams* source = nullptr;

    std::vector<Tensor> all() const;
    const GruWeights& gru_for(std::size_t channel) const {
        return gru[source->cfg.shared_gru ? 0 : channel];
    }
    const AttnTensors& attn_for(std::size_t channel) const {
        return attn[source->cfg.shared_attention ? 0 : channel];
    }
};

TapeModel register_params(Tape& tape, const ModelParams& params);

// Copies accumulated tape gradients back into Mat form, ordered as all().
std::vector<Mat> collect_grads(const TapeModel& tm);

// --- Forward building blocks (all differentiable through the tape) ---

// Item channel (attr == nullptr): rows gathered from the embedding table.
// Attribute channel j: each value embedding is the projected sum over the
// session's unique items carrying it, divided by the unique-item count.
Tensor init_node_embeddings(Tape& tape, const TapeModel& tm, std::size_t channel,
                            const SessionGraph& graph, const std::vector<int>& session_items,
                            const AttributeTable::Attribute* attr);

// Synchronous gated propagation over M_in/M_out for the given step count.
Tensor propagate(Tape& tape, Tensor node_emb, const SessionGraph& graph,
                 const GruWeights& gru, int steps);

// Attention-pooled channel summary conditioned on the last element.
Tensor sequence_embedding(Tape& tape, Tensor node_emb, const std::vector<int>& last_slots,
                          const TapeModel::AttnTensors& attn);

// Sigmoid-weighted residual fusion of channel embeddings; s[0] is the item
// channel and participates in its own attention term.
Tensor fuse_sequences(Tape& tape, const std::vector<Tensor>& seq_embs, Tensor w_fuse,
                      std::size_t dim);

// Cosine-softmax item probabilities, 1 x |V|.
Tensor score_items(Tape& tape, Tensor z, Tensor item_emb, Tensor raw_gamma);

// Cross entropy for one example's probability row.
Tensor example_loss(Tape& tape, Tensor probs, int label);

// lambda * sum of squared parameter entries.
Tensor l2_penalty(Tape& tape, const TapeModel& tm, double lambda);

// Probabilities for one example of a batch, 1 x |V|.
Tensor forward_example(Tape& tape, const TapeModel& tm, const AttributeTable& attrs,
                       const GraphBatch& batch, std::size_t example);

struct ForwardOutput {
    std::vector<std::vector<double>> scores;  // per example, |V| probabilities
};

ForwardOutput forward(const ModelParams& params, const AttributeTable& attrs,
                      const GraphBatch& batch);

// Mean cross entropy over the batch plus the L2 penalty.
Tensor batch_loss(Tape& tape, const TapeModel& tm, const AttributeTable& attrs,
                  const GraphBatch& batch, double lambda);

}  // namespace murzim
