#include "murzim/model.hpp"

#include <algorithm>
#include <cmath>

namespace murzim {

namespace {

Mat uniform_mat(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
    Mat m(rows, cols);
    for (double& x : m.v) x = rng.uniform(-bound, bound);
    return m;
}

GruMats init_gru(std::size_t d, double bound, Rng& rng) {
    GruMats g;
    g.w_update = uniform_mat(d, 2 * d, bound, rng);
    g.u_update = uniform_mat(d, d, bound, rng);
    g.b_update = Mat(1, d);
    g.w_reset = uniform_mat(d, 2 * d, bound, rng);
    g.u_reset = uniform_mat(d, d, bound, rng);
    g.b_reset = Mat(1, d);
    g.w_cand = uniform_mat(d, 2 * d, bound, rng);
    g.u_cand = uniform_mat(d, d, bound, rng);
    g.b_cand = Mat(1, d);
    return g;
}

AttnMats init_attn(std::size_t d, double bound, Rng& rng) {
    AttnMats a;
    a.w1 = uniform_mat(d, d, bound, rng);
    a.w2 = uniform_mat(d, d, bound, rng);
    a.q = uniform_mat(1, d, bound, rng);
    a.c = Mat(1, d);
    a.w3 = uniform_mat(d, 2 * d, bound, rng);
    return a;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::size_t vocab, Rng& rng) {
    ModelParams p;
    p.cfg = cfg;
    p.vocab = vocab;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    p.item_emb = uniform_mat(vocab, cfg.dim, bound, rng);
    for (std::size_t j = 0; j < cfg.num_attrs; ++j)
        p.attr_proj.push_back(uniform_mat(cfg.dim, cfg.dim, bound, rng));
    const std::size_t gru_count = cfg.shared_gru ? 1 : 1 + cfg.num_attrs;
    for (std::size_t i = 0; i < gru_count; ++i) p.gru.push_back(init_gru(cfg.dim, bound, rng));
    const std::size_t attn_count = cfg.shared_attention ? 1 : 1 + cfg.num_attrs;
    for (std::size_t i = 0; i < attn_count; ++i) p.attn.push_back(init_attn(cfg.dim, bound, rng));
    p.w_fuse = uniform_mat(cfg.dim, cfg.dim, bound, rng);
    p.raw_gamma = Mat(1, 1);
    p.raw_gamma.v[0] = std::log(cfg.init_gamma);
    return p;
}

std::vector<Mat*> ModelParams::all() {
    std::vector<Mat*> out;
    out.push_back(&item_emb);
    for (auto& m : attr_proj) out.push_back(&m);
    for (auto& g : gru)
        for (Mat* m : {&g.w_update, &g.u_update, &g.b_update, &g.w_reset, &g.u_reset, &g.b_reset,
                       &g.w_cand, &g.u_cand, &g.b_cand})
            out.push_back(m);
    for (auto& a : attn)
        for (Mat* m : {&a.w1, &a.w2, &a.q, &a.c, &a.w3}) out.push_back(m);
    out.push_back(&w_fuse);
    out.push_back(&raw_gamma);
    return out;
}

std::vector<const Mat*> ModelParams::all() const {
    auto mats = const_cast<ModelParams*>(this)->all();
    return {mats.begin(), mats.end()};
}

std::vector<std::string> ModelParams::names() const {
    std::vector<std::string> out;
    out.push_back("item_emb");
    for (std::size_t j = 0; j < attr_proj.size(); ++j)
        out.push_back("attr_proj_" + std::to_string(j));
    for (std::size_t i = 0; i < gru.size(); ++i)
        for (const char* part : {"w_update", "u_update", "b_update", "w_reset", "u_reset",
                                 "b_reset", "w_cand", "u_cand", "b_cand"})
            out.push_back("gru_" + std::to_string(i) + "." + part);
    for (std::size_t i = 0; i < attn.size(); ++i)
        for (const char* part : {"w1", "w2", "q", "c", "w3"})
            out.push_back("attn_" + std::to_string(i) + "." + part);
    out.push_back("w_fuse");
    out.push_back("raw_gamma");
    return out;
}

TapeModel register_params(Tape& tape, const ModelParams& params) {
    auto reg = [&tape](const Mat& m) { return tape.param(m.rows, m.cols, m.v); };
    TapeModel tm;
    tm.source = &params;
    tm.item_emb = reg(params.item_emb);
    for (const auto& m : params.attr_proj) tm.attr_proj.push_back(reg(m));
    for (const auto& g : params.gru) {
        GruWeights w;
        w.w_update = reg(g.w_update);
        w.u_update = reg(g.u_update);
        w.b_update = reg(g.b_update);
        w.w_reset = reg(g.w_reset);
        w.u_reset = reg(g.u_reset);
        w.b_reset = reg(g.b_reset);
        w.w_cand = reg(g.w_cand);
        w.u_cand = reg(g.u_cand);
        w.b_cand = reg(g.b_cand);
        tm.gru.push_back(w);
    }
    for (const auto& a : params.attn) {
        TapeModel::AttnTensors t;
        t.w1 = reg(a.w1);
        t.w2 = reg(a.w2);
        t.q = reg(a.q);
        t.c = reg(a.c);
        t.w3 = reg(a.w3);
        tm.attn.push_back(t);
    }
    tm.w_fuse = reg(params.w_fuse);
    tm.raw_gamma = reg(params.raw_gamma);
    return tm;
}

std::vector<Tensor> TapeModel::all() const {
    std::vector<Tensor> out;
    out.push_back(item_emb);
    for (const auto& t : attr_proj) out.push_back(t);
    for (const auto& g : gru)
        for (Tensor t : {g.w_update, g.u_update, g.b_update, g.w_reset, g.u_reset, g.b_reset,
                         g.w_cand, g.u_cand, g.b_cand})
            out.push_back(t);
    for (const auto& a : attn)
        for (Tensor t : {a.w1, a.w2, a.q, a.c, a.w3}) out.push_back(t);
    out.push_back(w_fuse);
    out.push_back(raw_gamma);
    return out;
}

std::vector<Mat> collect_grads(const TapeModel& tm) {
    std::vector<Mat> out;
    for (Tensor t : tm.all()) {
        Mat m(t.rows(), t.cols());
        m.v = t.grad();
        out.push_back(std::move(m));
    }
    return out;
}

Tensor init_node_embeddings(Tape& tape, const TapeModel& tm, std::size_t channel,
                            const SessionGraph& graph, const std::vector<int>& session_items,
                            const AttributeTable::Attribute* attr) {
    if (channel == 0) {
        std::vector<std::size_t> rows(graph.nodes.begin(), graph.nodes.end());
        return row_gather(tm.item_emb, rows);
    }
    if (attr == nullptr)
        throw std::invalid_argument("init_node_embeddings: attribute channel needs a value map");

    const std::size_t d = tm.item_emb.cols();
    const std::size_t n = graph.n();
    if (n == 0) return tape.zeros(0, d);

    // indicator[node][i] = 1 when session item i carries the node's value
    const std::size_t u = session_items.size();
    std::vector<double> indicator(n * u, 0.0);
    std::vector<double> row_counts(n, 0.0);
    for (std::size_t slot = 0; slot < n; ++slot) {
        const int value = graph.nodes[slot];
        for (std::size_t i = 0; i < u; ++i) {
            const auto& vals = attr->item_values[static_cast<std::size_t>(session_items[i])];
            if (std::binary_search(vals.begin(), vals.end(), value)) {
                indicator[slot * u + i] = 1.0;
                row_counts[slot] += 1.0;
            }
        }
    }
    const bool per_containing = tm.source->cfg.attr_mean_over_containing;
    for (std::size_t slot = 0; slot < n; ++slot) {
        const double div = per_containing ? std::max(row_counts[slot], 1.0)
                                          : static_cast<double>(u);
        for (std::size_t i = 0; i < u; ++i) indicator[slot * u + i] /= div;
    }
    Tensor ind = tape.constant(n, u, std::move(indicator));
    std::vector<std::size_t> rows(session_items.begin(), session_items.end());
    Tensor items = row_gather(tm.item_emb, rows);                       // u x d
    Tensor projected = matmul(items, transpose(tm.attr_proj[channel - 1]));  // u x d
    return matmul(ind, projected);                                      // n x d
}

Tensor propagate(Tape& tape, Tensor node_emb, const SessionGraph& graph,
                 const GruWeights& gru, int steps) {
    if (steps < 1) throw std::invalid_argument("propagate: steps must be >= 1");
    const std::size_t n = graph.n();
    Tensor m_in = tape.constant(n, n, graph.m_in);
    Tensor m_out = tape.constant(n, n, graph.m_out);
    Tensor e = node_emb;
    for (int s = 0; s < steps; ++s) {
        Tensor msg = concat_cols(matmul(m_in, e), matmul(m_out, e));  // n x 2d
        e = gru_cell(e, msg, gru);
    }
    return e;
}

Tensor sequence_embedding(Tape& tape, Tensor node_emb, const std::vector<int>& last_slots,
                          const TapeModel::AttnTensors& attn) {
    if (node_emb.rows() == 0 || last_slots.empty())
        throw std::invalid_argument("sequence_embedding: empty channel");
    std::vector<std::size_t> last(last_slots.begin(), last_slots.end());
    Tensor e_last = row_gather(node_emb, last);  // may be several slots
    if (last.size() > 1) {
        Tensor ones = tape.constant(1, last.size(),
                                    std::vector<double>(last.size(), 1.0 / last.size()));
        e_last = matmul(ones, e_last);  // mean over last-item value slots
    }
    // alpha_i = q^T sigmoid(W1 e_T + W2 e_i + c)
    Tensor keyed = add_rowvec(matmul(node_emb, transpose(attn.w2)),
                              add(matmul(e_last, transpose(attn.w1)), attn.c));
    Tensor alpha = matmul(sigmoid(keyed), transpose(attn.q));  // n x 1
    Tensor tau = matmul(transpose(alpha), node_emb);           // 1 x d
    return matmul(concat_cols(tau, e_last), transpose(attn.w3));
}

Tensor fuse_sequences(Tape& tape, const std::vector<Tensor>& seq_embs, Tensor w_fuse,
                      std::size_t dim) {
    if (seq_embs.empty()) throw std::invalid_argument("fuse_sequences: no channels");
    Tensor s0 = seq_embs[0];
    Tensor query = matmul(s0, w_fuse);  // 1 x d
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim));
    Tensor z = s0;
    for (const Tensor& sj : seq_embs) {
        Tensor coeff = sigmoid(scale(matmul(query, transpose(sj)), inv_sqrt_d));  // 1x1
        z = add(z, smul(coeff, sj));
    }
    (void)tape;
    return z;
}

Tensor score_items(Tape& tape, Tensor z, Tensor item_emb, Tensor raw_gamma) {
    Tensor gamma = exp_op(raw_gamma);
    Tensor numer = matmul(item_emb, transpose(z));      // |V| x 1
    Tensor denom = smul(rows_l2norm(z), rows_l2norm(item_emb));
    Tensor cosine = cdiv(numer, denom);
    Tensor logits = transpose(smul(gamma, cosine));     // 1 x |V|
    (void)tape;
    return softmax_rows(logits);
}

Tensor example_loss(Tape& tape, Tensor probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.cols())
        throw std::invalid_argument("example_loss: label out of range");
    (void)tape;
    return scale(log_op(pick(probs, 0, static_cast<std::size_t>(label))), -1.0);
}

Tensor l2_penalty(Tape& tape, const TapeModel& tm, double lambda) {
    Tensor total = tape.zeros(1, 1);
    for (Tensor p : tm.all()) total = add(total, sum_all(mul(p, p)));
    return scale(total, lambda);
}

Tensor forward_example(Tape& tape, const TapeModel& tm, const AttributeTable& attrs,
                       const GraphBatch& batch, std::size_t example) {
    if (batch.channels.size() != 1 + attrs.num_attrs())
        throw std::invalid_argument("forward_example: batch channel count does not match K");
    const std::size_t d = tm.item_emb.cols();
    const auto& item_graph = batch.channels[0].graphs[example];
    std::vector<Tensor> seq_embs;
    for (std::size_t c = 0; c < batch.channels.size(); ++c) {
        const auto& g = batch.channels[c].graphs[example];
        if (g.n() == 0) {
            // Channel with no attribute values anywhere in the prefix.
            seq_embs.push_back(tape.zeros(1, d));
            continue;
        }
        const AttributeTable::Attribute* attr = c == 0 ? nullptr : &attrs.attrs[c - 1];
        Tensor e0 = init_node_embeddings(tape, tm, c, g, item_graph.nodes, attr);
        Tensor e = propagate(tape, e0, g, tm.gru_for(c), tm.source->cfg.steps);
        seq_embs.push_back(sequence_embedding(tape, e, g.last_slots, tm.attn_for(c)));
    }
    Tensor z = fuse_sequences(tape, seq_embs, tm.w_fuse, d);
    return score_items(tape, z, tm.item_emb, tm.raw_gamma);
}

ForwardOutput forward(const ModelParams& params, const AttributeTable& attrs,
                      const GraphBatch& batch) {
    ForwardOutput out;
    Tape tape(params.cfg.precision);
    TapeModel tm = register_params(tape, params);
    for (std::size_t i = 0; i < batch.batch_size(); ++i) {
        Tensor probs = forward_example(tape, tm, attrs, batch, i);
        out.scores.push_back(probs.values());
    }
    return out;
}

Tensor batch_loss(Tape& tape, const TapeModel& tm, const AttributeTable& attrs,
                  const GraphBatch& batch, double lambda) {
    if (batch.batch_size() == 0) throw std::invalid_argument("batch_loss: empty batch");
    Tensor total = tape.zeros(1, 1);
    for (std::size_t i = 0; i < batch.batch_size(); ++i) {
        Tensor probs = forward_example(tape, tm, attrs, batch, i);
        total = add(total, example_loss(tape, probs, batch.labels[i]));
    }
    Tensor mean_ce = scale(total, 1.0 / static_cast<double>(batch.batch_size()));
    return add(mean_ce, l2_penalty(tape, tm, lambda));
}

}  // namespace murzim
