#include "murzim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "murzim/data.hpp"
#include "murzim/evaluator.hpp"

namespace murzim {

using nlohmann::json;

void adam_step(std::vector<Mat*> params, const std::vector<Mat>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    if (state.m.empty()) {
        for (const Mat* p : params) {
            state.m.emplace_back(p->rows, p->cols);
            state.v.emplace_back(p->rows, p->cols);
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Mat& p = *params[i];
        const Mat& g = grads[i];
        if (g.rows != p.rows || g.cols != p.cols)
            throw std::invalid_argument("adam_step: gradient shape mismatch at index " +
                                        std::to_string(i));
        Mat& m = state.m[i];
        Mat& v = state.v[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m.v[k] = beta1 * m.v[k] + (1.0 - beta1) * g.v[k];
            v.v[k] = beta2 * v.v[k] + (1.0 - beta2) * g.v[k] * g.v[k];
            const double mhat = m.v[k] / bc1;
            const double vhat = v.v[k] / bc2;
            p.v[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
    return cfg.initial_lr * std::pow(cfg.lr_decay, epoch / cfg.decay_every);
}

namespace {

bool all_finite(const std::vector<Mat>& mats) {
    for (const Mat& m : mats)
        for (double x : m.v)
            if (!std::isfinite(x)) return false;
    return true;
}

void clip_gradients(std::vector<Mat>& grads, double max_norm) {
    double sq = 0.0;
    for (const Mat& g : grads)
        for (double x : g.v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double factor = max_norm / norm;
    for (Mat& g : grads)
        for (double& x : g.v) x *= factor;
}

ModelConfig to_model_config(const TrainConfig& cfg, std::size_t num_attrs) {
    ModelConfig mc;
    mc.dim = cfg.dim;
    mc.num_attrs = num_attrs;
    mc.steps = cfg.steps;
    mc.shared_gru = cfg.shared_gru;
    mc.shared_attention = cfg.shared_attention;
    mc.init_gamma = cfg.init_gamma;
    mc.precision = cfg.precision;
    return mc;
}

}  // namespace

TrainResult train(const SessionSet& sessions, const AttributeTable& attrs,
                  const TrainConfig& cfg) {
    if (sessions.sessions.empty())
        throw std::invalid_argument("train: empty session set");

    // Trailing sessions by final timestamp form the validation split.
    std::vector<std::size_t> order(sessions.sessions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&sessions](std::size_t a, std::size_t b) {
        return sessions.sessions[a].times.back() < sessions.sessions[b].times.back();
    });
    const auto val_count = static_cast<std::size_t>(
        cfg.val_fraction * static_cast<double>(order.size()));
    SessionSet train_part, val_part;
    train_part.vocab = val_part.vocab = sessions.vocab;
    train_part.index = val_part.index = sessions.index;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i + val_count < order.size() ? train_part : val_part)
            .sessions.push_back(sessions.sessions[order[i]]);
    }
    if (train_part.sessions.empty()) std::swap(train_part, val_part);

    auto train_examples = augment_prefixes(train_part);
    auto val_examples = val_part.sessions.empty() ? train_examples : augment_prefixes(val_part);
    if (train_examples.empty())
        throw std::invalid_argument("train: no training examples (all sessions length 1?)");

    Rng rng(cfg.seed);
    ModelParams params = ModelParams::init(to_model_config(cfg, attrs.num_attrs()),
                                           sessions.num_items(), rng);
    AdamState opt;

    // Channel graphs per example are static; build them once.
    std::vector<std::vector<SessionGraph>> cached;
    cached.reserve(train_examples.size());
    for (const auto& ex : train_examples)
        cached.push_back(build_channels(ex.prefix, attrs, cfg.graph));

    TrainResult result;
    double best_recall = -1.0;
    int best_epoch = -1;

    std::vector<std::size_t> idx(train_examples.size());
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        rng.shuffle(idx);

        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        bool diverged = false;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, idx.size());
            std::vector<std::vector<SessionGraph>> graphs;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                graphs.push_back(cached[idx[i]]);
                labels.push_back(train_examples[idx[i]].label);
            }
            GraphBatch batch = batch_graphs(std::move(graphs), std::move(labels));

            Tape tape(cfg.precision);
            TapeModel tm = register_params(tape, params);
            double loss_val = 0.0;
            std::vector<Mat> grads;
            try {
                Tensor loss = batch_loss(tape, tm, attrs, batch, cfg.l2);
                loss_val = loss.scalar();
                tape.backward(loss);
                grads = collect_grads(tm);
            } catch (const std::runtime_error&) {
                diverged = true;  // non-finite activations or loss
                break;
            }
            if (!std::isfinite(loss_val)) {
                diverged = true;
                break;
            }
            if (!all_finite(grads)) {
                ++result.skipped_batches;
                continue;
            }
            if (cfg.clip_norm) clip_gradients(grads, *cfg.clip_norm);
            adam_step(params.all(), grads, opt, lr);
            loss_sum += loss_val;
            ++batch_count;
        }
        if (diverged) {
            result.diverged = true;
            break;
        }

        EvalReport val = evaluate_model(params, attrs, val_examples, cfg.eval_topk, cfg.graph);
        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = batch_count ? loss_sum / static_cast<double>(batch_count) : 0.0;
        entry.recall = val.recall;
        entry.mrr = val.mrr;
        entry.lr = lr;
        result.log.push_back(entry);

        if (val.recall > best_recall) {
            best_recall = val.recall;
            best_epoch = epoch;
            result.best.params = params;
            result.best.opt = opt;
            result.best.epoch = epoch;
            result.best.rng_state = rng.state();
        }
        if (cfg.patience > 0 && epoch - best_epoch >= cfg.patience) break;
    }

    if (best_epoch < 0) {  // diverged before the first epoch completed
        result.best.params = params;
        result.best.opt = opt;
        result.best.epoch = 0;
        result.best.rng_state = rng.state();
    }
    result.best.cfg = cfg;
    result.best.vocab = sessions.vocab;
    result.best.attrs = attrs;
    return result;
}

// --- Checkpoint serialization ---

namespace {

constexpr char kMagic[8] = {'M', 'U', 'R', 'Z', 'I', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

json config_to_json(const TrainConfig& c) {
    json j;
    j["dim"] = c.dim;
    j["batch_size"] = c.batch_size;
    j["l2"] = c.l2;
    j["initial_lr"] = c.initial_lr;
    j["lr_decay"] = c.lr_decay;
    j["decay_every"] = c.decay_every;
    j["epochs"] = c.epochs;
    j["patience"] = c.patience;
    j["seed"] = c.seed;
    j["steps"] = c.steps;
    j["precision"] = c.precision == Precision::Float64 ? 64 : 32;
    j["shared_gru"] = c.shared_gru;
    j["shared_attention"] = c.shared_attention;
    j["init_gamma"] = c.init_gamma;
    j["val_fraction"] = c.val_fraction;
    j["eval_topk"] = c.eval_topk;
    j["binary_edges"] = c.graph.binary_edges;
    j["bridge_empty"] = c.graph.bridge_empty;
    if (c.clip_norm) j["clip_norm"] = *c.clip_norm;
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.dim = j.at("dim").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.l2 = j.at("l2").get<double>();
    c.initial_lr = j.at("initial_lr").get<double>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.decay_every = j.at("decay_every").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.steps = j.at("steps").get<int>();
    c.precision = j.at("precision").get<int>() == 64 ? Precision::Float64 : Precision::Float32;
    c.shared_gru = j.at("shared_gru").get<bool>();
    c.shared_attention = j.at("shared_attention").get<bool>();
    c.init_gamma = j.at("init_gamma").get<double>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.eval_topk = j.at("eval_topk").get<std::size_t>();
    c.graph.binary_edges = j.at("binary_edges").get<bool>();
    c.graph.bridge_empty = j.at("bridge_empty").get<bool>();
    if (j.contains("clip_norm")) c.clip_norm = j.at("clip_norm").get<double>();
    return c;
}

json attrs_to_json(const AttributeTable& t) {
    json out = json::array();
    for (const auto& a : t.attrs) {
        json ja;
        ja["name"] = a.name;
        ja["values"] = a.values;
        ja["item_values"] = a.item_values;
        out.push_back(std::move(ja));
    }
    return out;
}

AttributeTable attrs_from_json(const json& j) {
    AttributeTable t;
    for (const auto& ja : j) {
        AttributeTable::Attribute a;
        a.name = ja.at("name").get<std::string>();
        a.values = ja.at("values").get<std::vector<std::string>>();
        a.item_values = ja.at("item_values").get<std::vector<std::vector<int>>>();
        for (std::size_t i = 0; i < a.values.size(); ++i)
            a.value_index[a.values[i]] = static_cast<int>(i);
        t.attrs.push_back(std::move(a));
    }
    return t;
}

void write_blob(std::ofstream& out, const Mat& m, Precision prec) {
    if (prec == Precision::Float64) {
        out.write(reinterpret_cast<const char*>(m.v.data()),
                  static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    } else {
        std::vector<float> f(m.v.begin(), m.v.end());
        out.write(reinterpret_cast<const char*>(f.data()),
                  static_cast<std::streamsize>(f.size() * sizeof(float)));
    }
}

void read_blob(std::ifstream& in, Mat& m, Precision prec, const std::string& path) {
    const auto offset = static_cast<long long>(in.tellg());
    if (prec == Precision::Float64) {
        in.read(reinterpret_cast<char*>(m.v.data()),
                static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    } else {
        std::vector<float> f(m.v.size());
        in.read(reinterpret_cast<char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(float)));
        std::copy(f.begin(), f.end(), m.v.begin());
    }
    if (!in)
        throw DataError(path + ": truncated checkpoint at offset " + std::to_string(offset));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json header;
    header["config"] = config_to_json(ckpt.cfg);
    header["vocab"] = ckpt.vocab;
    header["attributes"] = attrs_to_json(ckpt.attrs);
    header["epoch"] = ckpt.epoch;
    header["rng_state"] = ckpt.rng_state;
    header["adam_step"] = ckpt.opt.step;
    header["num_attrs"] = ckpt.params.cfg.num_attrs;
    header["param_names"] = ckpt.params.names();
    json shapes = json::array();
    for (const Mat* m : ckpt.params.all()) shapes.push_back({m->rows, m->cols});
    header["param_shapes"] = std::move(shapes);

    const std::string body = header.dump();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint to " + tmp);
        out.write(kMagic, sizeof(kMagic));
        const std::uint32_t version = kVersion;
        out.write(reinterpret_cast<const char*>(&version), sizeof(version));
        const std::uint64_t len = body.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        for (const Mat* m : ckpt.params.all()) write_blob(out, *m, ckpt.cfg.precision);
        const bool has_opt = !ckpt.opt.m.empty();
        const std::uint8_t opt_flag = has_opt ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&opt_flag), 1);
        if (has_opt) {
            for (const Mat& m : ckpt.opt.m) write_blob(out, m, ckpt.cfg.precision);
            for (const Mat& m : ckpt.opt.v) write_blob(out, m, ckpt.cfg.precision);
        }
        if (!out) throw DataError("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kMagic))
        throw DataError(path + ": not a checkpoint file (bad magic at offset 0)");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in) throw DataError(path + ": truncated checkpoint at offset 12");
    std::string body(len, '\0');
    in.read(body.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError(path + ": truncated checkpoint header at offset 20");

    json header;
    try {
        header = json::parse(body);
    } catch (const json::exception& e) {
        throw DataError(path + ": corrupt checkpoint header: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.version = version;
    ckpt.cfg = config_from_json(header.at("config"));
    ckpt.vocab = header.at("vocab").get<std::vector<std::string>>();
    ckpt.attrs = attrs_from_json(header.at("attributes"));
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();

    Rng dummy;  // parameter container only; values are overwritten below
    ckpt.params = ModelParams::init(
        to_model_config(ckpt.cfg, header.at("num_attrs").get<std::size_t>()),
        ckpt.vocab.size(), dummy);

    const auto shapes = header.at("param_shapes");
    auto mats = ckpt.params.all();
    if (shapes.size() != mats.size())
        throw DataError(path + ": checkpoint has " + std::to_string(shapes.size()) +
                        " parameters, expected " + std::to_string(mats.size()));
    for (std::size_t i = 0; i < mats.size(); ++i) {
        const auto r = shapes[i][0].get<std::size_t>();
        const auto c = shapes[i][1].get<std::size_t>();
        if (r != mats[i]->rows || c != mats[i]->cols)
            throw DataError(path + ": parameter " + std::to_string(i) + " has shape " +
                            std::to_string(r) + "x" + std::to_string(c) + ", expected " +
                            std::to_string(mats[i]->rows) + "x" + std::to_string(mats[i]->cols));
    }
    for (Mat* m : mats) read_blob(in, *m, ckpt.cfg.precision, path);

    std::uint8_t opt_flag = 0;
    in.read(reinterpret_cast<char*>(&opt_flag), 1);
    if (!in) throw DataError(path + ": truncated checkpoint (missing optimizer flag)");
    if (opt_flag) {
        ckpt.opt.step = header.at("adam_step").get<long>();
        for (Mat* m : mats) {
            ckpt.opt.m.emplace_back(m->rows, m->cols);
            read_blob(in, ckpt.opt.m.back(), ckpt.cfg.precision, path);
        }
        for (Mat* m : mats) {
            ckpt.opt.v.emplace_back(m->rows, m->cols);
            read_blob(in, ckpt.opt.v.back(), ckpt.cfg.precision, path);
        }
    }
    return ckpt;
}

void write_metrics_log(const std::vector<EpochLog>& log, const std::string& path,
                       char delimiter) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write metrics log to " + path);
    out << "epoch" << delimiter << "loss" << delimiter << "recall@20" << delimiter
        << "mrr@20" << delimiter << "lr\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%d%c%.12g%c%.12g%c%.12g%c%.12g\n", e.epoch, delimiter,
                      e.loss, delimiter, e.recall, delimiter, e.mrr, delimiter, e.lr);
        out << buf;
    }
}

}  // namespace murzim
