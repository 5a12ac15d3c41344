#include "murzim/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace murzim {

namespace {

void check_lengths(const std::vector<std::vector<int>>& ranked, const std::vector<int>& labels) {
    if (ranked.size() != labels.size())
        throw std::invalid_argument("metrics: " + std::to_string(ranked.size()) +
                                    " ranked lists vs " + std::to_string(labels.size()) +
                                    " labels");
}

std::size_t rank_in_list(const std::vector<int>& ranked, int label) {
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (ranked[i] == label) return i + 1;
    return ranked.size() + 1;
}

}  // namespace

double recall_at_k(const std::vector<std::vector<int>>& ranked_lists,
                   const std::vector<int>& labels, std::size_t k) {
    check_lengths(ranked_lists, labels);
    if (ranked_lists.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (rank_in_list(ranked_lists[i], labels[i]) <= k) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double mrr_at_k(const std::vector<std::vector<int>>& ranked_lists,
                const std::vector<int>& labels, std::size_t k) {
    check_lengths(ranked_lists, labels);
    if (ranked_lists.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t r = rank_in_list(ranked_lists[i], labels[i]);
        if (r <= k) total += 1.0 / static_cast<double>(r);
    }
    return total / static_cast<double>(labels.size());
}

std::vector<int> rank_items(const std::vector<double>& scores) {
    for (double s : scores)
        if (!std::isfinite(s)) throw std::invalid_argument("rank_items: non-finite score");
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](int a, int b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        return a < b;
    });
    return order;
}

std::size_t rank_of(const std::vector<double>& scores, int label) {
    const double s = scores[static_cast<std::size_t>(label)];
    std::size_t rank = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > s || (scores[i] == s && static_cast<int>(i) < label)) ++rank;
    }
    return rank;
}

namespace {

std::vector<double> occurrence_counts(const SessionSet& train) {
    std::vector<double> counts(train.num_items(), 0.0);
    for (const auto& s : train.sessions)
        for (int item : s.items) counts[static_cast<std::size_t>(item)] += 1.0;
    return counts;
}

}  // namespace

Ranker pop_baseline(const SessionSet& train) {
    auto counts = occurrence_counts(train);
    return [counts](const std::vector<int>&) { return counts; };
}

Ranker spop_baseline(const SessionSet& train) {
    auto counts = occurrence_counts(train);
    double max_count = 1.0;
    for (double c : counts) max_count = std::max(max_count, c);
    // Global-POP completion scores stay below 1; any in-prefix item scores
    // at least 1e6, so prefix items always rank first.
    std::vector<double> fill(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) fill[i] = counts[i] / (max_count + 1.0);
    return [fill](const std::vector<int>& prefix) {
        std::vector<double> scores = fill;
        std::unordered_map<int, std::pair<double, double>> in_prefix;  // count, last pos
        for (std::size_t t = 0; t < prefix.size(); ++t) {
            auto& e = in_prefix[prefix[t]];
            e.first += 1.0;
            e.second = static_cast<double>(t + 1);
        }
        for (const auto& [item, e] : in_prefix)
            scores[static_cast<std::size_t>(item)] = 1e6 * e.first + e.second;
        return scores;
    };
}

Ranker itemknn_baseline(const SessionSet& train, bool raw_counts) {
    const std::size_t n = train.num_items();
    // Session-level co-occurrence over unique items.
    std::vector<double> cooc(n * n, 0.0);
    std::vector<double> item_sessions(n, 0.0);
    for (const auto& s : train.sessions) {
        std::vector<int> uniq = s.items;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (int i : uniq) item_sessions[static_cast<std::size_t>(i)] += 1.0;
        for (std::size_t a = 0; a < uniq.size(); ++a)
            for (std::size_t b = a + 1; b < uniq.size(); ++b) {
                cooc[static_cast<std::size_t>(uniq[a]) * n + static_cast<std::size_t>(uniq[b])] += 1.0;
                cooc[static_cast<std::size_t>(uniq[b]) * n + static_cast<std::size_t>(uniq[a])] += 1.0;
            }
    }
    std::vector<double> sim = cooc;
    if (!raw_counts) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double denom = std::sqrt(item_sessions[i] * item_sessions[j]);
                if (denom > 0) sim[i * n + j] /= denom;
            }
    }
    auto pop = occurrence_counts(train);
    return [sim, pop, n](const std::vector<int>& prefix) {
        const int last = prefix.back();
        const auto row = static_cast<std::size_t>(last);
        if (last < 0 || row >= n) return pop;  // unseen item: POP fallback
        std::vector<double> scores(sim.begin() + static_cast<long>(row * n),
                                   sim.begin() + static_cast<long>((row + 1) * n));
        return scores;
    };
}

EvalReport evaluate_ranker(const Ranker& ranker, const std::vector<TrainingExample>& examples,
                           std::size_t num_items, std::size_t k, const std::string& name,
                           bool keep_ranks) {
    EvalReport report;
    report.model = name;
    report.topk = k;
    report.count = examples.size();
    (void)num_items;
    double recall_hits = 0.0, mrr_total = 0.0;
    for (const auto& ex : examples) {
        const auto scores = ranker(ex.prefix);
        const std::size_t r = rank_of(scores, ex.label);
        if (keep_ranks) report.ranks.push_back(r);
        if (r <= k) {
            recall_hits += 1.0;
            mrr_total += 1.0 / static_cast<double>(r);
        }
    }
    if (!examples.empty()) {
        report.recall = recall_hits / static_cast<double>(examples.size());
        report.mrr = mrr_total / static_cast<double>(examples.size());
    }
    return report;
}

EvalReport evaluate_model(const ModelParams& params, const AttributeTable& attrs,
                          const std::vector<TrainingExample>& examples, std::size_t k,
                          const GraphOptions& graph_opts, bool keep_ranks) {
    EvalReport report;
    report.model = "murzim";
    report.topk = k;
    report.count = examples.size();
    if (examples.empty()) return report;

    double recall_hits = 0.0, mrr_total = 0.0;
    for (const auto& ex : examples) {
        auto channels = build_channels(ex.prefix, attrs, graph_opts);
        GraphBatch batch = batch_graphs({std::move(channels)}, {ex.label});
        ForwardOutput out = forward(params, attrs, batch);
        const std::size_t r = rank_of(out.scores[0], ex.label);
        if (keep_ranks) report.ranks.push_back(r);
        if (r <= k) {
            recall_hits += 1.0;
            mrr_total += 1.0 / static_cast<double>(r);
        }
    }
    report.recall = recall_hits / static_cast<double>(examples.size());
    report.mrr = mrr_total / static_cast<double>(examples.size());
    return report;
}

}  // namespace murzim
