#pragma once

#include <functional>
#include <string>
#include <vector>

#include "murzim/model.hpp"

namespace murzim {

struct EvalReport {
    std::string model;
    double recall = 0.0;
    double mrr = 0.0;
    std::size_t count = 0;
    std::size_t topk = 20;
    std::vector<std::size_t> ranks;  // 1-based rank of the label, when retained
};

double recall_at_k(const std::vector<std::vector<int>>& ranked_lists,
                   const std::vector<int>& labels, std::size_t k);
double mrr_at_k(const std::vector<std::vector<int>>& ranked_lists,
                const std::vector<int>& labels, std::size_t k);

// Full descending-score order; ties broken by ascending item index.
std::vector<int> rank_items(const std::vector<double>& scores);

// 1-based rank of `label` under the rank_items order, without sorting.
std::size_t rank_of(const std::vector<double>& scores, int label);

// A baseline maps a prefix to a score per item.
using Ranker = std::function<std::vector<double>(const std::vector<int>& prefix)>;

Ranker pop_baseline(const SessionSet& train);
Ranker spop_baseline(const SessionSet& train);
// raw_counts skips the sqrt(count_i * count_j) normalization.
Ranker itemknn_baseline(const SessionSet& train, bool raw_counts = false);

EvalReport evaluate_ranker(const Ranker& ranker, const std::vector<TrainingExample>& examples,
                           std::size_t num_items, std::size_t k, const std::string& name,
                           bool keep_ranks = false);

EvalReport evaluate_model(const ModelParams& params, const AttributeTable& attrs,
                          const std::vector<TrainingExample>& examples, std::size_t k,
                          const GraphOptions& graph_opts = {}, bool keep_ranks = false);

}  // namespace murzim
