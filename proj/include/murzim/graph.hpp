#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "murzim/data.hpp"

namespace murzim {

struct GraphOptions {
    bool binary_edges = false;   // collapse repeated edges to weight 1 before normalizing
    bool bridge_empty = true;    // connect across positions with empty attribute-value sets
};

// Directed graph of one sequence channel (items or one attribute), with
// row-normalized incoming/outgoing adjacency. Node order is first appearance.
struct SessionGraph {
    std::vector<int> nodes;                 // item indices or attribute-value indices
    std::vector<std::vector<int>> alias;    // per sequence position, node slot(s)
    std::vector<double> m_in, m_out;        // n x n, row-major
    std::vector<int> last_slots;            // slot(s) of the final element

    std::size_t n() const { return nodes.size(); }
    double in(std::size_t r, std::size_t c) const { return m_in[r * n() + c]; }
    double out(std::size_t r, std::size_t c) const { return m_out[r * n() + c]; }
};

SessionGraph build_item_graph(const std::vector<int>& prefix, const GraphOptions& opts = {});

SessionGraph build_attribute_graph(const std::vector<int>& prefix,
                                   const AttributeTable::Attribute& attr,
                                   const GraphOptions& opts = {});

// A batch of examples, each with 1+K channel graphs (channel 0 = items).
// Channels are padded to the per-channel max node count; pad slots are masked
// and their adjacency rows are all-zero.
struct GraphBatch {
    struct Channel {
        std::size_t n_max = 0;
        std::vector<SessionGraph> graphs;          // one per example
        std::vector<std::vector<int>> padded_nodes;   // pad slots hold -1
        std::vector<std::vector<std::uint8_t>> mask;  // 1 = real slot
    };
    std::vector<Channel> channels;   // size 1+K
    std::vector<int> labels;         // one per example

    std::size_t batch_size() const { return labels.size(); }
};

GraphBatch batch_graphs(std::vector<std::vector<SessionGraph>> per_example_channels,
                        std::vector<int> labels);

// Builds the 1+K channel graphs for one prefix.
std::vector<SessionGraph> build_channels(const std::vector<int>& prefix,
                                         const AttributeTable& attrs,
                                         const GraphOptions& opts = {});

// n_max x n_max zero-padded copies of one example's (M_in, M_out).
std::pair<std::vector<double>, std::vector<double>> padded_adjacency(
    const GraphBatch::Channel& channel, std::size_t example);

// Adjacency-list text (node out-neighbor weight), one edge per line.
std::string export_adjacency(const SessionGraph& g);

}  // namespace murzim
