#include "murzim/graph.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace murzim {

namespace {

// Row-normalizes the raw out-counts into M_out and the reversed counts into M_in.
void normalize(SessionGraph& g, std::vector<double> counts, bool binary) {
    const std::size_t n = g.n();
    if (binary)
        for (double& c : counts) c = c > 0 ? 1.0 : 0.0;

    g.m_out.assign(n * n, 0.0);
    g.m_in.assign(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) row_sum += counts[r * n + c];
        if (row_sum > 0)
            for (std::size_t c = 0; c < n; ++c) g.m_out[r * n + c] = counts[r * n + c] / row_sum;
    }
    for (std::size_t r = 0; r < n; ++r) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) row_sum += counts[c * n + r];
        if (row_sum > 0)
            for (std::size_t c = 0; c < n; ++c) g.m_in[r * n + c] = counts[c * n + r] / row_sum;
    }
}

int slot_of(SessionGraph& g, std::unordered_map<int, int>& slots, int node) {
    auto [it, inserted] = slots.try_emplace(node, static_cast<int>(g.nodes.size()));
    if (inserted) g.nodes.push_back(node);
    return it->second;
}

}  // namespace

SessionGraph build_item_graph(const std::vector<int>& prefix, const GraphOptions& opts) {
    if (prefix.empty()) throw std::invalid_argument("build_item_graph: empty prefix");
    SessionGraph g;
    std::unordered_map<int, int> slots;
    for (int item : prefix) g.alias.push_back({slot_of(g, slots, item)});

    const std::size_t n = g.n();
    std::vector<double> counts(n * n, 0.0);
    for (std::size_t t = 0; t + 1 < prefix.size(); ++t) {
        const auto u = static_cast<std::size_t>(g.alias[t][0]);
        const auto v = static_cast<std::size_t>(g.alias[t + 1][0]);
        counts[u * n + v] += 1.0;
    }
    normalize(g, std::move(counts), opts.binary_edges);
    g.last_slots = g.alias.back();
    return g;
}

SessionGraph build_attribute_graph(const std::vector<int>& prefix,
                                   const AttributeTable::Attribute& attr,
                                   const GraphOptions& opts) {
    if (prefix.empty()) throw std::invalid_argument("build_attribute_graph: empty prefix");
    SessionGraph g;
    std::unordered_map<int, int> slots;
    g.alias.resize(prefix.size());
    for (std::size_t t = 0; t < prefix.size(); ++t)
        for (int v : attr.item_values[static_cast<std::size_t>(prefix[t])])
            g.alias[t].push_back(slot_of(g, slots, v));

    const std::size_t n = g.n();
    if (n == 0) return g;  // no values anywhere; caller substitutes a zero embedding

    // Positions with empty value sets are skipped; with bridging enabled the
    // surrounding nonempty positions connect directly.
    std::vector<std::size_t> nonempty;
    for (std::size_t t = 0; t < prefix.size(); ++t)
        if (!g.alias[t].empty()) nonempty.push_back(t);

    std::vector<double> counts(n * n, 0.0);
    for (std::size_t i = 0; i + 1 < nonempty.size(); ++i) {
        if (!opts.bridge_empty && nonempty[i + 1] != nonempty[i] + 1) continue;
        for (int u : g.alias[nonempty[i]])
            for (int v : g.alias[nonempty[i + 1]])
                counts[static_cast<std::size_t>(u) * n + static_cast<std::size_t>(v)] += 1.0;
    }
    normalize(g, std::move(counts), opts.binary_edges);
    g.last_slots = g.alias[nonempty.back()];
    return g;
}

std::vector<SessionGraph> build_channels(const std::vector<int>& prefix,
                                         const AttributeTable& attrs,
                                         const GraphOptions& opts) {
    std::vector<SessionGraph> channels;
    channels.push_back(build_item_graph(prefix, opts));
    for (const auto& attr : attrs.attrs)
        channels.push_back(build_attribute_graph(prefix, attr, opts));
    return channels;
}

GraphBatch batch_graphs(std::vector<std::vector<SessionGraph>> per_example_channels,
                        std::vector<int> labels) {
    if (per_example_channels.size() != labels.size())
        throw std::invalid_argument("batch_graphs: examples and labels differ in count");
    GraphBatch batch;
    batch.labels = std::move(labels);
    if (per_example_channels.empty()) return batch;

    const std::size_t num_channels = per_example_channels[0].size();
    for (const auto& ex : per_example_channels)
        if (ex.size() != num_channels)
            throw std::invalid_argument("batch_graphs: inconsistent channel layout");

    batch.channels.resize(num_channels);
    for (std::size_t c = 0; c < num_channels; ++c) {
        auto& ch = batch.channels[c];
        for (auto& ex : per_example_channels) ch.graphs.push_back(std::move(ex[c]));
        for (const auto& g : ch.graphs) ch.n_max = std::max(ch.n_max, g.n());
        for (const auto& g : ch.graphs) {
            std::vector<int> nodes(ch.n_max, -1);
            std::vector<std::uint8_t> mask(ch.n_max, 0);
            for (std::size_t i = 0; i < g.n(); ++i) {
                nodes[i] = g.nodes[i];
                mask[i] = 1;
            }
            ch.padded_nodes.push_back(std::move(nodes));
            ch.mask.push_back(std::move(mask));
        }
    }
    return batch;
}

std::pair<std::vector<double>, std::vector<double>> padded_adjacency(
    const GraphBatch::Channel& channel, std::size_t example) {
    const auto& g = channel.graphs.at(example);
    const std::size_t n = g.n(), m = channel.n_max;
    std::vector<double> in(m * m, 0.0), out(m * m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            in[r * m + c] = g.m_in[r * n + c];
            out[r * m + c] = g.m_out[r * n + c];
        }
    return {std::move(in), std::move(out)};
}

std::string export_adjacency(const SessionGraph& g) {
    std::ostringstream os;
    const std::size_t n = g.n();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (g.m_out[r * n + c] != 0.0)
                os << g.nodes[r] << " " << g.nodes[c] << " " << g.m_out[r * n + c] << "\n";
    return os.str();
}

}  // namespace murzim
