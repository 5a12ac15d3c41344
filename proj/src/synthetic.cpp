#include "murzim/synthetic.hpp"

#include <fstream>

namespace murzim {

std::pair<SessionSet, AttributeTable> generate(const SyntheticSpec& spec) {
    if (spec.num_items == 0 || spec.num_sessions == 0 || spec.min_length < 1 ||
        spec.max_length < spec.min_length)
        throw std::invalid_argument("generate: invalid synthetic spec");

    Rng rng(spec.seed);
    SessionSet set;
    for (std::size_t i = 0; i < spec.num_items; ++i) {
        const std::string id = "i" + std::to_string(i);
        set.index[id] = static_cast<int>(i);
        set.vocab.push_back(id);
    }

    // Every attribute assigns each item exactly one value.
    AttributeTable table;
    std::size_t signal_attr = spec.attrs.size();
    for (std::size_t j = 0; j < spec.attrs.size(); ++j) {
        AttributeTable::Attribute attr;
        attr.name = spec.attrs[j].name;
        for (std::size_t v = 0; v < spec.attrs[j].cardinality; ++v) {
            attr.values.push_back(attr.name + "_v" + std::to_string(v));
            attr.value_index[attr.values.back()] = static_cast<int>(v);
        }
        for (std::size_t i = 0; i < spec.num_items; ++i)
            attr.item_values.push_back({static_cast<int>(rng.index(spec.attrs[j].cardinality))});
        if (spec.attrs[j].signal) signal_attr = j;
        table.attrs.push_back(std::move(attr));
    }

    // Items grouped by signal value, for attribute-driven transitions.
    std::vector<std::vector<int>> by_value;
    if (signal_attr < table.attrs.size()) {
        by_value.resize(table.attrs[signal_attr].values.size());
        for (std::size_t i = 0; i < spec.num_items; ++i)
            by_value[static_cast<std::size_t>(table.attrs[signal_attr].item_values[i][0])]
                .push_back(static_cast<int>(i));
    }

    // Markov corpora use 3 preferred successors per item.
    std::vector<std::vector<int>> successors;
    if (spec.signal == SignalType::Markov) {
        successors.resize(spec.num_items);
        for (auto& succ : successors)
            for (int k = 0; k < 3; ++k) succ.push_back(static_cast<int>(rng.index(spec.num_items)));
    }

    for (std::size_t s = 0; s < spec.num_sessions; ++s) {
        Session session;
        session.id = "s" + std::to_string(s);
        const std::size_t len =
            spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
        int current = static_cast<int>(rng.index(spec.num_items));
        for (std::size_t t = 0; t < len; ++t) {
            session.items.push_back(current);
            session.times.push_back(static_cast<double>(s * 1000 + t));
            int next = static_cast<int>(rng.index(spec.num_items));
            switch (spec.signal) {
                case SignalType::AttributeDriven: {
                    if (signal_attr >= table.attrs.size())
                        throw std::invalid_argument("generate: attribute-driven corpus needs a signal attribute");
                    if (rng.bernoulli(spec.p)) {
                        const auto& pool = by_value[static_cast<std::size_t>(
                            table.attrs[signal_attr].item_values[static_cast<std::size_t>(current)][0])];
                        next = pool[rng.index(pool.size())];
                    }
                    break;
                }
                case SignalType::Markov:
                    if (rng.bernoulli(0.85))
                        next = successors[static_cast<std::size_t>(current)][rng.index(3)];
                    break;
                case SignalType::Random:
                    break;
            }
            current = next;
        }
        set.sessions.push_back(std::move(session));
    }
    return {std::move(set), std::move(table)};
}

void write_sessions_csv(const SessionSet& set, const std::string& path, char delimiter) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << "session_id" << delimiter << "item_id" << delimiter << "timestamp\n";
    for (const auto& s : set.sessions)
        for (std::size_t t = 0; t < s.items.size(); ++t)
            out << s.id << delimiter << set.vocab[static_cast<std::size_t>(s.items[t])]
                << delimiter << s.times[t] << "\n";
}

void write_attributes_csv(const SessionSet& set, const AttributeTable& table,
                          const std::string& path, char delimiter) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << "item_id" << delimiter << "attribute" << delimiter << "value\n";
    for (const auto& attr : table.attrs)
        for (std::size_t i = 0; i < attr.item_values.size(); ++i)
            for (int v : attr.item_values[i])
                out << set.vocab[i] << delimiter << attr.name << delimiter
                    << attr.values[static_cast<std::size_t>(v)] << "\n";
}

}  // namespace murzim
