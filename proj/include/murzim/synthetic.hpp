#pragma once

#include <string>
#include <vector>

#include "murzim/data.hpp"
#include "murzim/rng.hpp"

namespace murzim {

enum class SignalType { AttributeDriven, Markov, Random };

struct SyntheticSpec {
    std::size_t num_items = 200;
    struct Attr {
        std::string name;
        std::size_t cardinality = 10;
        bool signal = false;  // drives transitions in attribute-driven corpora
    };
    std::vector<Attr> attrs;
    std::size_t num_sessions = 1000;
    std::size_t min_length = 3;
    std::size_t max_length = 8;
    SignalType signal = SignalType::Random;
    double p = 0.9;  // probability of an attribute-consistent transition
    std::uint64_t seed = 1;
};

// Seeded corpus whose ground truth is known by construction. Attribute-driven
// corpora draw the next item from items sharing the current item's signal
// value with probability p, uniformly otherwise.
std::pair<SessionSet, AttributeTable> generate(const SyntheticSpec& spec);

// Emits the session/attribute CSV files data-ingest consumes.
void write_sessions_csv(const SessionSet& set, const std::string& path, char delimiter = ',');
void write_attributes_csv(const SessionSet& set, const AttributeTable& table,
                          const std::string& path, char delimiter = ',');

}  // namespace murzim
