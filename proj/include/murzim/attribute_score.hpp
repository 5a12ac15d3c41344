#pragma once

#include "murzim/data.hpp"

namespace murzim {

struct AttributeScoreReport {
    // (attribute name, score), sorted by score descending, ties by name.
    std::vector<std::pair<std::string, double>> scores;
};

// Mean over sessions of 1 - |union of value sets| / (sum of value-set sizes).
// Sessions with no attribute values at all contribute 0 to the mean unless
// skip_empty_sessions is set, in which case they are left out of the average.
double attribute_score(const SessionSet& sessions, const AttributeTable& table,
                       std::size_t j, bool skip_empty_sessions = false);

AttributeScoreReport rank_attributes(const SessionSet& sessions, const AttributeTable& table,
                                     bool skip_empty_sessions = false);

}  // namespace murzim
