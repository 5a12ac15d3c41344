#include "murzim/attribute_score.hpp"

#include <algorithm>
#include <unordered_set>

namespace murzim {

double attribute_score(const SessionSet& sessions, const AttributeTable& table,
                       std::size_t j, bool skip_empty_sessions) {
    const auto& attr = table.attr(j);
    if (sessions.sessions.empty())
        throw std::invalid_argument("attribute_score: empty session set");

    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& s : sessions.sessions) {
        std::unordered_set<int> distinct;
        std::size_t value_count = 0;
        for (int item : s.items) {
            const auto& vals = attr.item_values[static_cast<std::size_t>(item)];
            value_count += vals.size();
            distinct.insert(vals.begin(), vals.end());
        }
        if (value_count == 0) {
            if (!skip_empty_sessions) ++counted;
            continue;
        }
        total += 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(value_count);
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

AttributeScoreReport rank_attributes(const SessionSet& sessions, const AttributeTable& table,
                                     bool skip_empty_sessions) {
    AttributeScoreReport report;
    for (std::size_t j = 0; j < table.num_attrs(); ++j)
        report.scores.emplace_back(table.attrs[j].name,
                                   attribute_score(sessions, table, j, skip_empty_sessions));
    std::sort(report.scores.begin(), report.scores.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return report;
}

}  // namespace murzim
