#include "murzim/data.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <sstream>

namespace murzim {

int SessionSet::lookup(const std::string& item_id) const {
    auto it = index.find(item_id);
    return it == index.end() ? -1 : it->second;
}

const AttributeTable::Attribute& AttributeTable::attr(std::size_t j) const {
    if (j >= attrs.size())
        throw std::invalid_argument("attribute index " + std::to_string(j) + " out of range");
    return attrs[j];
}

std::optional<std::size_t> AttributeTable::find(const std::string& name) const {
    for (std::size_t j = 0; j < attrs.size(); ++j)
        if (attrs[j].name == name) return j;
    return std::nullopt;
}

namespace {

std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::size_t find_col(const std::vector<std::string>& header, const std::string& name,
                     const char* what) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw DataError(std::string(what) + " column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

double parse_time(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line_no) + ": unparseable timestamp '" + s + "'");
    return v;
}

int intern_item(SessionSet& set, const std::string& id) {
    auto [it, inserted] = set.index.try_emplace(id, static_cast<int>(set.vocab.size()));
    if (inserted) set.vocab.push_back(id);
    return it->second;
}

}  // namespace

SessionSet parse_sessions(std::istream& in, const FormatConfig& fmt) {
    std::string line;
    if (!std::getline(in, line)) return {};
    auto header = split_row(line, fmt.delimiter);
    const std::size_t sid_col = find_col(header, fmt.session_col, "session");
    const std::size_t item_col = find_col(header, fmt.item_col, "item");
    const std::size_t time_col = find_col(header, fmt.time_col, "timestamp");

    struct RawSession {
        std::vector<std::pair<double, std::string>> events;  // (time, item id)
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, RawSession> raw;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split_row(line, fmt.delimiter);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " columns, got " +
                            std::to_string(cells.size()));
        const std::string& sid = cells[sid_col];
        auto [it, inserted] = raw.try_emplace(sid);
        if (inserted) order.push_back(sid);
        it->second.events.emplace_back(parse_time(cells[time_col], line_no), cells[item_col]);
    }

    SessionSet set;
    for (const std::string& sid : order) {
        auto& ev = raw[sid].events;
        std::stable_sort(ev.begin(), ev.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Session s;
        s.id = sid;
        for (auto& [t, item] : ev) {
            s.items.push_back(intern_item(set, item));
            s.times.push_back(t);
        }
        set.sessions.push_back(std::move(s));
    }
    return set;
}

AttributeTable parse_attributes(std::istream& in, const SessionSet& sessions,
                                const FormatConfig& fmt, std::size_t* skipped_rows) {
    std::size_t skipped = 0;
    AttributeTable table;
    std::string line;
    if (std::getline(in, line)) {
        auto header = split_row(line, fmt.delimiter);
        const std::size_t item_col = find_col(header, fmt.attr_item_col, "item");
        const std::size_t name_col = find_col(header, fmt.attr_name_col, "attribute");
        const std::size_t value_col = find_col(header, fmt.attr_value_col, "value");

        std::unordered_map<std::string, std::size_t> attr_index;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            auto cells = split_row(line, fmt.delimiter);
            if (cells.size() != header.size())
                throw DataError("line " + std::to_string(line_no) + ": expected " +
                                std::to_string(header.size()) + " columns, got " +
                                std::to_string(cells.size()));
            int item = sessions.lookup(cells[item_col]);
            if (item < 0) {
                ++skipped;
                continue;
            }
            auto [ai, new_attr] = attr_index.try_emplace(cells[name_col], table.attrs.size());
            if (new_attr) {
                table.attrs.emplace_back();
                table.attrs.back().name = cells[name_col];
            }
            auto& attr = table.attrs[ai->second];
            auto [vi, new_val] =
                attr.value_index.try_emplace(cells[value_col], static_cast<int>(attr.values.size()));
            if (new_val) attr.values.push_back(cells[value_col]);
            if (attr.item_values.size() < sessions.num_items())
                attr.item_values.resize(sessions.num_items());
            auto& vals = attr.item_values[static_cast<std::size_t>(item)];
            if (std::find(vals.begin(), vals.end(), vi->second) == vals.end())
                vals.push_back(vi->second);
        }
    }
    for (auto& attr : table.attrs) {
        attr.item_values.resize(sessions.num_items());
        for (auto& vals : attr.item_values) std::sort(vals.begin(), vals.end());
    }
    if (skipped_rows) *skipped_rows = skipped;
    return table;
}

namespace {

SessionSet reindex(std::vector<Session> sessions, const std::vector<std::string>& old_vocab) {
    SessionSet out;
    for (auto& s : sessions) {
        for (int& item : s.items)
            item = intern_item(out, old_vocab[static_cast<std::size_t>(item)]);
        out.sessions.push_back(std::move(s));
    }
    return out;
}

}  // namespace

SessionSet preprocess(const SessionSet& in, std::size_t min_item_occurrences,
                      std::size_t min_session_length, int passes) {
    if (min_item_occurrences < 1 || min_session_length < 1)
        throw std::invalid_argument("preprocess: thresholds must be >= 1");
    std::vector<Session> sessions = in.sessions;
    std::vector<std::string> vocab = in.vocab;

    int pass = 0;
    while (passes < 0 || pass < passes) {
        ++pass;
        std::vector<std::size_t> counts(vocab.size(), 0);
        for (const auto& s : sessions)
            for (int item : s.items) ++counts[static_cast<std::size_t>(item)];

        bool changed = false;
        std::vector<Session> next;
        for (const auto& s : sessions) {
            Session filtered;
            filtered.id = s.id;
            for (std::size_t i = 0; i < s.items.size(); ++i) {
                if (counts[static_cast<std::size_t>(s.items[i])] >= min_item_occurrences) {
                    filtered.items.push_back(s.items[i]);
                    filtered.times.push_back(s.times[i]);
                } else {
                    changed = true;
                }
            }
            if (filtered.items.size() >= min_session_length)
                next.push_back(std::move(filtered));
            else if (!filtered.items.empty() || !s.items.empty())
                changed = true;
        }
        sessions = std::move(next);
        if (!changed) break;
    }
    return reindex(std::move(sessions), vocab);
}

TimeSplit split_by_time(const SessionSet& in, double holdout_duration) {
    TimeSplit out;
    if (in.sessions.empty()) return out;

    double max_end = in.sessions[0].times.back();
    for (const auto& s : in.sessions) max_end = std::max(max_end, s.times.back());
    const double cutoff = max_end - holdout_duration;

    std::vector<Session> train_raw, test_raw;
    for (const auto& s : in.sessions) {
        if (holdout_duration > 0 && s.times.back() > cutoff)
            test_raw.push_back(s);
        else
            train_raw.push_back(s);
    }

    out.train = reindex(std::move(train_raw), in.vocab);

    // Test keeps the train vocabulary; unseen items are removed.
    for (const auto& s : test_raw) {
        Session mapped;
        mapped.id = s.id;
        for (std::size_t i = 0; i < s.items.size(); ++i) {
            int idx = out.train.lookup(in.vocab[static_cast<std::size_t>(s.items[i])]);
            if (idx >= 0) {
                mapped.items.push_back(idx);
                mapped.times.push_back(s.times[i]);
            } else {
                ++out.trimmed_test_items;
            }
        }
        if (mapped.items.size() >= 2)
            out.test.sessions.push_back(std::move(mapped));
        else
            ++out.dropped_test_sessions;
    }
    out.test.vocab = out.train.vocab;
    out.test.index = out.train.index;
    return out;
}

std::vector<TrainingExample> augment_prefixes(const SessionSet& in) {
    std::vector<TrainingExample> out;
    for (const auto& s : in.sessions) {
        for (std::size_t t = 1; t < s.items.size(); ++t) {
            TrainingExample ex;
            ex.prefix.assign(s.items.begin(), s.items.begin() + static_cast<long>(t));
            ex.label = s.items[t];
            out.push_back(std::move(ex));
        }
    }
    return out;
}

AttributeTable select_attributes(const AttributeTable& table,
                                 const std::vector<std::string>& names) {
    AttributeTable out;
    for (const auto& name : names) {
        auto j = table.find(name);
        if (!j) throw DataError("unknown attribute '" + name + "'");
        out.attrs.push_back(table.attrs[*j]);
    }
    return out;
}

}  // namespace murzim
