#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace murzim {

// Malformed input data (bad rows, unknown columns, missing files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Session {
    std::string id;
    std::vector<int> items;       // dense item indices
    std::vector<double> times;    // nondecreasing
};

struct SessionSet {
    std::vector<Session> sessions;
    std::vector<std::string> vocab;                 // index -> original item id
    std::unordered_map<std::string, int> index;     // original item id -> index

    std::size_t num_items() const { return vocab.size(); }
    int lookup(const std::string& item_id) const;
};

struct AttributeTable {
    struct Attribute {
        std::string name;
        std::vector<std::string> values;                 // value index -> value string
        std::unordered_map<std::string, int> value_index;
        std::vector<std::vector<int>> item_values;       // per item index, sorted value indices
    };
    std::vector<Attribute> attrs;

    std::size_t num_attrs() const { return attrs.size(); }
    const Attribute& attr(std::size_t j) const;
    std::optional<std::size_t> find(const std::string& name) const;
};

struct TrainingExample {
    std::vector<int> prefix;
    int label = -1;
};

struct FormatConfig {
    char delimiter = ',';
    std::string session_col = "session_id";
    std::string item_col = "item_id";
    std::string time_col = "timestamp";
    std::string attr_item_col = "item_id";
    std::string attr_name_col = "attribute";
    std::string attr_value_col = "value";
};

// Rows grouped by session id, ordered by timestamp (input order breaks ties);
// vocabulary assigned in first-appearance order. Malformed rows raise
// DataError with the line number.
SessionSet parse_sessions(std::istream& in, const FormatConfig& fmt = {});

// Rows are (item_id, attribute, value); multi-valued attributes repeat rows.
// Rows naming items outside the session vocabulary are skipped and counted.
AttributeTable parse_attributes(std::istream& in, const SessionSet& sessions,
                                const FormatConfig& fmt = {},
                                std::size_t* skipped_rows = nullptr);

// Drops rare items then short sessions, repeating until a fixpoint (or for a
// fixed number of passes); rebuilds the vocabulary densely.
SessionSet preprocess(const SessionSet& in, std::size_t min_item_occurrences,
                      std::size_t min_session_length, int passes = -1);

struct TimeSplit {
    SessionSet train;
    SessionSet test;
    std::size_t trimmed_test_items = 0;   // test items unseen in train, removed
    std::size_t dropped_test_sessions = 0;
};

// Sessions whose final timestamp falls in the trailing holdout window become
// the test set. Test items absent from the train vocabulary are removed; test
// sessions shorter than 2 afterwards are dropped. Test sessions are re-indexed
// against the train vocabulary.
TimeSplit split_by_time(const SessionSet& in, double holdout_duration);

// Session [v1..vT] yields ([v1..vt], v_{t+1}) for t = 1..T-1.
std::vector<TrainingExample> augment_prefixes(const SessionSet& in);

// Restricts an attribute table to the named attributes, in the given order.
AttributeTable select_attributes(const AttributeTable& table,
                                 const std::vector<std::string>& names);

}  // namespace murzim
