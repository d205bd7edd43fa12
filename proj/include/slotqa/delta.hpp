#pragma once

#include <set>
#include <string>
#include <vector>

#include "slotqa/types.hpp"

namespace slotqa {

enum class DeltaOp { insert, update, remove };

inline std::string to_string(DeltaOp op) {
    switch (op) {
        case DeltaOp::insert: return "INSERT";
        case DeltaOp::update: return "UPDATE";
        case DeltaOp::remove: return "DELETE";
    }
    return "?";
}

struct DeltaEntry {
    SlotKey key;
    DeltaOp op = DeltaOp::insert;
    std::string value;  // normalized; "none" for DELETE

    /// "domain-slot⊕OP" — the operation is part of the key so that inserts
    /// and updates of the same value stay distinct.
    std::string qualified_key() const { return key.render() + "⊕" + to_string(op); }

    auto operator<=>(const DeltaEntry&) const = default;
};

/// Operation-qualified state change between consecutive turns. At most one
/// entry per slot key; entries are kept sorted.
struct StateDelta {
    std::vector<DeltaEntry> entries;

    bool empty() const { return entries.empty(); }
    size_t size() const { return entries.size(); }
    bool operator==(const StateDelta&) const = default;
};

/// New key -> INSERT with the current value; changed value -> UPDATE;
/// removed key -> DELETE carrying "none". Values compare and are stored
/// under the global normalization rule; unchanged slots are excluded.
inline StateDelta compute_delta(const DialogueState& prev, const DialogueState& cur) {
    StateDelta delta;
    for (const auto& [key, raw] : cur) {
        std::string value = normalize_value(raw);
        auto it = prev.find(key);
        if (it == prev.end()) {
            delta.entries.push_back({key, DeltaOp::insert, std::move(value)});
        } else if (normalize_value(it->second) != value) {
            delta.entries.push_back({key, DeltaOp::update, std::move(value)});
        }
    }
    for (const auto& [key, raw] : prev) {
        if (!cur.count(key)) delta.entries.push_back({key, DeltaOp::remove, "none"});
    }
    std::sort(delta.entries.begin(), delta.entries.end());
    return delta;
}

inline std::set<std::string> op_qualified_keys(const StateDelta& delta) {
    std::set<std::string> keys;
    for (const auto& e : delta.entries) keys.insert(e.qualified_key());
    return keys;
}

inline std::set<std::pair<std::string, std::string>> op_qualified_pairs(const StateDelta& delta) {
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& e : delta.entries) pairs.emplace(e.qualified_key(), e.value);
    return pairs;
}

/// Replay a delta on top of a previous state. Reconstructs the normalized
/// view of the next state: apply_delta(normalized(prev), compute_delta(prev, cur))
/// == normalized(cur) for every consecutive turn pair.
inline DialogueState apply_delta(const DialogueState& prev, const StateDelta& delta) {
    DialogueState next = prev;
    for (const auto& e : delta.entries) {
        if (e.op == DeltaOp::remove)
            next.erase(e.key);
        else
            next[e.key] = e.value;
    }
    return next;
}

}  // namespace slotqa
