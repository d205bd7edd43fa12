#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "slotqa/errors.hpp"
#include "slotqa/text.hpp"

namespace slotqa {

/// A slot of a service schema, rendered "domain-slot" in files and prompts.
/// Domain and slot are identifiers ([A-Za-z0-9_]+), so the rendering is
/// reversible.
struct SlotKey {
    std::string domain;
    std::string slot;

    std::string render() const { return domain + "-" + slot; }

    static SlotKey parse(std::string_view rendered) {
        auto dash = rendered.find('-');
        if (dash == std::string_view::npos || rendered.find('-', dash + 1) != std::string_view::npos)
            throw DataError("slot key must be 'domain-slot': " + std::string(rendered));
        SlotKey key{std::string(rendered.substr(0, dash)), std::string(rendered.substr(dash + 1))};
        if (!is_identifier(key.domain) || !is_identifier(key.slot))
            throw DataError("slot key parts must be identifiers: " + std::string(rendered));
        return key;
    }

    auto operator<=>(const SlotKey&) const = default;
};

enum class SlotKind { categorical, extractive };

inline std::string to_string(SlotKind kind) {
    return kind == SlotKind::categorical ? "categorical" : "extractive";
}

inline SlotKind slot_kind_from_string(std::string_view s) {
    if (s == "categorical") return SlotKind::categorical;
    if (s == "extractive") return SlotKind::extractive;
    throw DataError("unknown slot kind: " + std::string(s));
}

struct SlotSchema {
    SlotKey key;
    SlotKind kind = SlotKind::extractive;
    std::vector<std::string> options;  // non-empty iff categorical, >= 2 distinct
    std::string question;              // natural-language template, returned verbatim

    bool operator==(const SlotSchema&) const = default;
};

enum class Speaker { user, system };

struct Utterance {
    Speaker speaker = Speaker::user;
    std::string text;

    bool operator==(const Utterance&) const = default;
};

/// Slot assignments for one turn. Absent keys encode "none"; stored values
/// are verbatim and all comparisons elsewhere normalize first.
using DialogueState = std::map<SlotKey, std::string>;

inline DialogueState normalized(const DialogueState& state) {
    DialogueState out;
    for (const auto& [key, value] : state) out.emplace(key, normalize_value(value));
    return out;
}

/// The retrievable and trainable unit: one user turn with its full history.
/// history holds 2t-1 utterances alternating user/system and ending with the
/// user; prev_state is the state at turn t-1 (empty at t=1).
struct TurnRecord {
    std::string dialogue_id;
    int turn_index = 1;
    std::string domain;
    std::vector<Utterance> history;
    DialogueState state;
    DialogueState prev_state;

    bool operator==(const TurnRecord&) const = default;
};

/// Query text for retrieval: the last system utterance followed by the last
/// user utterance (just the user utterance at turn 1). Built only from the
/// final exchange, never from dialogue state.
inline std::string query_text(const TurnRecord& turn) {
    const auto& h = turn.history;
    if (h.size() >= 2) return h[h.size() - 2].text + " " + h.back().text;
    return h.empty() ? std::string() : h.back().text;
}

struct Dialogue {
    std::string dialogue_id;
    std::string domain;
    std::vector<TurnRecord> turns;

    bool operator==(const Dialogue&) const = default;
};

/// A single-domain corpus with its schema and the three standard splits.
struct Corpus {
    std::string domain;
    std::vector<SlotSchema> schema;
    std::vector<Dialogue> train;
    std::vector<Dialogue> dev;
    std::vector<Dialogue> test;

    const std::vector<Dialogue>& split(std::string_view name) const {
        if (name == "train") return train;
        if (name == "dev") return dev;
        if (name == "test") return test;
        throw ConfigError("unknown split: " + std::string(name));
    }

    std::vector<Dialogue>& split(std::string_view name) {
        return const_cast<std::vector<Dialogue>&>(std::as_const(*this).split(name));
    }

    bool operator==(const Corpus&) const = default;
};

inline std::vector<TurnRecord> flatten(const std::vector<Dialogue>& dialogues) {
    std::vector<TurnRecord> turns;
    for (const auto& d : dialogues)
        for (const auto& t : d.turns) turns.push_back(t);
    return turns;
}

}  // namespace slotqa
