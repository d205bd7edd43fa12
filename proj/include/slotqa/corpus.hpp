#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "slotqa/jsonl.hpp"
#include "slotqa/types.hpp"

namespace slotqa {

using SchemaMap = std::map<std::string, std::vector<SlotSchema>>;

/// Load a schema file: a JSON array of {domain, slot, kind, options, question},
/// grouped by domain. Enforces the SlotSchema invariants.
inline SchemaMap load_schema(const std::filesystem::path& path) {
    json root = read_json_file(path);
    if (!root.is_array()) throw ParseError(path.string() + ": schema file must be a JSON array");
    SchemaMap schemas;
    std::set<SlotKey> seen;
    for (size_t i = 0; i < root.size(); ++i) {
        const json& rec = root[i];
        std::string where = path.string() + " entry " + std::to_string(i);
        SlotSchema s;
        s.key.domain = require_string(rec, "domain", where);
        s.key.slot = require_string(rec, "slot", where);
        if (!is_identifier(s.key.domain) || !is_identifier(s.key.slot))
            throw SchemaError(where + ": domain and slot must be identifiers ([A-Za-z0-9_]+)");
        if (!seen.insert(s.key).second)
            throw SchemaError(where + ": duplicate slot key " + s.key.render());
        s.kind = slot_kind_from_string(require_string(rec, "kind", where));
        s.question = require_string(rec, "question", where);
        if (trim(s.question).empty()) throw SchemaError(where + ": question must be non-empty");
        if (rec.contains("options")) {
            for (const auto& opt : rec.at("options")) s.options.push_back(opt.get<std::string>());
        }
        if (s.kind == SlotKind::categorical) {
            std::set<std::string> distinct(s.options.begin(), s.options.end());
            if (distinct.size() < 2)
                throw SchemaError(where + ": categorical slot needs >= 2 distinct options");
        } else if (!s.options.empty()) {
            throw SchemaError(where + ": extractive slot must not list options");
        }
        schemas[s.key.domain].push_back(std::move(s));
    }
    return schemas;
}

/// Returns the slot's question template verbatim; one question per slot.
inline const std::string& question_for_slot(const SlotSchema& schema) { return schema.question; }

inline const SlotSchema* find_slot(const std::vector<SlotSchema>& schema, const SlotKey& key) {
    for (const auto& s : schema)
        if (s.key == key) return &s;
    return nullptr;
}

namespace detail {

inline DialogueState parse_state(const json& obj, const std::vector<SlotSchema>& schema,
                                 const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": state must be an object");
    DialogueState state;
    for (const auto& [rendered, value] : obj.items()) {
        SlotKey key = SlotKey::parse(rendered);
        if (find_slot(schema, key) == nullptr)
            throw SchemaError(where + ": state references slot '" + rendered +
                              "' absent from schema");
        if (!value.is_string()) throw ParseError(where + ": value of '" + rendered + "' must be a string");
        std::string v = value.get<std::string>();
        if (normalize_value(v).empty())
            throw DataError(where + ": empty value for slot '" + rendered +
                            "' (absence encodes none)");
        state.emplace(std::move(key), std::move(v));
    }
    return state;
}

/// Parse one dialogue line into a Dialogue plus its target split name.
/// Enforces alternation, the 2t-1 history length, non-empty utterances and
/// per-user-turn states. An optional "turn_filter" restricts which turns
/// become TurnRecords (used by sampled-corpus files); context turns still
/// need states so prev_state stays exact.
inline std::pair<Dialogue, std::string> parse_dialogue(const json& rec,
                                                       const SchemaMap& schemas,
                                                       const std::string& where) {
    Dialogue dialogue;
    dialogue.dialogue_id = require_string(rec, "dialogue_id", where);
    dialogue.domain = require_string(rec, "domain", where);
    if (!is_identifier(dialogue.domain))
        throw ParseError(where + ": domain must be an identifier");
    auto schema_it = schemas.find(dialogue.domain);
    if (schema_it == schemas.end())
        throw SchemaError(where + ": no schema entries for domain '" + dialogue.domain + "'");
    const auto& schema = schema_it->second;

    std::string split = "train";
    if (rec.contains("split")) {
        split = rec.at("split").get<std::string>();
        if (split != "train" && split != "dev" && split != "test")
            throw ParseError(where + ": unknown split '" + split + "'");
    }

    const json& turns = require_field(rec, "turns", where);
    if (!turns.is_array() || turns.empty())
        throw ParseError(where + ": 'turns' must be a non-empty array");

    std::optional<std::set<int>> filter;
    if (rec.contains("turn_filter")) {
        filter.emplace();
        for (const auto& t : rec.at("turn_filter")) filter->insert(t.get<int>());
    }

    std::vector<Utterance> history;
    std::vector<DialogueState> states;  // state after user turn t, 1-based
    for (size_t i = 0; i < turns.size(); ++i) {
        const json& t = turns[i];
        std::string uwhere = where + " utterance " + std::to_string(i + 1);
        std::string speaker = require_string(t, "speaker", uwhere);
        bool expect_user = (i % 2 == 0);
        if (speaker != (expect_user ? "user" : "system"))
            throw DataError(uwhere + ": alternation violation, expected " +
                            std::string(expect_user ? "user" : "system"));
        Utterance utt;
        utt.speaker = expect_user ? Speaker::user : Speaker::system;
        utt.text = require_string(t, "text", uwhere);
        if (trim(utt.text).empty()) throw DataError(uwhere + ": utterance text is empty");
        history.push_back(std::move(utt));
        if (expect_user) {
            states.push_back(parse_state(require_field(t, "state", uwhere), schema, uwhere));
        } else if (t.contains("state")) {
            throw DataError(uwhere + ": system utterances carry no state");
        }
    }
    if (history.size() % 2 == 0)
        throw DataError(where + ": alternation violation, dialogue must end with a user utterance");

    int n_turns = static_cast<int>(states.size());
    if (filter) {
        for (int t : *filter)
            if (t < 1 || t > n_turns)
                throw DataError(where + ": turn_filter index " + std::to_string(t) +
                                " out of range");
    }
    for (int t = 1; t <= n_turns; ++t) {
        if (filter && !filter->count(t)) continue;
        TurnRecord record;
        record.dialogue_id = dialogue.dialogue_id;
        record.turn_index = t;
        record.domain = dialogue.domain;
        record.history.assign(history.begin(), history.begin() + (2 * t - 1));
        record.state = states[t - 1];
        record.prev_state = t > 1 ? states[t - 2] : DialogueState{};
        dialogue.turns.push_back(std::move(record));
    }
    return {std::move(dialogue), std::move(split)};
}

}  // namespace detail

/// Ingest a corpus file (one dialogue object per line) against a schema
/// file. All dialogues must share one domain; ids must be unique per split;
/// ordering is preserved from the file.
inline Corpus load_corpus(const std::filesystem::path& path,
                          const std::filesystem::path& schema_path) {
    SchemaMap schemas = load_schema(schema_path);
    Corpus corpus;
    std::map<std::string, std::set<std::string>> ids_per_split;
    read_jsonl(path, [&](size_t line_no, const json& rec) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        auto [dialogue, split] = detail::parse_dialogue(rec, schemas, where);
        if (corpus.domain.empty()) {
            corpus.domain = dialogue.domain;
            corpus.schema = schemas.at(dialogue.domain);
        } else if (dialogue.domain != corpus.domain) {
            throw DataError(where + ": corpus mixes domains '" + corpus.domain + "' and '" +
                            dialogue.domain + "'");
        }
        if (!ids_per_split[split].insert(dialogue.dialogue_id).second)
            throw DataError(where + ": duplicate dialogue id '" + dialogue.dialogue_id +
                            "' in split " + split);
        corpus.split(split).push_back(std::move(dialogue));
    });
    if (corpus.domain.empty()) throw DataError(path.string() + ": corpus file has no dialogues");
    return corpus;
}

namespace detail {

inline json dialogue_to_json(const Dialogue& dialogue, const std::string& split,
                             const std::vector<int>* turn_filter) {
    json turns = json::array();
    size_t next_turn = 0;
    for (size_t i = 0; i < dialogue.turns.back().history.size(); ++i) {
        const Utterance& utt = dialogue.turns.back().history[i];
        json t;
        t["speaker"] = utt.speaker == Speaker::user ? "user" : "system";
        t["text"] = utt.text;
        if (utt.speaker == Speaker::user) {
            json state = json::object();
            for (const auto& [key, value] : dialogue.turns[next_turn].state)
                state[key.render()] = value;
            t["state"] = state;
            ++next_turn;
        }
        turns.push_back(std::move(t));
    }
    json rec;
    rec["dialogue_id"] = dialogue.dialogue_id;
    rec["domain"] = dialogue.domain;
    rec["split"] = split;
    rec["turns"] = std::move(turns);
    if (turn_filter) rec["turn_filter"] = *turn_filter;
    return rec;
}

}  // namespace detail

/// Write a corpus back to the line-delimited format (all splits).
inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    auto out = open_output(path);
    for (const char* split : {"train", "dev", "test"})
        for (const Dialogue& d : corpus.split(split))
            out << detail::dialogue_to_json(d, split, nullptr).dump() << '\n';
}

/// Write sampled turns as a corpus-format file. Each touched dialogue is
/// emitted as its prefix up to the last sampled turn, with a turn_filter
/// naming the sampled turn indices; loading the file yields exactly the
/// sampled TurnRecords. Dialogues come from `source` (the split that was
/// sampled) and are emitted in dialogue-id order.
inline void write_sampled_corpus(const std::vector<Dialogue>& source,
                                 const std::vector<TurnRecord>& sampled,
                                 const std::string& split, const std::filesystem::path& path) {
    std::map<std::string, std::vector<int>> picked;
    for (const auto& turn : sampled) picked[turn.dialogue_id].push_back(turn.turn_index);
    auto out = open_output(path);
    for (auto& [dialogue_id, turn_indices] : picked) {
        auto it = std::find_if(source.begin(), source.end(),
                               [&](const Dialogue& d) { return d.dialogue_id == dialogue_id; });
        if (it == source.end())
            throw DataError("sampled turn references unknown dialogue '" + dialogue_id + "'");
        std::sort(turn_indices.begin(), turn_indices.end());
        int last = turn_indices.back();
        Dialogue prefix;
        prefix.dialogue_id = it->dialogue_id;
        prefix.domain = it->domain;
        prefix.turns.assign(it->turns.begin(), it->turns.begin() + last);
        out << detail::dialogue_to_json(prefix, split, &turn_indices).dump() << '\n';
    }
}

}  // namespace slotqa
