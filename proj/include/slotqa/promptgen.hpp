#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "slotqa/corpus.hpp"
#include "slotqa/jsonl.hpp"
#include "slotqa/retrieval.hpp"
#include "slotqa/types.hpp"

namespace slotqa {

// Pinned prompt layout (the frozen contract downstream answerers rely on):
//
//   <question>
//   [opt] <option>            once per option, categorical slots only
//   [example] <history> Answer: <answer>     once per in-context example
//   [target] <history> Answer:
//
// segments joined by single spaces into one line. Histories render each
// utterance as "user: <text>" / "system: <text>" with the text passed
// through the normalization rule (lowercase, trim, collapse); the question
// template, marker tokens, and the "Answer:" cue stay verbatim. Example
// answers embedded in the prompt are normalized; the gold_answer field is
// the verbatim stored value.

struct InstanceId {
    std::string dialogue_id;
    int turn_index = 1;
    SlotKey slot;

    auto operator<=>(const InstanceId&) const = default;

    std::string render() const {
        return dialogue_id + ":" + std::to_string(turn_index) + ":" + slot.render();
    }
};

struct QAInstance {
    InstanceId id;
    std::string prompt;
    std::string gold_answer;  // "none" when the slot is absent
    std::vector<CandidateId> example_ids;
    int k = 0;
};

struct AnswerRecord {
    InstanceId id;
    std::string answer;  // non-empty; may be the literal "none"
};

struct PromptOptions {
    bool lowercase_utterances = true;
};

inline std::string render_history(const std::vector<Utterance>& history,
                                  const PromptOptions& opts) {
    std::vector<std::string> parts;
    parts.reserve(history.size());
    for (const auto& utt : history) {
        std::string text = opts.lowercase_utterances ? normalize_value(utt.text) : trim(utt.text);
        parts.push_back((utt.speaker == Speaker::user ? "user: " : "system: ") + text);
    }
    return join(parts, " ");
}

/// The example turn's gold value for a slot, or "none".
inline std::string example_answer_for(const TurnRecord& example, const SlotKey& slot) {
    auto it = example.state.find(slot);
    return it == example.state.end() ? std::string("none") : it->second;
}

/// Serialize one slot question for one target turn, with k in-context
/// examples given as (turn, example answer) pairs.
inline QAInstance serialize_instance(
    const SlotSchema& schema, const TurnRecord& target,
    const std::vector<std::pair<const TurnRecord*, std::string>>& examples,
    const PromptOptions& opts = {}) {
    if (schema.kind == SlotKind::categorical && schema.options.empty())
        throw SchemaError("categorical slot " + schema.key.render() + " has no options");

    QAInstance instance;
    instance.id = {target.dialogue_id, target.turn_index, schema.key};
    instance.k = static_cast<int>(examples.size());

    std::vector<std::string> parts;
    parts.push_back(schema.question);
    for (const auto& opt : schema.options) parts.push_back("[opt] " + opt);
    for (const auto& [turn, answer] : examples) {
        if (answer.empty())
            throw DataError("missing example answer for " + instance.id.render());
        parts.push_back("[example] " + render_history(turn->history, opts) +
                        " Answer: " + normalize_value(answer));
        instance.example_ids.push_back(candidate_id(*turn));
    }
    parts.push_back("[target] " + render_history(target.history, opts) + " Answer:");
    instance.prompt = join(parts, " ");

    auto it = target.state.find(schema.key);
    instance.gold_answer = it == target.state.end() ? "none" : it->second;
    return instance;
}

/// Build the N_T instances of one turn: one per schema slot, all sharing the
/// same k retrieved examples (retrieval is keyed on the turn, not the slot).
/// Each example answers every slot from its own gold state.
inline std::vector<QAInstance> build_instances(const TurnRecord& target,
                                               const std::vector<SlotSchema>& schema,
                                               const Retriever& retriever, int k,
                                               const PromptOptions& opts = {}) {
    auto retrieved = retriever.retrieve(target, k);
    std::vector<QAInstance> instances;
    instances.reserve(schema.size());
    for (const auto& slot : schema) {
        std::vector<std::pair<const TurnRecord*, std::string>> examples;
        examples.reserve(retrieved.size());
        for (const DbEntry* e : retrieved)
            examples.emplace_back(&e->turn, example_answer_for(e->turn, slot.key));
        instances.push_back(serialize_instance(slot, target, examples, opts));
    }
    return instances;
}

/// Fold one turn's answers back into a predicted dialogue state. Expects
/// exactly one answer per schema slot; "none" answers leave the slot absent;
/// other answers are kept verbatim even when outside a categorical option
/// list (they simply score wrong downstream).
inline DialogueState aggregate_answers(const std::vector<AnswerRecord>& answers,
                                       const std::vector<SlotSchema>& schema) {
    std::map<SlotKey, const AnswerRecord*> by_slot;
    for (const auto& rec : answers) {
        if (!by_slot.emplace(rec.id.slot, &rec).second)
            throw DataError("duplicate answer for instance " + rec.id.render());
        if (rec.id.dialogue_id != answers.front().id.dialogue_id ||
            rec.id.turn_index != answers.front().id.turn_index)
            throw DataError("answers span multiple turns: " + rec.id.render());
    }
    DialogueState state;
    for (const auto& slot : schema) {
        auto it = by_slot.find(slot.key);
        if (it == by_slot.end())
            throw DataError("missing answer for slot " + slot.key.render());
        const std::string& answer = it->second->answer;
        std::string norm = normalize_value(answer);
        if (norm.empty()) throw DataError("empty answer for instance " + it->second->id.render());
        if (norm != "none") state.emplace(slot.key, answer);
        by_slot.erase(it);
    }
    if (!by_slot.empty())
        throw DataError("answer for unknown slot " + by_slot.begin()->second->id.render());
    return state;
}

// ---------------------------------------------------------------------------
// Instance / answer files (line-delimited)
// ---------------------------------------------------------------------------

inline json instance_to_json(const QAInstance& inst) {
    json ex = json::array();
    for (const auto& id : inst.example_ids) ex.push_back({id.dialogue_id, id.turn_index});
    return {{"dialogue_id", inst.id.dialogue_id}, {"turn_index", inst.id.turn_index},
            {"slot", inst.id.slot.render()},      {"prompt", inst.prompt},
            {"gold_answer", inst.gold_answer},    {"example_ids", std::move(ex)},
            {"k", inst.k}};
}

inline void write_instances(const std::vector<QAInstance>& instances,
                            const std::filesystem::path& path) {
    auto out = open_output(path);
    for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

inline std::vector<QAInstance> read_instances(const std::filesystem::path& path) {
    std::vector<QAInstance> instances;
    read_jsonl(path, [&](size_t line_no, const json& rec) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        QAInstance inst;
        inst.id.dialogue_id = require_string(rec, "dialogue_id", where);
        inst.id.turn_index = require_field(rec, "turn_index", where).get<int>();
        inst.id.slot = SlotKey::parse(require_string(rec, "slot", where));
        inst.prompt = require_string(rec, "prompt", where);
        inst.gold_answer = require_string(rec, "gold_answer", where);
        inst.k = require_field(rec, "k", where).get<int>();
        for (const auto& id : require_field(rec, "example_ids", where))
            inst.example_ids.push_back({id.at(0).get<std::string>(), id.at(1).get<int>()});
        instances.push_back(std::move(inst));
    });
    return instances;
}

inline void write_answers(const std::vector<AnswerRecord>& answers,
                          const std::filesystem::path& path) {
    auto out = open_output(path);
    for (const auto& a : answers) {
        json rec = {{"dialogue_id", a.id.dialogue_id},
                    {"turn_index", a.id.turn_index},
                    {"slot", a.id.slot.render()},
                    {"answer", a.answer}};
        out << rec.dump() << '\n';
    }
}

inline std::vector<AnswerRecord> read_answers(const std::filesystem::path& path) {
    std::vector<AnswerRecord> answers;
    read_jsonl(path, [&](size_t line_no, const json& rec) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        AnswerRecord a;
        a.id.dialogue_id = require_string(rec, "dialogue_id", where);
        a.id.turn_index = require_field(rec, "turn_index", where).get<int>();
        a.id.slot = SlotKey::parse(require_string(rec, "slot", where));
        a.answer = require_string(rec, "answer", where);
        if (a.answer.empty()) throw DataError(where + ": empty answer");
        answers.push_back(std::move(a));
    });
    return answers;
}

}  // namespace slotqa
