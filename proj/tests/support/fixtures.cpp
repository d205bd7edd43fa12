#include "support/fixtures.hpp"

#include <array>
#include <cstdio>

#include "slotqa/corpus.hpp"

namespace fixtures {

using namespace slotqa;

namespace {

struct SlotSpec {
    std::string slot;
    SlotKind kind;
    std::vector<std::string> options;  // categorical options or extractive value pool
    std::string question;
};

struct DomainSpec {
    std::string name;
    char code_letter;
    std::vector<SlotSpec> slots;  // slots[4] is always the booking-code slot
};

const std::vector<DomainSpec>& specs() {
    static const std::vector<DomainSpec> kSpecs = {
        {"hotel",
         'h',
         {{"area", SlotKind::categorical, {"centre", "north", "south", "east", "west"},
           "What is the area of the hotel that the user wants?"},
          {"stars", SlotKind::categorical, {"1", "2", "3", "4", "5"},
           "What is the hotel star rating the user wants?"},
          {"parking", SlotKind::categorical, {"yes", "no"},
           "Does the user want parking at the hotel?"},
          {"name", SlotKind::extractive,
           {"arcadia", "bellfort", "cityview", "dunmore", "eastgate", "fairholm", "grandora"},
           "What is the name of the hotel that the user wants?"},
          {"ref", SlotKind::extractive, {},
           "What is the booking code for the hotel request?"}}},
        {"restaurant",
         'r',
         {{"area", SlotKind::categorical, {"centre", "north", "south", "east", "west"},
           "What is the area of the restaurant that the user wants?"},
          {"food", SlotKind::extractive,
           {"italian", "thai", "mexican", "indian", "french", "korean", "turkish"},
           "What type of food does the user want?"},
          {"pricerange", SlotKind::categorical, {"cheap", "moderate", "expensive"},
           "What is the price range of the restaurant the user wants?"},
          {"name", SlotKind::extractive,
           {"olive tree", "red lantern", "blue fig", "golden bowl", "mill house", "sage table"},
           "What is the name of the restaurant that the user wants?"},
          {"ref", SlotKind::extractive, {},
           "What is the booking code for the restaurant request?"}}},
        {"flight",
         'f',
         {{"origin", SlotKind::extractive,
           {"paris", "oslo", "lisbon", "madrid", "dublin", "prague", "vienna"},
           "What city is the user flying from?"},
          {"destination", SlotKind::extractive,
           {"athens", "berlin", "warsaw", "rome", "porto", "zagreb", "riga"},
           "What city is the user flying to?"},
          {"class", SlotKind::categorical, {"economy", "business", "first"},
           "What seating class does the user want for the flight?"},
          {"airline", SlotKind::extractive,
           {"skylark", "aerova", "bluejet", "norfly", "transora"},
           "What airline does the user want to fly with?"},
          {"ref", SlotKind::extractive, {},
           "What is the booking code for the flight request?"}}},
    };
    return kSpecs;
}

enum class Action { insert, update, remove };

struct ScriptStep {
    Action action;
    int slot;
};

// Content turns 2..14 follow this script; turn 1 inserts the booking code
// plus slot 0.
const std::array<ScriptStep, 13>& script() {
    static const std::array<ScriptStep, 13> kScript = {{{Action::insert, 1},
                                                        {Action::insert, 2},
                                                        {Action::update, 0},
                                                        {Action::insert, 3},
                                                        {Action::update, 1},
                                                        {Action::remove, 3},
                                                        {Action::update, 2},
                                                        {Action::insert, 3},
                                                        {Action::update, 0},
                                                        {Action::update, 1},
                                                        {Action::update, 2},
                                                        {Action::update, 3},
                                                        {Action::update, 0}}};
    return kScript;
}

std::string booking_code(const DomainSpec& spec, int dialogue_seq) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ax%c%02d", spec.code_letter, dialogue_seq);
    return buf;
}

std::string value_for(const SlotSpec& slot, int dialogue_seq, int step,
                      const std::string& current) {
    const auto& pool = slot.options;
    std::string v = pool[(dialogue_seq + step) % pool.size()];
    if (v == current) v = pool[(dialogue_seq + step + 1) % pool.size()];
    return v;
}

/// Build one dialogue. dialogue_seq drives the value pattern; twins reuse
/// the train dialogue's sequence number under a different id.
Dialogue make_dialogue(const DomainSpec& spec, const std::string& dialogue_id,
                       int dialogue_seq) {
    const int n_turns = 10 + dialogue_seq % 5;
    const bool empty_first = dialogue_seq % 7 == 3;
    const std::string code = booking_code(spec, dialogue_seq);

    Dialogue dialogue;
    dialogue.dialogue_id = dialogue_id;
    dialogue.domain = spec.name;

    std::vector<Utterance> history;
    DialogueState state;
    DialogueState prev_state;
    std::string system_reply;
    int step = 0;  // script cursor

    for (int t = 1; t <= n_turns; ++t) {
        if (t > 1) history.push_back({Speaker::system, system_reply});

        std::string user_text;
        if (t == 1 && empty_first) {
            user_text = "hello . i am looking for a " + spec.name + " . booking code " + code;
            system_reply = "hello . how can i help ?";
        } else if (state.empty()) {
            const SlotSpec& s0 = spec.slots[0];
            std::string v0 = value_for(s0, dialogue_seq, 0, "");
            state[{spec.name, s0.slot}] = v0;
            state[{spec.name, spec.slots[4].slot}] = code;
            user_text = "hello . i need a " + spec.name + " . " + s0.slot + " " + v0 +
                        " please . booking code " + code;
            system_reply = "noted . " + s0.slot + " is now " + v0 + " .";
        } else {
            const ScriptStep& op = script()[step % script().size()];
            ++step;
            const SlotSpec& slot = spec.slots[op.slot];
            SlotKey key{spec.name, slot.slot};
            if (op.action == Action::remove) {
                state.erase(key);
                user_text = "never mind the " + slot.slot +
                            " . drop that requirement . booking code " + code;
                system_reply = "ok . " + slot.slot + " removed .";
            } else {
                auto cur = state.find(key);
                std::string v =
                    value_for(slot, dialogue_seq, t, cur == state.end() ? "" : cur->second);
                state[key] = v;
                if (op.action == Action::insert)
                    user_text = "i would like " + slot.slot + " " + v + " . booking code " + code;
                else
                    user_text =
                        "actually change " + slot.slot + " to " + v + " . booking code " + code;
                system_reply = "noted . " + slot.slot + " is now " + v + " .";
            }
        }
        history.push_back({Speaker::user, user_text});

        TurnRecord turn;
        turn.dialogue_id = dialogue_id;
        turn.turn_index = t;
        turn.domain = spec.name;
        turn.history = history;
        turn.state = state;
        turn.prev_state = prev_state;
        dialogue.turns.push_back(std::move(turn));
        prev_state = state;
    }
    return dialogue;
}

Dialogue rename_dialogue(Dialogue d, const std::string& new_id) {
    d.dialogue_id = new_id;
    for (auto& turn : d.turns) turn.dialogue_id = new_id;
    return d;
}

std::string seq_id(const std::string& domain, const char* split, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%s_%02d", domain.c_str(), split, index);
    return buf;
}

}  // namespace

const std::vector<std::string>& domains() {
    static const std::vector<std::string> kDomains = {"hotel", "restaurant", "flight"};
    return kDomains;
}

SchemaMap benchmark_schema() {
    SchemaMap schema;
    for (const auto& spec : specs()) {
        for (const auto& slot : spec.slots) {
            SlotSchema s;
            s.key = {spec.name, slot.slot};
            s.kind = slot.kind;
            if (slot.kind == SlotKind::categorical) s.options = slot.options;
            s.question = slot.question;
            schema[spec.name].push_back(std::move(s));
        }
    }
    return schema;
}

Corpus make_domain_corpus(int domain_index) {
    const DomainSpec& spec = specs().at(domain_index);
    Corpus corpus;
    corpus.domain = spec.name;
    corpus.schema = benchmark_schema().at(spec.name);
    for (int i = 0; i < 20; ++i)
        corpus.train.push_back(make_dialogue(spec, seq_id(spec.name, "train", i), i));
    for (int j = 0; j < 3; ++j)
        corpus.dev.push_back(make_dialogue(spec, seq_id(spec.name, "dev", j), 40 + j));
    for (int j = 0; j < 6; ++j)
        corpus.test.push_back(rename_dialogue(corpus.train[j], seq_id(spec.name, "test", j)));
    return corpus;
}

CorpusMap benchmark_corpora() {
    CorpusMap corpora;
    for (size_t d = 0; d < domains().size(); ++d)
        corpora.emplace(domains()[d], make_domain_corpus(static_cast<int>(d)));
    return corpora;
}

void write_benchmark(const std::filesystem::path& data_dir,
                     const std::filesystem::path& schema_path) {
    json schema = json::array();
    for (const auto& spec : specs()) {
        for (const auto& slot : spec.slots) {
            json rec = {{"domain", spec.name},
                        {"slot", slot.slot},
                        {"kind", to_string(slot.kind)},
                        {"question", slot.question}};
            if (slot.kind == SlotKind::categorical) rec["options"] = slot.options;
            schema.push_back(std::move(rec));
        }
    }
    write_json_file(schema_path, schema);
    for (size_t d = 0; d < domains().size(); ++d) {
        Corpus corpus = make_domain_corpus(static_cast<int>(d));
        write_corpus(corpus, data_dir / (corpus.domain + ".jsonl"));
    }
}

}  // namespace fixtures
