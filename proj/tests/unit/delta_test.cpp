#include <catch2/catch_amalgamated.hpp>

#include "slotqa/delta.hpp"
#include "slotqa/rng.hpp"
#include "support/fixtures.hpp"

using namespace slotqa;

namespace {

SlotKey key(const std::string& slot) { return {"hotel", slot}; }

DialogueState state(std::initializer_list<std::pair<std::string, std::string>> kv) {
    DialogueState s;
    for (const auto& [slot, value] : kv) s.emplace(key(slot), value);
    return s;
}

/// Independent brute-force diff used as the oracle for compute_delta.
std::set<std::tuple<std::string, std::string, std::string>> brute_force_diff(
    const DialogueState& prev, const DialogueState& cur) {
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& [k, v] : cur) {
        if (!prev.count(k))
            out.insert({k.render(), "INSERT", normalize_value(v)});
        else if (normalize_value(prev.at(k)) != normalize_value(v))
            out.insert({k.render(), "UPDATE", normalize_value(v)});
    }
    for (const auto& [k, v] : prev)
        if (!cur.count(k)) out.insert({k.render(), "DELETE", "none"});
    return out;
}

std::set<std::tuple<std::string, std::string, std::string>> as_tuples(const StateDelta& d) {
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& e : d.entries) out.insert({e.key.render(), to_string(e.op), e.value});
    return out;
}

DialogueState random_state(Rng& rng) {
    static const std::vector<std::string> slots = {"area", "stars", "parking", "name", "ref"};
    static const std::vector<std::string> values = {"1", "2", "east", "west", "yes", "arc"};
    DialogueState s;
    for (const auto& slot : slots)
        if (rng.below(2) == 0) s.emplace(key(slot), values[rng.below(values.size())]);
    return s;
}

}  // namespace

TEST_CASE("first mention of a slot is an insertion") {
    StateDelta d = compute_delta({}, state({{"stars", "3"}}));
    REQUIRE(d.size() == 1);
    CHECK(d.entries[0].key.render() == "hotel-stars");
    CHECK(d.entries[0].op == DeltaOp::insert);
    CHECK(d.entries[0].value == "3");
}

TEST_CASE("identical states produce an empty delta") {
    DialogueState s = state({{"stars", "3"}, {"area", "east"}});
    CHECK(compute_delta(s, s).empty());
    CHECK(compute_delta({}, {}).empty());
}

TEST_CASE("update and insert combine in one delta") {
    StateDelta d = compute_delta(state({{"stars", "3"}}),
                                 state({{"stars", "4"}, {"name", "hilton"}}));
    CHECK(as_tuples(d) == brute_force_diff(state({{"stars", "3"}}),
                                           state({{"stars", "4"}, {"name", "hilton"}})));
    REQUIRE(d.size() == 2);
    CHECK(as_tuples(d).count({"hotel-stars", "UPDATE", "4"}) == 1);
    CHECK(as_tuples(d).count({"hotel-name", "INSERT", "hilton"}) == 1);
}

TEST_CASE("removed keys become DELETE entries carrying none") {
    StateDelta d = compute_delta(state({{"parking", "yes"}}), {});
    REQUIRE(d.size() == 1);
    CHECK(d.entries[0].op == DeltaOp::remove);
    CHECK(d.entries[0].value == "none");
}

TEST_CASE("value comparison is normalized") {
    CHECK(compute_delta(state({{"area", "East "}}), state({{"area", "east"}})).empty());
    StateDelta d = compute_delta(state({{"area", "East"}}), state({{"area", "West"}}));
    REQUIRE(d.size() == 1);
    CHECK(d.entries[0].value == "west");
}

TEST_CASE("op-qualified keys render op as part of the key") {
    StateDelta d = compute_delta({}, state({{"stars", "3"}}));
    CHECK(op_qualified_keys(d) == std::set<std::string>{"hotel-stars⊕INSERT"});
    CHECK(op_qualified_keys(StateDelta{}).empty());

    // the same key/value inserted vs updated renders distinct keys
    StateDelta ins = compute_delta({}, state({{"stars", "3"}}));
    StateDelta upd = compute_delta(state({{"stars", "4"}}), state({{"stars", "3"}}));
    CHECK(op_qualified_keys(ins) != op_qualified_keys(upd));
    std::set<std::string> both;
    for (const auto& k : op_qualified_keys(ins)) both.insert(k);
    for (const auto& k : op_qualified_keys(upd)) both.insert(k);
    CHECK(both.size() == 2);  // disjoint
}

TEST_CASE("delta matches brute-force diff and replays, on random states") {
    Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        DialogueState prev = random_state(rng);
        DialogueState cur = random_state(rng);
        StateDelta d = compute_delta(prev, cur);
        CHECK(as_tuples(d) == brute_force_diff(prev, cur));
        CHECK(apply_delta(normalized(prev), d) == normalized(cur));
        CHECK(compute_delta(cur, cur).empty());
        // at most one entry per key
        std::set<SlotKey> keys;
        for (const auto& e : d.entries) CHECK(keys.insert(e.key).second);
    }
}

TEST_CASE("replay property holds corpus-wide on the benchmark fixture") {
    for (const auto& [domain, corpus] : fixtures::benchmark_corpora()) {
        for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test}) {
            for (const auto& dialogue : *split) {
                for (const auto& turn : dialogue.turns) {
                    StateDelta d = compute_delta(turn.prev_state, turn.state);
                    CHECK(apply_delta(normalized(turn.prev_state), d) == normalized(turn.state));
                }
            }
        }
    }
}
