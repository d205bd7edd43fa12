#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slotqa/errors.hpp"
#include "slotqa/rng.hpp"
#include "slotqa/types.hpp"

namespace slotqa {

enum class SamplingStrategy { turn, dialogue, dialogue_fair };

inline std::string to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::turn: return "turn";
        case SamplingStrategy::dialogue: return "dialogue";
        case SamplingStrategy::dialogue_fair: return "dialogue_fair";
    }
    return "?";
}

inline SamplingStrategy strategy_from_string(std::string_view s) {
    if (s == "turn") return SamplingStrategy::turn;
    if (s == "dialogue") return SamplingStrategy::dialogue;
    if (s == "dialogue_fair") return SamplingStrategy::dialogue_fair;
    throw ConfigError("unknown sampling strategy: " + std::string(s));
}

/// Replay budget: M turns per previous service. The divisor used by
/// dialogue-level sampling to estimate how many dialogues cover M turns is
/// configurable; 10 matches the typical turns-per-dialogue of the target
/// corpora.
struct MemoryBudget {
    int m = 0;
    SamplingStrategy strategy = SamplingStrategy::dialogue;
    uint64_t seed = 0;
    int turns_per_dialogue_estimate = 10;
};

/// Uniform sample of M turns from the flattened turn pool, in draw order.
/// M >= pool size returns every turn (saturation).
inline std::vector<TurnRecord> sample_turn_level(const std::vector<Dialogue>& dialogues, int m,
                                                 uint64_t seed) {
    std::vector<TurnRecord> pool = flatten(dialogues);
    if (m <= 0) return {};
    if (static_cast<size_t>(m) >= pool.size()) return pool;
    Rng rng(seed);
    std::vector<TurnRecord> out;
    out.reserve(static_cast<size_t>(m));
    for (size_t i : sample_indices(pool.size(), static_cast<size_t>(m), rng))
        out.push_back(pool[i]);
    return out;
}

namespace detail {

inline std::vector<TurnRecord> pool_of(const std::vector<Dialogue>& dialogues,
                                       const std::vector<size_t>& picked) {
    std::vector<TurnRecord> pool;
    for (size_t i : picked)
        for (const auto& t : dialogues[i].turns) pool.push_back(t);
    return pool;
}

inline std::vector<TurnRecord> take_from_pool(std::vector<TurnRecord> pool, int m, Rng& rng) {
    if (static_cast<size_t>(m) >= pool.size()) return pool;  // saturation
    std::vector<TurnRecord> out;
    out.reserve(static_cast<size_t>(m));
    for (size_t i : sample_indices(pool.size(), static_cast<size_t>(m), rng))
        out.push_back(pool[i]);
    return out;
}

}  // namespace detail

/// Sample floor(M / estimate) dialogues first (at least one when M >= 1),
/// then M turns from their flattened pool. When the chosen dialogues hold
/// fewer than M turns the whole pool is returned, so the draw touches at
/// most ceil(M / estimate) dialogues by construction.
inline std::vector<TurnRecord> sample_dialogue_level(const std::vector<Dialogue>& dialogues, int m,
                                                     uint64_t seed,
                                                     int turns_per_dialogue_estimate = 10) {
    if (m <= 0 || dialogues.empty()) return {};
    if (turns_per_dialogue_estimate < 1)
        throw ConfigError("turns_per_dialogue_estimate must be >= 1");
    Rng rng(seed);
    size_t n_dialogues =
        std::max<size_t>(1, static_cast<size_t>(m / turns_per_dialogue_estimate));
    n_dialogues = std::min(n_dialogues, dialogues.size());
    auto picked = sample_indices(dialogues.size(), n_dialogues, rng);
    return detail::take_from_pool(detail::pool_of(dialogues, picked), m, rng);
}

/// Fair variant: keep drawing dialogues without replacement until their
/// cumulative turn count reaches M, then sample exactly M turns from the
/// drawn pool.
inline std::vector<TurnRecord> sample_dialogue_fair(const std::vector<Dialogue>& dialogues, int m,
                                                    uint64_t seed) {
    if (m <= 0 || dialogues.empty()) return {};
    Rng rng(seed);
    auto order = sample_indices(dialogues.size(), dialogues.size(), rng);
    std::vector<size_t> picked;
    size_t total = 0;
    for (size_t i : order) {
        if (total >= static_cast<size_t>(m)) break;
        picked.push_back(i);
        total += dialogues[i].turns.size();
    }
    return detail::take_from_pool(detail::pool_of(dialogues, picked), m, rng);
}

inline std::vector<TurnRecord> sample_memory(const std::vector<Dialogue>& dialogues,
                                             const MemoryBudget& budget) {
    switch (budget.strategy) {
        case SamplingStrategy::turn:
            return sample_turn_level(dialogues, budget.m, budget.seed);
        case SamplingStrategy::dialogue:
            return sample_dialogue_level(dialogues, budget.m, budget.seed,
                                         budget.turns_per_dialogue_estimate);
        case SamplingStrategy::dialogue_fair:
            return sample_dialogue_fair(dialogues, budget.m, budget.seed);
    }
    throw ConfigError("unknown sampling strategy");
}

}  // namespace slotqa
