#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "slotqa/bm25.hpp"
#include "slotqa/delta.hpp"
#include "slotqa/types.hpp"

namespace slotqa {

/// F1 overlap between two finite sets: with m = |a∩b|, P = m/|a|, R = m/|b|,
/// returns 2PR/(P+R) = 2m/(|a|+|b|); 0 when m = 0 or either set is empty.
/// Symmetric in its arguments.
template <typename T>
double f1_overlap(const std::set<T>& a, const std::set<T>& b) {
    if (a.empty() || b.empty()) return 0.0;
    size_t m = 0;
    for (const auto& x : a) m += b.count(x);
    if (m == 0) return 0.0;
    return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

/// SCS as an exact rational, so that ties rank deterministically. Each F1
/// component is 2m/(|a|+|b|), hence SCS = (m_k*d_kv + m_kv*d_k) / (d_k*d_kv)
/// with small integer terms; exact comparison is equivalent to the 1e-9
/// tie tolerance for any realistic delta size (the smallest nonzero gap
/// between two SCS values of deltas with <= ~10^4 entries far exceeds it).
struct ScsScore {
    int64_t num = 0;
    int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const ScsScore& a, const ScsScore& b) {
        return a.num * b.den == b.num * a.den;
    }
    friend bool operator<(const ScsScore& a, const ScsScore& b) {
        return a.num * b.den < b.num * a.den;
    }
};

/// State change similarity: the mean of F1 over op-qualified keys and F1
/// over op-qualified (key, value) pairs. Two empty deltas are identical,
/// vacuously 1; one empty delta scores 0.
inline ScsScore scs_exact(const StateDelta& a, const StateDelta& b) {
    if (a.empty() && b.empty()) return {1, 1};
    if (a.empty() || b.empty()) return {0, 1};
    auto ka = op_qualified_keys(a);
    auto kb = op_qualified_keys(b);
    auto pa = op_qualified_pairs(a);
    auto pb = op_qualified_pairs(b);
    int64_t mk = 0, mp = 0;
    for (const auto& x : ka) mk += kb.count(x);
    for (const auto& x : pa) mp += pb.count(x);
    int64_t dk = static_cast<int64_t>(ka.size() + kb.size());
    int64_t dp = static_cast<int64_t>(pa.size() + pb.size());
    // 1/2 (2mk/dk + 2mp/dp) = (mk*dp + mp*dk) / (dk*dp)
    return {mk * dp + mp * dk, dk * dp};
}

inline double scs(const StateDelta& a, const StateDelta& b) { return scs_exact(a, b).value(); }

struct CandidateId {
    std::string dialogue_id;
    int turn_index = 1;

    auto operator<=>(const CandidateId&) const = default;
};

inline CandidateId candidate_id(const TurnRecord& turn) {
    return {turn.dialogue_id, turn.turn_index};
}

/// One ranked candidate: SCS, the BM25 tie-break score between the target's
/// and the candidate's last system+user utterance pair, and the candidate id
/// (the final tie-break, ascending).
struct SimilarityScore {
    double scs = 0.0;
    double bm25_tiebreak = 0.0;
    CandidateId candidate;
};

/// Rank candidates for a target turn by SCS descending, breaking exact SCS
/// ties by BM25 over the last utterance pairs (the BM25 collection is the
/// candidate set itself), and residual ties by candidate id ascending. The
/// output is a permutation of the candidates and does not depend on their
/// input order. The target must not be among the candidates.
inline std::vector<SimilarityScore> oracle_rank(const TurnRecord& target,
                                                const std::vector<const TurnRecord*>& candidates,
                                                Bm25Params bm25_params = {}) {
    std::vector<SimilarityScore> out;
    if (candidates.empty()) return out;

    StateDelta target_delta = compute_delta(target.prev_state, target.state);

    std::vector<std::string> docs;
    docs.reserve(candidates.size());
    for (const TurnRecord* c : candidates) docs.push_back(query_text(*c));
    std::vector<double> bm25 = Bm25Index::build(docs, bm25_params).scores_text(query_text(target));

    struct Row {
        ScsScore scs;
        double bm25;
        CandidateId id;
    };
    std::vector<Row> rows;
    rows.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        StateDelta cd = compute_delta(candidates[i]->prev_state, candidates[i]->state);
        rows.push_back({scs_exact(target_delta, cd), bm25[i], candidate_id(*candidates[i])});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        if (!(x.scs == y.scs)) return y.scs < x.scs;
        if (x.bm25 != y.bm25) return x.bm25 > y.bm25;
        return x.id < y.id;
    });

    out.reserve(rows.size());
    for (const Row& r : rows) out.push_back({r.scs.value(), r.bm25, r.id});
    return out;
}

inline std::vector<SimilarityScore> oracle_rank(const TurnRecord& target,
                                                const std::vector<TurnRecord>& candidates,
                                                Bm25Params bm25_params = {}) {
    std::vector<const TurnRecord*> ptrs;
    ptrs.reserve(candidates.size());
    for (const auto& c : candidates) ptrs.push_back(&c);
    return oracle_rank(target, ptrs, bm25_params);
}

}  // namespace slotqa
