#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "slotqa/corpus.hpp"
#include "slotqa/jsonl.hpp"
#include "slotqa/rng.hpp"
#include "slotqa/similarity.hpp"

namespace slotqa {

struct DbEntry {
    TurnRecord turn;
    std::string text;                 // last system + user utterance pair
    std::vector<std::string> tokens;  // tokenized text
    StateDelta delta;

    CandidateId id() const { return candidate_id(turn); }
};

/// The in-context example database: train-split turns of every service seen
/// so far. Grows monotonically; queries never see the target turn itself.
class ExampleDatabase {
  public:
    void add(const TurnRecord& turn) {
        if (!ids_.insert(candidate_id(turn)).second)
            throw DataError("duplicate database entry " + turn.dialogue_id + ":" +
                            std::to_string(turn.turn_index));
        DbEntry entry;
        entry.turn = turn;
        entry.text = query_text(turn);
        entry.tokens = tokenize(entry.text);
        entry.delta = compute_delta(turn.prev_state, turn.state);
        entries_.push_back(std::move(entry));
    }

    void add_split(const std::vector<Dialogue>& dialogues) {
        for (const auto& d : dialogues)
            for (const auto& t : d.turns) add(t);
    }

    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }
    const std::vector<DbEntry>& entries() const { return entries_; }
    bool contains(const CandidateId& id) const { return ids_.count(id) > 0; }

    /// Candidates for a target, in canonical (candidate id) order so that
    /// downstream draws do not depend on insertion order.
    std::vector<const DbEntry*> eligible(const TurnRecord& target,
                                         bool exclude_same_dialogue) const {
        std::vector<const DbEntry*> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_)
            if (!excluded(target, e.turn, exclude_same_dialogue)) out.push_back(&e);
        std::sort(out.begin(), out.end(),
                  [](const DbEntry* a, const DbEntry* b) { return a->id() < b->id(); });
        return out;
    }

    /// True (excluded) iff the candidate is the target itself, or shares its
    /// dialogue when same-dialogue exclusion is on (the default): same-dialogue
    /// examples get undesirably high similarity.
    static bool excluded(const TurnRecord& target, const TurnRecord& candidate,
                         bool exclude_same_dialogue = true) {
        if (candidate.dialogue_id == target.dialogue_id) {
            if (exclude_same_dialogue) return true;
            if (candidate.turn_index == target.turn_index) return true;
        }
        return false;
    }

  private:
    std::vector<DbEntry> entries_;
    std::set<CandidateId> ids_;
};

/// Externally computed sentence vectors, keyed by turn. Never computed
/// in-process; neural encoders live outside the toolkit boundary.
class EmbeddingTable {
  public:
    static EmbeddingTable load(const std::filesystem::path& path) {
        EmbeddingTable table;
        read_jsonl(path, [&](size_t line_no, const json& rec) {
            std::string where = path.string() + ":" + std::to_string(line_no);
            CandidateId id{require_string(rec, "dialogue_id", where),
                           require_field(rec, "turn_index", where).get<int>()};
            const json& vec = require_field(rec, "vector", where);
            if (!vec.is_array() || vec.empty())
                throw ParseError(where + ": 'vector' must be a non-empty array");
            std::vector<double> v = vec.get<std::vector<double>>();
            if (table.dim_ == 0) table.dim_ = v.size();
            if (v.size() != table.dim_)
                throw DataError(where + ": vector dimension " + std::to_string(v.size()) +
                                " != " + std::to_string(table.dim_));
            if (!table.vectors_.emplace(std::move(id), std::move(v)).second)
                throw DataError(where + ": duplicate embedding for turn");
        });
        return table;
    }

    size_t dim() const { return dim_; }
    bool has(const CandidateId& id) const { return vectors_.count(id) > 0; }

    const std::vector<double>& at(const CandidateId& id) const {
        auto it = vectors_.find(id);
        if (it == vectors_.end())
            throw DataError("missing embedding vector for turn " + id.dialogue_id + ":" +
                            std::to_string(id.turn_index));
        return it->second;
    }

  private:
    std::map<CandidateId, std::vector<double>> vectors_;
    size_t dim_ = 0;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct RetrieverConfig {
    std::string name = "bm25";  // random | bm25 | embedding | oracle
    Bm25Params bm25;
    uint64_t seed = 0;               // random retriever
    std::string embeddings_path;     // embedding retriever
    bool exclude_same_dialogue = true;
};

/// A retriever over a database snapshot. Rankings are deterministic: every
/// retriever breaks score ties by candidate id ascending, and the random
/// retriever derives its stream from (seed, target id) so results do not
/// depend on query order.
class Retriever {
  public:
    virtual ~Retriever() = default;

    std::vector<const DbEntry*> retrieve(const TurnRecord& target, int k) const {
        if (k < 0) throw ConfigError("k must be >= 0");
        auto candidates = db_->eligible(target, exclude_same_dialogue_);
        if (k == 0 || candidates.empty()) return {};
        return pick(target, candidates, static_cast<size_t>(k));
    }

    const ExampleDatabase& database() const { return *db_; }

  protected:
    Retriever(const ExampleDatabase& db, bool exclude_same_dialogue)
        : db_(&db), exclude_same_dialogue_(exclude_same_dialogue) {
        if (db.empty()) throw DataError("retriever needs a non-empty database");
    }

    virtual std::vector<const DbEntry*> pick(const TurnRecord& target,
                                             const std::vector<const DbEntry*>& candidates,
                                             size_t k) const = 0;

    /// Sort candidates by (score desc, id asc) and keep the top k.
    static std::vector<const DbEntry*> top_k(std::vector<const DbEntry*> candidates,
                                             const std::vector<double>& scores, size_t k) {
        std::vector<size_t> order(candidates.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return candidates[a]->id() < candidates[b]->id();
        });
        std::vector<const DbEntry*> out;
        out.reserve(std::min(k, order.size()));
        for (size_t i = 0; i < order.size() && i < k; ++i) out.push_back(candidates[order[i]]);
        return out;
    }

  private:
    const ExampleDatabase* db_;
    bool exclude_same_dialogue_;
};

class RandomRetriever final : public Retriever {
  public:
    RandomRetriever(const ExampleDatabase& db, uint64_t seed, bool exclude_same_dialogue)
        : Retriever(db, exclude_same_dialogue), seed_(seed) {}

  protected:
    std::vector<const DbEntry*> pick(const TurnRecord& target,
                                     const std::vector<const DbEntry*>& candidates,
                                     size_t k) const override {
        Rng rng(mix_seed(seed_, fnv1a(target.dialogue_id) ^ static_cast<uint64_t>(target.turn_index)));
        std::vector<const DbEntry*> out;
        for (size_t i : sample_indices(candidates.size(), k, rng)) out.push_back(candidates[i]);
        return out;
    }

  private:
    uint64_t seed_;
};

class Bm25Retriever final : public Retriever {
  public:
    Bm25Retriever(const ExampleDatabase& db, Bm25Params params, bool exclude_same_dialogue)
        : Retriever(db, exclude_same_dialogue), index_(build_index(db, params)) {}

    const Bm25Index& index() const { return index_; }

    /// Index over the tokenized query text of every database entry.
    static Bm25Index build_index(const ExampleDatabase& db, Bm25Params params) {
        std::vector<std::vector<std::string>> docs;
        docs.reserve(db.size());
        for (const auto& e : db.entries()) docs.push_back(e.tokens);
        return Bm25Index(std::move(docs), params);
    }

  protected:
    std::vector<const DbEntry*> pick(const TurnRecord& target,
                                     const std::vector<const DbEntry*>& candidates,
                                     size_t k) const override {
        std::vector<double> all = index_.scores_text(query_text(target));
        const DbEntry* base = db_entries().data();
        std::vector<double> scores;
        scores.reserve(candidates.size());
        for (const DbEntry* c : candidates) scores.push_back(all[static_cast<size_t>(c - base)]);
        return top_k(candidates, scores, k);
    }

  private:
    const std::vector<DbEntry>& db_entries() const { return database().entries(); }

    Bm25Index index_;
};

class EmbeddingRetriever final : public Retriever {
  public:
    EmbeddingRetriever(const ExampleDatabase& db, const EmbeddingTable& table,
                       bool exclude_same_dialogue)
        : Retriever(db, exclude_same_dialogue), table_(&table) {}

  protected:
    std::vector<const DbEntry*> pick(const TurnRecord& target,
                                     const std::vector<const DbEntry*>& candidates,
                                     size_t k) const override {
        const auto& q = table_->at(candidate_id(target));
        std::vector<double> scores;
        scores.reserve(candidates.size());
        for (const DbEntry* c : candidates) scores.push_back(dot(q, table_->at(c->id())));
        return top_k(candidates, scores, k);
    }

  private:
    const EmbeddingTable* table_;
};

/// SCS + BM25 ranking. Needs gold states, so it is usable only for
/// training-data construction and upper bounds.
class OracleRetriever final : public Retriever {
  public:
    OracleRetriever(const ExampleDatabase& db, Bm25Params params, bool exclude_same_dialogue)
        : Retriever(db, exclude_same_dialogue), params_(params) {}

  protected:
    std::vector<const DbEntry*> pick(const TurnRecord& target,
                                     const std::vector<const DbEntry*>& candidates,
                                     size_t k) const override {
        std::vector<const TurnRecord*> turns;
        turns.reserve(candidates.size());
        for (const DbEntry* c : candidates) turns.push_back(&c->turn);
        auto ranked = oracle_rank(target, turns, params_);
        std::map<CandidateId, const DbEntry*> by_id;
        for (const DbEntry* c : candidates) by_id.emplace(c->id(), c);
        std::vector<const DbEntry*> out;
        for (size_t i = 0; i < ranked.size() && i < k; ++i)
            out.push_back(by_id.at(ranked[i].candidate));
        return out;
    }

  private:
    Bm25Params params_;
};

inline std::unique_ptr<Retriever> make_retriever(const RetrieverConfig& config,
                                                 const ExampleDatabase& db,
                                                 const EmbeddingTable* embeddings = nullptr) {
    if (config.name == "random")
        return std::make_unique<RandomRetriever>(db, config.seed, config.exclude_same_dialogue);
    if (config.name == "bm25")
        return std::make_unique<Bm25Retriever>(db, config.bm25, config.exclude_same_dialogue);
    if (config.name == "oracle")
        return std::make_unique<OracleRetriever>(db, config.bm25, config.exclude_same_dialogue);
    if (config.name == "embedding") {
        if (!embeddings) throw ConfigError("embedding retriever needs an embeddings file");
        return std::make_unique<EmbeddingRetriever>(db, *embeddings, config.exclude_same_dialogue);
    }
    throw ConfigError("unknown retriever name: " + config.name);
}

// ---------------------------------------------------------------------------
// Contrastive pair export
// ---------------------------------------------------------------------------

struct PairExportOptions {
    Bm25Params bm25;
    int window = 200;  // Oracle-rank window per anchor
    int n_pos = 10;    // top of the window -> hard positives
    int n_neg = 10;    // bottom of the window -> hard negatives
    bool pair_by_rank = false;  // false: full 10x10 cross product
};

struct ContrastivePair {
    CandidateId anchor;
    CandidateId positive;
    CandidateId negative;
};

/// Mine hard positive/negative pairs from the first service's train split.
/// Each anchor is Oracle-ranked against every other train turn; the top
/// n_pos and bottom n_neg of the leading `window` candidates are combined
/// (cross product by default, rank-by-rank with pair_by_rank). Pair texts
/// are the last utterance pairs only, never dialogue state.
inline std::vector<ContrastivePair> mine_contrastive_pairs(const std::vector<TurnRecord>& turns,
                                                           const PairExportOptions& opts = {}) {
    std::vector<ContrastivePair> pairs;
    for (const auto& anchor : turns) {
        std::vector<const TurnRecord*> candidates;
        candidates.reserve(turns.size() - 1);
        for (const auto& other : turns) {
            if (other.dialogue_id == anchor.dialogue_id && other.turn_index == anchor.turn_index)
                continue;
            candidates.push_back(&other);
        }
        if (candidates.size() < static_cast<size_t>(opts.n_pos + opts.n_neg))
            throw DataError("pair export needs at least " + std::to_string(opts.n_pos + opts.n_neg) +
                            " candidates per anchor, got " + std::to_string(candidates.size()));
        auto ranked = oracle_rank(anchor, candidates, opts.bm25);
        size_t window = std::min(ranked.size(), static_cast<size_t>(opts.window));
        size_t n_pos = static_cast<size_t>(opts.n_pos);
        size_t n_neg = static_cast<size_t>(opts.n_neg);
        CandidateId aid = candidate_id(anchor);
        if (opts.pair_by_rank) {
            for (size_t i = 0; i < std::min(n_pos, n_neg); ++i)
                pairs.push_back({aid, ranked[i].candidate, ranked[window - 1 - i].candidate});
        } else {
            for (size_t p = 0; p < n_pos; ++p)
                for (size_t n = 0; n < n_neg; ++n)
                    pairs.push_back(
                        {aid, ranked[p].candidate, ranked[window - n_neg + n].candidate});
        }
    }
    return pairs;
}

/// Export mined pairs as line-delimited {anchor, positive, negative} text
/// triplets with ids; returns the pair count.
inline size_t export_contrastive_pairs(const Corpus& corpus, const std::filesystem::path& out_path,
                                       const PairExportOptions& opts = {}) {
    std::vector<TurnRecord> turns = flatten(corpus.train);
    std::map<CandidateId, const TurnRecord*> by_id;
    for (const auto& t : turns) by_id.emplace(candidate_id(t), &t);
    auto pairs = mine_contrastive_pairs(turns, opts);
    auto out = open_output(out_path);
    for (const auto& p : pairs) {
        json rec;
        rec["anchor_id"] = {p.anchor.dialogue_id, p.anchor.turn_index};
        rec["positive_id"] = {p.positive.dialogue_id, p.positive.turn_index};
        rec["negative_id"] = {p.negative.dialogue_id, p.negative.turn_index};
        rec["anchor"] = query_text(*by_id.at(p.anchor));
        rec["positive"] = query_text(*by_id.at(p.positive));
        rec["negative"] = query_text(*by_id.at(p.negative));
        out << rec.dump() << '\n';
    }
    return pairs.size();
}

}  // namespace slotqa
