// slotqa — continual-learning DST benchmark toolkit.
//
// Subcommands cover the full pipeline: corpus ingestion and validation,
// state-change inspection, oracle ranking, BM25 index construction,
// retrieval, contrastive pair export, prompt generation, memory sampling,
// metric evaluation, and the end-to-end continual-learning run.
//
// Exit codes: 0 success, 2 configuration error, 3 answerer failure,
// 4 data validation failure, 1 anything else.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "slotqa/slotqa.hpp"

namespace {

using namespace slotqa;

struct CandidateRef {
    std::string dialogue_id;
    int turn_index;
};

CandidateRef parse_turn_ref(const std::string& ref) {
    auto colon = ref.rfind(':');
    if (colon == std::string::npos || colon + 1 == ref.size())
        throw ConfigError("--target must be '<dialogue_id>:<turn_index>', got '" + ref + "'");
    try {
        return {ref.substr(0, colon), std::stoi(ref.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError("bad turn index in '" + ref + "'");
    }
}

const TurnRecord* find_turn(const std::vector<Dialogue>& dialogues, const CandidateRef& ref) {
    for (const auto& d : dialogues) {
        if (d.dialogue_id != ref.dialogue_id) continue;
        for (const auto& t : d.turns)
            if (t.turn_index == ref.turn_index) return &t;
    }
    return nullptr;
}

const TurnRecord& require_turn(const Corpus& corpus, const std::string& split,
                               const CandidateRef& ref) {
    const TurnRecord* turn = find_turn(corpus.split(split), ref);
    if (!turn)
        throw DataError("no turn " + ref.dialogue_id + ":" + std::to_string(ref.turn_index) +
                        " in split " + split);
    return *turn;
}

std::ostream& output_stream(const std::string& out_path, std::ofstream& file) {
    if (out_path.empty()) return std::cout;
    file = open_output(out_path);
    return file;
}

json delta_record(const TurnRecord& turn, const std::string& split) {
    json entries = json::array();
    for (const auto& e : compute_delta(turn.prev_state, turn.state).entries)
        entries.push_back(
            {{"key", e.key.render()}, {"op", to_string(e.op)}, {"value", e.value}});
    return {{"dialogue_id", turn.dialogue_id},
            {"turn_index", turn.turn_index},
            {"split", split},
            {"delta", std::move(entries)}};
}

/// Predicted/gold state files: either per-turn records
/// {dialogue_id, turn_index, state} or corpus-format dialogue lines (the
/// latter need --schema).
std::map<std::pair<std::string, int>, DialogueState> load_states(
    const std::filesystem::path& path, const std::optional<SchemaMap>& schemas) {
    std::map<std::pair<std::string, int>, DialogueState> states;
    read_jsonl(path, [&](size_t line_no, const json& rec) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        if (rec.contains("turns")) {
            if (!schemas)
                throw ConfigError(where + ": corpus-format lines need --schema");
            auto [dialogue, split] = detail::parse_dialogue(rec, *schemas, where);
            for (const auto& turn : dialogue.turns)
                states[{turn.dialogue_id, turn.turn_index}] = turn.state;
            return;
        }
        DialogueState state;
        for (const auto& [key, value] : require_field(rec, "state", where).items())
            state.emplace(SlotKey::parse(key), value.get<std::string>());
        auto id = std::make_pair(require_string(rec, "dialogue_id", where),
                                 require_field(rec, "turn_index", where).get<int>());
        if (!states.emplace(id, std::move(state)).second)
            throw DataError(where + ": duplicate turn " + id.first + ":" +
                            std::to_string(id.second));
    });
    if (states.empty()) throw DataError(path.string() + ": no states");
    return states;
}

void print_metric_line(const std::string& name, double value) {
    std::cout << name << " " << percent(value) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"example-guided per-slot QA benchmark for continual dialogue state tracking"};
    app.require_subcommand(1);

    try {
        // ---- ingest ----
        auto* ingest = app.add_subcommand("ingest", "load and validate a corpus file");
        struct {
            std::string corpus, schema;
            bool validate = false;
        } ingest_opts;
        ingest->add_option("--corpus", ingest_opts.corpus, "corpus jsonl file")->required();
        ingest->add_option("--schema", ingest_opts.schema, "schema json file")->required();
        ingest->add_flag("--validate", ingest_opts.validate, "validate only, print a summary");
        ingest->callback([&] {
            Corpus corpus = load_corpus(ingest_opts.corpus, ingest_opts.schema);
            std::cout << "ok domain=" << corpus.domain << " slots=" << corpus.schema.size()
                      << " train=" << corpus.train.size() << "/" << flatten(corpus.train).size()
                      << " dev=" << corpus.dev.size() << "/" << flatten(corpus.dev).size()
                      << " test=" << corpus.test.size() << "/" << flatten(corpus.test).size()
                      << " (dialogues/turns)\n";
        });

        // ---- delta ----
        auto* delta_cmd = app.add_subcommand("delta", "emit one state-change record per turn");
        struct {
            std::string corpus, schema, split = "all", out;
        } delta_opts;
        delta_cmd->add_option("--corpus", delta_opts.corpus)->required();
        delta_cmd->add_option("--schema", delta_opts.schema)->required();
        delta_cmd->add_option("--split", delta_opts.split, "train|dev|test|all");
        delta_cmd->add_option("--out", delta_opts.out, "output file (default stdout)");
        delta_cmd->callback([&] {
            Corpus corpus = load_corpus(delta_opts.corpus, delta_opts.schema);
            std::ofstream file;
            auto& out = output_stream(delta_opts.out, file);
            std::vector<std::string> splits =
                delta_opts.split == "all" ? std::vector<std::string>{"train", "dev", "test"}
                                          : std::vector<std::string>{delta_opts.split};
            for (const auto& split : splits)
                for (const auto& d : corpus.split(split))
                    for (const auto& t : d.turns) out << delta_record(t, split).dump() << "\n";
        });

        // ---- oracle-rank ----
        auto* rank = app.add_subcommand("oracle-rank",
                                        "rank candidates by state-change similarity + BM25");
        struct {
            std::string corpus, schema, target, split = "train", target_split;
            int top = 10;
            double k1 = 1.5, b = 0.75;
            bool exclude_same_dialogue = false;
        } rank_opts;
        rank->add_option("--corpus", rank_opts.corpus)->required();
        rank->add_option("--schema", rank_opts.schema)->required();
        rank->add_option("--target", rank_opts.target, "dialogue_id:turn_index")->required();
        rank->add_option("--split", rank_opts.split, "candidate split (default train)");
        rank->add_option("--target-split", rank_opts.target_split,
                         "target split (default: same as --split)");
        rank->add_option("--top", rank_opts.top, "rows to print");
        rank->add_option("--k1", rank_opts.k1);
        rank->add_option("--b", rank_opts.b);
        rank->add_flag("--exclude-same-dialogue", rank_opts.exclude_same_dialogue);
        rank->callback([&] {
            Corpus corpus = load_corpus(rank_opts.corpus, rank_opts.schema);
            std::string target_split =
                rank_opts.target_split.empty() ? rank_opts.split : rank_opts.target_split;
            const TurnRecord& target =
                require_turn(corpus, target_split, parse_turn_ref(rank_opts.target));
            std::vector<const TurnRecord*> candidates;
            for (const auto& d : corpus.split(rank_opts.split))
                for (const auto& t : d.turns)
                    if (!ExampleDatabase::excluded(target, t, rank_opts.exclude_same_dialogue))
                        candidates.push_back(&t);
            auto ranked = oracle_rank(target, candidates, {rank_opts.k1, rank_opts.b});
            for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(rank_opts.top); ++i) {
                json rec = {{"rank", i + 1},
                            {"dialogue_id", ranked[i].candidate.dialogue_id},
                            {"turn_index", ranked[i].candidate.turn_index},
                            {"scs", ranked[i].scs},
                            {"bm25", ranked[i].bm25_tiebreak}};
                std::cout << rec.dump() << "\n";
            }
        });

        // ---- build-index ----
        auto* build = app.add_subcommand("build-index", "build a BM25 index over a split");
        struct {
            std::string corpus, schema, split = "train", out;
            double k1 = 1.5, b = 0.75;
        } build_opts;
        build->add_option("--corpus", build_opts.corpus)->required();
        build->add_option("--schema", build_opts.schema)->required();
        build->add_option("--split", build_opts.split);
        build->add_option("--out", build_opts.out, "index json file")->required();
        build->add_option("--k1", build_opts.k1);
        build->add_option("--b", build_opts.b);
        build->callback([&] {
            Corpus corpus = load_corpus(build_opts.corpus, build_opts.schema);
            ExampleDatabase db;
            db.add_split(corpus.split(build_opts.split));
            if (db.empty()) throw DataError("split has no turns to index");
            Bm25Index index = Bm25Retriever::build_index(db, {build_opts.k1, build_opts.b});
            json meta = index.to_json();
            json docs = json::array();
            for (const auto& e : db.entries())
                docs.push_back({e.id().dialogue_id, e.id().turn_index});
            meta["docs"] = std::move(docs);
            write_json_file(build_opts.out, meta);
            std::cout << "indexed " << index.size() << " documents, avgdl " << index.avgdl()
                      << "\n";
        });

        // ---- retrieve ----
        auto* retrieve_cmd = app.add_subcommand("retrieve", "retrieve k in-context examples");
        struct {
            std::string corpus, schema, target, retriever = "bm25";
            std::string split = "train", target_split = "test", embeddings;
            int k = 1;
            uint64_t seed = 0;
            double k1 = 1.5, b = 0.75;
            bool include_same_dialogue = false;
        } ret_opts;
        retrieve_cmd->add_option("--corpus", ret_opts.corpus)->required();
        retrieve_cmd->add_option("--schema", ret_opts.schema)->required();
        retrieve_cmd->add_option("--target", ret_opts.target, "dialogue_id:turn_index")->required();
        retrieve_cmd->add_option("--retriever", ret_opts.retriever,
                                 "random|bm25|embedding|oracle");
        retrieve_cmd->add_option("--k", ret_opts.k);
        retrieve_cmd->add_option("--split", ret_opts.split, "database split (default train)");
        retrieve_cmd->add_option("--target-split", ret_opts.target_split,
                                 "target split (default test)");
        retrieve_cmd->add_option("--embeddings", ret_opts.embeddings, "embedding jsonl file");
        retrieve_cmd->add_option("--seed", ret_opts.seed);
        retrieve_cmd->add_option("--k1", ret_opts.k1);
        retrieve_cmd->add_option("--b", ret_opts.b);
        retrieve_cmd->add_flag("--include-same-dialogue", ret_opts.include_same_dialogue);
        retrieve_cmd->callback([&] {
            Corpus corpus = load_corpus(ret_opts.corpus, ret_opts.schema);
            const TurnRecord& target =
                require_turn(corpus, ret_opts.target_split, parse_turn_ref(ret_opts.target));
            ExampleDatabase db;
            db.add_split(corpus.split(ret_opts.split));
            RetrieverConfig cfg;
            cfg.name = ret_opts.retriever;
            cfg.bm25 = {ret_opts.k1, ret_opts.b};
            cfg.seed = ret_opts.seed;
            cfg.embeddings_path = ret_opts.embeddings;
            cfg.exclude_same_dialogue = !ret_opts.include_same_dialogue;
            std::optional<EmbeddingTable> table;
            if (!ret_opts.embeddings.empty()) table = EmbeddingTable::load(ret_opts.embeddings);
            auto retriever = make_retriever(cfg, db, table ? &*table : nullptr);
            auto got = retriever->retrieve(target, ret_opts.k);
            for (size_t i = 0; i < got.size(); ++i) {
                json rec = {{"rank", i + 1},
                            {"dialogue_id", got[i]->turn.dialogue_id},
                            {"turn_index", got[i]->turn.turn_index},
                            {"text", got[i]->text}};
                std::cout << rec.dump() << "\n";
            }
        });

        // ---- export-pairs ----
        auto* pairs = app.add_subcommand(
            "export-pairs", "mine hard positive/negative pairs from the first service");
        struct {
            std::string data_dir, corpus, schema, domain_first, out;
            int window = 200, pos = 10, neg = 10;
            double k1 = 1.5, b = 0.75;
            bool pair_by_rank = false;
        } pair_opts;
        pairs->add_option("--data-dir", pair_opts.data_dir, "directory with <domain>.jsonl");
        pairs->add_option("--corpus", pair_opts.corpus, "explicit corpus file (overrides)");
        pairs->add_option("--schema", pair_opts.schema)->required();
        pairs->add_option("--domain-first", pair_opts.domain_first, "the first service T1");
        pairs->add_option("--out", pair_opts.out)->required();
        pairs->add_option("--window", pair_opts.window);
        pairs->add_option("--pos", pair_opts.pos);
        pairs->add_option("--neg", pair_opts.neg);
        pairs->add_option("--k1", pair_opts.k1);
        pairs->add_option("--b", pair_opts.b);
        pairs->add_flag("--pair-by-rank", pair_opts.pair_by_rank,
                        "pair rank-by-rank instead of the full cross product");
        pairs->callback([&] {
            std::string corpus_path = pair_opts.corpus;
            if (corpus_path.empty()) {
                if (pair_opts.data_dir.empty() || pair_opts.domain_first.empty())
                    throw ConfigError("export-pairs needs --corpus or --data-dir + --domain-first");
                corpus_path = (std::filesystem::path(pair_opts.data_dir) /
                               (pair_opts.domain_first + ".jsonl"))
                                  .string();
            }
            Corpus corpus = load_corpus(corpus_path, pair_opts.schema);
            if (!pair_opts.domain_first.empty() && corpus.domain != pair_opts.domain_first)
                throw DataError("corpus domain '" + corpus.domain + "' is not --domain-first '" +
                                pair_opts.domain_first + "'");
            PairExportOptions opts;
            opts.bm25 = {pair_opts.k1, pair_opts.b};
            opts.window = pair_opts.window;
            opts.n_pos = pair_opts.pos;
            opts.n_neg = pair_opts.neg;
            opts.pair_by_rank = pair_opts.pair_by_rank;
            size_t count = export_contrastive_pairs(corpus, pair_opts.out, opts);
            std::cout << "exported " << count << " pairs\n";
        });

        // ---- gen-prompts ----
        auto* gen = app.add_subcommand("gen-prompts", "serialize QA instances for a split");
        struct {
            std::string corpus, schema, split = "test", db_split = "train";
            std::string retriever = "bm25", embeddings, out;
            int k = 1;
            uint64_t seed = 0;
            double k1 = 1.5, b = 0.75;
        } gen_opts;
        gen->add_option("--corpus", gen_opts.corpus)->required();
        gen->add_option("--schema", gen_opts.schema)->required();
        gen->add_option("--split", gen_opts.split, "target split (default test)");
        gen->add_option("--db-split", gen_opts.db_split, "example database split (default train)");
        gen->add_option("--retriever", gen_opts.retriever, "random|bm25|embedding|oracle");
        gen->add_option("--k", gen_opts.k);
        gen->add_option("--out", gen_opts.out)->required();
        gen->add_option("--embeddings", gen_opts.embeddings);
        gen->add_option("--seed", gen_opts.seed);
        gen->add_option("--k1", gen_opts.k1);
        gen->add_option("--b", gen_opts.b);
        gen->callback([&] {
            Corpus corpus = load_corpus(gen_opts.corpus, gen_opts.schema);
            ExampleDatabase db;
            db.add_split(corpus.split(gen_opts.db_split));
            RetrieverConfig cfg;
            cfg.name = gen_opts.retriever;
            cfg.bm25 = {gen_opts.k1, gen_opts.b};
            cfg.seed = gen_opts.seed;
            cfg.embeddings_path = gen_opts.embeddings;
            std::optional<EmbeddingTable> table;
            if (!gen_opts.embeddings.empty()) table = EmbeddingTable::load(gen_opts.embeddings);
            auto retriever = make_retriever(cfg, db, table ? &*table : nullptr);
            std::vector<QAInstance> instances;
            for (const auto& turn : flatten(corpus.split(gen_opts.split)))
                for (auto& inst : build_instances(turn, corpus.schema, *retriever, gen_opts.k))
                    instances.push_back(std::move(inst));
            write_instances(instances, gen_opts.out);
            std::cout << "wrote " << instances.size() << " instances\n";
        });

        // ---- sample-memory ----
        auto* mem = app.add_subcommand("sample-memory", "sample replay turns from a split");
        struct {
            std::string corpus, schema, strategy = "dialogue", split = "train", out;
            int m = 50, divisor = 10;
            uint64_t seed = 42;
        } mem_opts;
        mem->add_option("--corpus", mem_opts.corpus)->required();
        mem->add_option("--schema", mem_opts.schema)->required();
        mem->add_option("--strategy", mem_opts.strategy, "turn|dialogue|dialogue_fair");
        mem->add_option("--m", mem_opts.m, "turns to sample")->required();
        mem->add_option("--seed", mem_opts.seed);
        mem->add_option("--split", mem_opts.split);
        mem->add_option("--divisor", mem_opts.divisor, "turns-per-dialogue estimate");
        mem->add_option("--out", mem_opts.out)->required();
        mem->callback([&] {
            Corpus corpus = load_corpus(mem_opts.corpus, mem_opts.schema);
            MemoryBudget budget{mem_opts.m, strategy_from_string(mem_opts.strategy),
                                mem_opts.seed, mem_opts.divisor};
            auto sampled = sample_memory(corpus.split(mem_opts.split), budget);
            write_sampled_corpus(corpus.split(mem_opts.split), sampled, mem_opts.split,
                                 mem_opts.out);
            std::cout << "sampled " << sampled.size() << " turns\n";
        });

        // ---- eval ----
        auto* eval_cmd = app.add_subcommand("eval", "compute JGA / Avg JGA / FWT / BWT");
        struct {
            std::string matrix, preds, gold, schema, out;
        } eval_opts;
        eval_cmd->add_option("--matrix", eval_opts.matrix, "accuracy matrix json");
        eval_cmd->add_option("--preds", eval_opts.preds, "predicted states jsonl");
        eval_cmd->add_option("--gold", eval_opts.gold, "gold states jsonl or corpus file");
        eval_cmd->add_option("--schema", eval_opts.schema,
                             "schema (for corpus-format gold files)");
        eval_cmd->add_option("--out", eval_opts.out, "machine-readable report json");
        eval_cmd->callback([&] {
            json machine;
            if (!eval_opts.matrix.empty()) {
                AccuracyMatrix m = AccuracyMatrix::from_json(read_json_file(eval_opts.matrix));
                double avg = avg_jga(m);
                print_metric_line("avg_jga", avg);
                machine["avg_jga"] = avg;
                if (m.size() >= 2) {
                    try {
                        double f = fwt(m);
                        print_metric_line("fwt", f);
                        machine["fwt"] = f;
                    } catch (const DataError&) {
                        machine["fwt"] = nullptr;  // superdiagonal not populated
                    }
                    double b = bwt(m);
                    print_metric_line("bwt", b);
                    machine["bwt"] = b;
                }
            } else if (!eval_opts.preds.empty() && !eval_opts.gold.empty()) {
                std::optional<SchemaMap> schemas;
                if (!eval_opts.schema.empty()) schemas = load_schema(eval_opts.schema);
                auto preds = load_states(eval_opts.preds, schemas);
                auto golds = load_states(eval_opts.gold, schemas);
                std::vector<DialogueState> p, g;
                for (const auto& [id, gold_state] : golds) {
                    auto it = preds.find(id);
                    if (it == preds.end())
                        throw DataError("no prediction for turn " + id.first + ":" +
                                        std::to_string(id.second));
                    p.push_back(it->second);
                    g.push_back(gold_state);
                }
                if (preds.size() != golds.size())
                    throw DataError("prediction file covers turns absent from the gold file");
                double score = jga(p, g);
                print_metric_line("jga", score);
                machine["jga"] = score;
                machine["turns"] = g.size();
            } else {
                throw ConfigError("eval needs --matrix or --preds + --gold");
            }
            if (!eval_opts.out.empty()) write_json_file(eval_opts.out, machine);
        });

        // ---- run ----
        auto* run = app.add_subcommand("run", "run the continual-learning protocol");
        struct {
            std::string config;
        } run_opts;
        run->add_option("--config", run_opts.config, "run config json")->required();
        run->callback([&] {
            RunConfig cfg = load_run_config(run_opts.config);
            RunReport report = run_cl(cfg);
            for (const auto& r : report.runs) {
                std::cout << "run ordering=" << r.ordering_index << " seed=" << r.seed
                          << " avg_jga " << percent(r.avg_jga);
                if (r.fwt) std::cout << " fwt " << percent(*r.fwt);
                if (r.bwt) std::cout << " bwt " << percent(*r.bwt);
                std::cout << "\n";
            }
            std::cout << "aggregate avg_jga " << percent(report.avg_jga.mean) << " ("
                      << percent(report.avg_jga.stddev) << ")";
            if (report.fwt)
                std::cout << " fwt " << percent(report.fwt->mean) << " ("
                          << percent(report.fwt->stddev) << ")";
            if (report.bwt)
                std::cout << " bwt " << percent(report.bwt->mean) << " ("
                          << percent(report.bwt->stddev) << ")";
            std::cout << "\n";
            if (cfg.write_artifacts)
                std::cout << "report: " << (cfg.out_dir / "report.json").string() << "\n";
        });

        // ---- answer (reference external answerer) ----
        auto* answer = app.add_subcommand(
            "answer", "reference answerer for the external protocol: <instances> <answers>");
        struct {
            std::string instances, answers, mode = "gold";
        } ans_opts;
        answer->add_option("instances", ans_opts.instances, "instance jsonl file")->required();
        answer->add_option("answers", ans_opts.answers, "answer jsonl file to write")->required();
        answer->add_option("--mode", ans_opts.mode, "gold|none");
        answer->callback([&] {
            auto instances = read_instances(ans_opts.instances);
            std::vector<AnswerRecord> answers;
            answers.reserve(instances.size());
            for (const auto& inst : instances) {
                if (ans_opts.mode == "gold")
                    answers.push_back({inst.id, inst.gold_answer});
                else if (ans_opts.mode == "none")
                    answers.push_back({inst.id, "none"});
                else
                    throw ConfigError("unknown answer mode: " + ans_opts.mode);
            }
            write_answers(answers, ans_opts.answers);
        });

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const AnswererError& e) {
        std::cerr << "answerer error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
