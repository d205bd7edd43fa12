#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <csignal>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "slotqa/corpus.hpp"
#include "slotqa/evaluation.hpp"
#include "slotqa/jsonl.hpp"
#include "slotqa/memory.hpp"
#include "slotqa/promptgen.hpp"
#include "slotqa/retrieval.hpp"

namespace slotqa {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct AnswererConfig {
    std::string name = "gold";  // gold | none | copy_example | external
    std::string command;        // external: invoked as `sh -c "<command> <in> <out>"`
    double timeout_s = 60.0;
};

struct DevConfig {
    bool emit = false;  // emit dev-split instances per stage for external trainers
    RetrieverConfig retriever;
    int k = 1;

    DevConfig() { retriever.name = "oracle"; }
};

struct RunConfig {
    std::filesystem::path data_dir;      // <data_dir>/<domain>.jsonl per domain
    std::filesystem::path schema_path;
    std::filesystem::path out_dir;
    std::vector<std::vector<std::string>> orderings;
    RetrieverConfig retriever;
    int k = 1;
    MemoryBudget memory;
    AnswererConfig answerer;
    DevConfig dev;
    std::vector<uint64_t> seeds = {0};
    bool eval_fwt = true;              // evaluate a[t-1][t] cells in the same pass
    bool full_upper_triangle = false;  // evaluate every future domain at every stage
    bool write_artifacts = true;

    void validate() const {
        if (orderings.empty()) throw ConfigError("config needs at least one ordering");
        for (const auto& order : orderings) {
            if (order.empty()) throw ConfigError("ordering must not be empty");
            std::set<std::string> seen;
            for (const auto& d : order)
                if (!seen.insert(d).second)
                    throw ConfigError("ordering repeats domain '" + d + "'");
        }
        if (k < 0) throw ConfigError("k must be >= 0");
        if (memory.m < 0) throw ConfigError("memory budget must be >= 0");
        if (seeds.empty()) throw ConfigError("config needs at least one seed");
        if (answerer.name != "gold" && answerer.name != "none" &&
            answerer.name != "copy_example" && answerer.name != "external")
            throw ConfigError("unknown answerer: " + answerer.name);
        if (answerer.name == "external" && answerer.command.empty())
            throw ConfigError("external answerer needs a command");
        if (answerer.name == "copy_example" && k < 1)
            throw ConfigError("copy_example answerer needs k >= 1");
        if ((answerer.name == "external" || dev.emit || write_artifacts) && out_dir.empty())
            throw ConfigError("config needs an out_dir");
    }
};

namespace detail {

inline RetrieverConfig retriever_config_from_json(const json& j) {
    RetrieverConfig cfg;
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    if (j.contains("k1")) cfg.bm25.k1 = j.at("k1").get<double>();
    if (j.contains("b")) cfg.bm25.b = j.at("b").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("embeddings")) cfg.embeddings_path = j.at("embeddings").get<std::string>();
    if (j.contains("exclude_same_dialogue"))
        cfg.exclude_same_dialogue = j.at("exclude_same_dialogue").get<bool>();
    return cfg;
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    RunConfig cfg;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    try {
        cfg.data_dir = resolve(j.at("data_dir").get<std::string>());
        cfg.schema_path = resolve(j.at("schema").get<std::string>());
        if (j.contains("out_dir")) cfg.out_dir = resolve(j.at("out_dir").get<std::string>());
        cfg.orderings = j.at("orderings").get<std::vector<std::vector<std::string>>>();
        if (j.contains("retriever"))
            cfg.retriever = detail::retriever_config_from_json(j.at("retriever"));
        if (j.contains("k")) cfg.k = j.at("k").get<int>();
        if (j.contains("memory")) {
            const json& m = j.at("memory");
            if (m.contains("m")) cfg.memory.m = m.at("m").get<int>();
            if (m.contains("strategy"))
                cfg.memory.strategy = strategy_from_string(m.at("strategy").get<std::string>());
            if (m.contains("seed")) cfg.memory.seed = m.at("seed").get<uint64_t>();
            if (m.contains("turns_per_dialogue_estimate"))
                cfg.memory.turns_per_dialogue_estimate =
                    m.at("turns_per_dialogue_estimate").get<int>();
        }
        if (j.contains("answerer")) {
            const json& a = j.at("answerer");
            if (a.contains("name")) cfg.answerer.name = a.at("name").get<std::string>();
            if (a.contains("command")) cfg.answerer.command = a.at("command").get<std::string>();
            if (a.contains("timeout_s")) cfg.answerer.timeout_s = a.at("timeout_s").get<double>();
        }
        if (j.contains("dev")) {
            const json& d = j.at("dev");
            if (d.contains("emit")) cfg.dev.emit = d.at("emit").get<bool>();
            if (d.contains("retriever"))
                cfg.dev.retriever = detail::retriever_config_from_json(d.at("retriever"));
            if (d.contains("k")) cfg.dev.k = d.at("k").get<int>();
        }
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        if (j.contains("fwt")) cfg.eval_fwt = j.at("fwt").get<bool>();
        if (j.contains("full_upper_triangle"))
            cfg.full_upper_triangle = j.at("full_upper_triangle").get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    json j = read_json_file(path);
    return run_config_from_json(j, path.has_parent_path() ? path.parent_path()
                                                          : std::filesystem::path());
}

// ---------------------------------------------------------------------------
// Answerers
// ---------------------------------------------------------------------------

/// The value after the first "Answer:" in the first example block of a
/// prompt. Utterance text is lowercased in prompts, so the capitalized cue
/// is unambiguous.
inline std::string first_example_answer(const std::string& prompt) {
    auto ex = prompt.find("[example] ");
    if (ex == std::string::npos) throw DataError("prompt has no [example] block");
    auto cue = prompt.find(" Answer: ", ex);
    if (cue == std::string::npos) throw DataError("example block has no answer cue");
    size_t start = cue + 9;
    size_t end = std::min(prompt.find(" [example] ", start), prompt.find(" [target] ", start));
    if (end == std::string::npos) throw DataError("prompt has no [target] block");
    return prompt.substr(start, end - start);
}

inline AnswerRecord answerer_copy_example(const QAInstance& instance) {
    if (instance.k < 1)
        throw DataError("copy_example needs k >= 1 for instance " + instance.id.render());
    return {instance.id, first_example_answer(instance.prompt)};
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

/// Run `sh -c command`, killing the child when the timeout elapses.
inline void run_command(const std::string& command, double timeout_s) {
    pid_t pid = ::fork();
    if (pid < 0) throw AnswererError("fork failed for answerer command");
    if (pid == 0) {
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(timeout_s * 1000.0));
    int status = 0;
    for (;;) {
        pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw AnswererError("waitpid failed for answerer command");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw AnswererError("answerer timed out after " + std::to_string(timeout_s) +
                                "s: " + command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw AnswererError("answerer command failed: " + command);
}

/// Check that an answer set covers the emitted instance ids exactly.
inline void validate_answer_coverage(const std::vector<QAInstance>& instances,
                                     const std::vector<AnswerRecord>& answers) {
    std::map<InstanceId, int> counts;
    for (const auto& inst : instances) counts[inst.id] = 0;
    for (const auto& a : answers) {
        auto it = counts.find(a.id);
        if (it == counts.end())
            throw AnswererError("answer for unknown instance " + a.id.render());
        if (++it->second > 1) throw AnswererError("duplicate answer for instance " + a.id.render());
    }
    for (const auto& [id, n] : counts)
        if (n == 0) throw AnswererError("missing answer for instance " + id.render());
}

class Answerer {
  public:
    virtual ~Answerer() = default;

    /// Produce one answer per instance. File paths are provided so that the
    /// external answerer can exchange line-delimited records; in-process
    /// answerers ignore them.
    virtual std::vector<AnswerRecord> answer(const std::vector<QAInstance>& instances,
                                             const std::filesystem::path& instances_path,
                                             const std::filesystem::path& answers_path) = 0;

    /// True when the instance file must exist on disk before answer().
    virtual bool needs_files() const { return false; }
};

class GoldAnswerer final : public Answerer {
  public:
    std::vector<AnswerRecord> answer(const std::vector<QAInstance>& instances,
                                     const std::filesystem::path&,
                                     const std::filesystem::path&) override {
        std::vector<AnswerRecord> out;
        out.reserve(instances.size());
        for (const auto& inst : instances) out.push_back({inst.id, inst.gold_answer});
        return out;
    }
};

class NoneAnswerer final : public Answerer {
  public:
    std::vector<AnswerRecord> answer(const std::vector<QAInstance>& instances,
                                     const std::filesystem::path&,
                                     const std::filesystem::path&) override {
        std::vector<AnswerRecord> out;
        out.reserve(instances.size());
        for (const auto& inst : instances) out.push_back({inst.id, "none"});
        return out;
    }
};

class CopyExampleAnswerer final : public Answerer {
  public:
    std::vector<AnswerRecord> answer(const std::vector<QAInstance>& instances,
                                     const std::filesystem::path&,
                                     const std::filesystem::path&) override {
        std::vector<AnswerRecord> out;
        out.reserve(instances.size());
        for (const auto& inst : instances) out.push_back(answerer_copy_example(inst));
        return out;
    }
};

class ExternalAnswerer final : public Answerer {
  public:
    explicit ExternalAnswerer(AnswererConfig config) : config_(std::move(config)) {}

    bool needs_files() const override { return true; }

    std::vector<AnswerRecord> answer(const std::vector<QAInstance>& instances,
                                     const std::filesystem::path& instances_path,
                                     const std::filesystem::path& answers_path) override {
        std::error_code ec;
        std::filesystem::remove(answers_path, ec);
        run_command(config_.command + " " + shell_quote(instances_path.string()) + " " +
                        shell_quote(answers_path.string()),
                    config_.timeout_s);
        std::vector<AnswerRecord> answers;
        try {
            answers = read_answers(answers_path);
        } catch (const DataError& e) {
            throw AnswererError(std::string("malformed answer file: ") + e.what());
        }
        validate_answer_coverage(instances, answers);
        return answers;
    }

  private:
    AnswererConfig config_;
};

inline std::unique_ptr<Answerer> make_answerer(const AnswererConfig& config) {
    if (config.name == "gold") return std::make_unique<GoldAnswerer>();
    if (config.name == "none") return std::make_unique<NoneAnswerer>();
    if (config.name == "copy_example") return std::make_unique<CopyExampleAnswerer>();
    if (config.name == "external") return std::make_unique<ExternalAnswerer>(config);
    throw ConfigError("unknown answerer: " + config.name);
}

// ---------------------------------------------------------------------------
// Continual-learning protocol
// ---------------------------------------------------------------------------

using CorpusMap = std::map<std::string, Corpus>;

/// Load every domain referenced by the configured orderings from
/// <data_dir>/<domain>.jsonl.
inline CorpusMap load_run_data(const RunConfig& config) {
    CorpusMap data;
    for (const auto& order : config.orderings) {
        for (const auto& domain : order) {
            if (data.count(domain)) continue;
            auto path = config.data_dir / (domain + ".jsonl");
            if (!std::filesystem::exists(path))
                throw ConfigError("missing corpus for domain '" + domain +
                                  "': " + path.string());
            Corpus corpus = load_corpus(path, config.schema_path);
            if (corpus.domain != domain)
                throw DataError(path.string() + ": contains domain '" + corpus.domain + "'");
            data.emplace(domain, std::move(corpus));
        }
    }
    return data;
}

struct ManifestEntry {
    std::string origin;  // "current" | "memory"
    std::string service;
    CandidateId turn;
};

/// One run of the protocol over a single service ordering. Stages are
/// strictly sequential; the database grows by the current service's train
/// split before any evaluation at that stage.
class ContinualRunner {
  public:
    ContinualRunner(const RunConfig& config, const CorpusMap& data,
                    std::vector<std::string> order, int ordering_index, uint64_t base_seed)
        : config_(&config),
          data_(&data),
          order_(std::move(order)),
          ordering_index_(ordering_index),
          base_seed_(base_seed),
          matrix_(order_) {
        for (const auto& domain : order_)
            if (!data.count(domain)) throw ConfigError("no corpus loaded for '" + domain + "'");
        if (!config.retriever.embeddings_path.empty())
            embeddings_ = EmbeddingTable::load(config.retriever.embeddings_path);
        if (config.dev.emit && !config.dev.retriever.embeddings_path.empty())
            dev_embeddings_ = EmbeddingTable::load(config.dev.retriever.embeddings_path);
        answerer_ = make_answerer(config.answerer);
    }

    int stages() const { return static_cast<int>(order_.size()); }
    const ExampleDatabase& database() const { return db_; }
    const AccuracyMatrix& matrix() const { return matrix_; }

    std::filesystem::path run_dir() const {
        return config_->out_dir /
               ("run_" + std::to_string(ordering_index_) + "_" + std::to_string(base_seed_));
    }

    /// Memory samples from one previous service, with a seed derived from
    /// (base seed, memory seed, ordering, stage, source service) so replay
    /// draws are reproducible and independent of each other.
    std::vector<TurnRecord> memory_samples(int stage, const std::string& service) const {
        MemoryBudget budget = config_->memory;
        budget.seed = mix_seed(mix_seed(base_seed_, config_->memory.seed),
                               mix_seed((static_cast<uint64_t>(ordering_index_) << 32) |
                                            static_cast<uint64_t>(stage),
                                        fnv1a(service)));
        return sample_memory(data_->at(service).train, budget);
    }

    /// The stage training manifest: the current service's train turns plus M
    /// replay turns per previous service, each tagged with its origin.
    std::vector<ManifestEntry> stage_manifest(int stage) const {
        const std::string& current = order_.at(stage - 1);
        std::vector<ManifestEntry> manifest;
        for (const auto& turn : flatten(data_->at(current).train))
            manifest.push_back({"current", current, candidate_id(turn)});
        if (config_->memory.m > 0) {
            for (int s = 0; s + 1 < stage; ++s) {
                const std::string& previous = order_[s];
                for (const auto& turn : memory_samples(stage, previous))
                    manifest.push_back({"memory", previous, candidate_id(turn)});
            }
        }
        return manifest;
    }

    /// Execute stage t (1-based): grow the database, emit the manifest and
    /// dev instances, evaluate every required domain, and fill matrix cells.
    void run_stage(int stage) {
        const std::string& current = order_.at(stage - 1);
        db_.add_split(data_->at(current).train);
        retriever_ = make_retriever(effective_retriever_config(), db_,
                                    embeddings_ ? &*embeddings_ : nullptr);

        auto stage_dir = run_dir() / ("stage_" + std::to_string(stage));
        if (config_->write_artifacts) write_manifest(stage, stage_dir / "manifest.jsonl");

        std::vector<int> eval_domains;
        for (int i = 0; i < stage; ++i) eval_domains.push_back(i);
        if (config_->full_upper_triangle) {
            for (int i = stage; i < stages(); ++i) eval_domains.push_back(i);
        } else if (config_->eval_fwt && stage < stages()) {
            eval_domains.push_back(stage);
        }
        for (int i : eval_domains)
            matrix_.set(stage - 1, i, evaluate_domain(order_[i], stage_dir));

        if (config_->dev.emit) emit_dev_instances(current, stage_dir);
    }

    AccuracyMatrix run_all() {
        for (int t = 1; t <= stages(); ++t) run_stage(t);
        if (config_->write_artifacts)
            write_json_file(run_dir() / "matrix.json", matrix_.to_json());
        return matrix_;
    }

  private:
    RetrieverConfig effective_retriever_config() const {
        RetrieverConfig cfg = config_->retriever;
        cfg.seed = mix_seed(base_seed_, cfg.seed);
        return cfg;
    }

    void write_manifest(int stage, const std::filesystem::path& path) const {
        auto out = open_output(path);
        for (const auto& entry : stage_manifest(stage)) {
            json rec = {{"origin", entry.origin},
                        {"service", entry.service},
                        {"dialogue_id", entry.turn.dialogue_id},
                        {"turn_index", entry.turn.turn_index}};
            out << rec.dump() << '\n';
        }
    }

    double evaluate_domain(const std::string& domain, const std::filesystem::path& stage_dir) {
        const Corpus& corpus = data_->at(domain);
        std::vector<TurnRecord> turns = flatten(corpus.test);
        if (turns.empty()) throw DataError("domain '" + domain + "' has no test turns");

        std::vector<QAInstance> instances;
        for (const auto& turn : turns)
            for (auto& inst : build_instances(turn, corpus.schema, *retriever_, config_->k))
                instances.push_back(std::move(inst));

        auto instances_path = stage_dir / ("eval_" + domain + ".instances.jsonl");
        auto answers_path = stage_dir / ("eval_" + domain + ".answers.jsonl");
        bool wrote = false;
        if (config_->write_artifacts || answerer_->needs_files()) {
            write_instances(instances, instances_path);
            wrote = true;
        }
        auto answers = answerer_->answer(instances, instances_path, answers_path);
        if (wrote && config_->write_artifacts && !answerer_->needs_files())
            write_answers(answers, answers_path);

        std::map<CandidateId, std::vector<AnswerRecord>> by_turn;
        for (auto& a : answers) by_turn[{a.id.dialogue_id, a.id.turn_index}].push_back(std::move(a));

        std::vector<DialogueState> preds, golds;
        preds.reserve(turns.size());
        golds.reserve(turns.size());
        for (const auto& turn : turns) {
            auto it = by_turn.find(candidate_id(turn));
            if (it == by_turn.end())
                throw AnswererError("no answers for turn " + turn.dialogue_id + ":" +
                                    std::to_string(turn.turn_index));
            preds.push_back(aggregate_answers(it->second, corpus.schema));
            golds.push_back(turn.state);
        }
        return jga(preds, golds);
    }

    void emit_dev_instances(const std::string& domain, const std::filesystem::path& stage_dir) {
        const Corpus& corpus = data_->at(domain);
        if (corpus.dev.empty()) return;
        auto retriever = make_retriever(config_->dev.retriever, db_,
                                        dev_embeddings_ ? &*dev_embeddings_ : nullptr);
        std::vector<QAInstance> instances;
        for (const auto& turn : flatten(corpus.dev))
            for (auto& inst : build_instances(turn, corpus.schema, *retriever, config_->dev.k))
                instances.push_back(std::move(inst));
        write_instances(instances, stage_dir / ("dev_" + domain + ".instances.jsonl"));
    }

    const RunConfig* config_;
    const CorpusMap* data_;
    std::vector<std::string> order_;
    int ordering_index_;
    uint64_t base_seed_;
    ExampleDatabase db_;
    AccuracyMatrix matrix_;
    std::optional<EmbeddingTable> embeddings_;
    std::optional<EmbeddingTable> dev_embeddings_;
    std::unique_ptr<Retriever> retriever_;
    std::unique_ptr<Answerer> answerer_;
};

struct RunResult {
    int ordering_index = 0;
    uint64_t seed = 0;
    std::vector<std::string> order;
    AccuracyMatrix matrix{};
    double avg_jga = 0.0;
    std::optional<double> fwt;
    std::optional<double> bwt;
};

struct RunReport {
    std::vector<RunResult> runs;
    MetricAggregate avg_jga;
    std::optional<MetricAggregate> fwt;
    std::optional<MetricAggregate> bwt;
};

inline json report_to_json(const RunReport& report) {
    json runs = json::array();
    for (const auto& r : report.runs) {
        json jr = {{"ordering_index", r.ordering_index},
                   {"seed", r.seed},
                   {"order", r.order},
                   {"avg_jga", r.avg_jga},
                   {"matrix", r.matrix.to_json()}};
        jr["fwt"] = r.fwt ? json(*r.fwt) : json(nullptr);
        jr["bwt"] = r.bwt ? json(*r.bwt) : json(nullptr);
        runs.push_back(std::move(jr));
    }
    json agg = {{"avg_jga", {{"mean", report.avg_jga.mean}, {"std", report.avg_jga.stddev}}}};
    agg["fwt"] = report.fwt ? json{{"mean", report.fwt->mean}, {"std", report.fwt->stddev}}
                            : json(nullptr);
    agg["bwt"] = report.bwt ? json{{"mean", report.bwt->mean}, {"std", report.bwt->stddev}}
                            : json(nullptr);
    return {{"runs", std::move(runs)}, {"aggregate", std::move(agg)}};
}

/// Run the full protocol: every ordering under every seed, sequential stages
/// within a run, metrics per run and mean/sample-std aggregates across runs.
inline RunReport run_cl(const RunConfig& config, const CorpusMap& data) {
    config.validate();
    RunReport report;
    std::vector<double> avgs, fwts, bwts;
    for (size_t o = 0; o < config.orderings.size(); ++o) {
        for (uint64_t seed : config.seeds) {
            ContinualRunner runner(config, data, config.orderings[o], static_cast<int>(o), seed);
            RunResult result;
            result.ordering_index = static_cast<int>(o);
            result.seed = seed;
            result.order = config.orderings[o];
            result.matrix = runner.run_all();
            result.avg_jga = avg_jga(result.matrix);
            avgs.push_back(result.avg_jga);
            if (result.matrix.size() >= 2) {
                if (config.eval_fwt || config.full_upper_triangle) {
                    result.fwt = fwt(result.matrix);
                    fwts.push_back(*result.fwt);
                }
                result.bwt = bwt(result.matrix);
                bwts.push_back(*result.bwt);
            }
            report.runs.push_back(std::move(result));
        }
    }
    report.avg_jga = aggregate(avgs);
    if (!fwts.empty()) report.fwt = aggregate(fwts);
    if (!bwts.empty()) report.bwt = aggregate(bwts);
    if (config.write_artifacts)
        write_json_file(config.out_dir / "report.json", report_to_json(report));
    return report;
}

inline RunReport run_cl(const RunConfig& config) {
    CorpusMap data = load_run_data(config);
    return run_cl(config, data);
}

}  // namespace slotqa
