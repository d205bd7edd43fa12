#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "slotqa/harness.hpp"

namespace fixtures {

/// Deterministic 3-domain synthetic benchmark: hotel, restaurant, flight.
/// Per domain: 20 train / 3 dev / 6 test dialogues of 10-14 turns. Every
/// test dialogue is a twin of the train dialogue with the same index
/// (identical utterances and states, distinct ids), and every user turn
/// carries a dialogue-pair-unique booking code token, so the state-change
/// oracle resolves each test turn to its train twin.
const std::vector<std::string>& domains();
slotqa::SchemaMap benchmark_schema();
slotqa::Corpus make_domain_corpus(int domain_index);
slotqa::CorpusMap benchmark_corpora();

/// Write <data_dir>/<domain>.jsonl for each domain plus the schema file.
void write_benchmark(const std::filesystem::path& data_dir,
                     const std::filesystem::path& schema_path);

}  // namespace fixtures
