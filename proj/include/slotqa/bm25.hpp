#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "slotqa/errors.hpp"
#include "slotqa/text.hpp"

namespace slotqa {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

/// Okapi BM25 over an inverted index.
///
/// Pinned scoring contract (the tie-break field of similarity scores must be
/// non-negative, so the non-negative idf variant is used):
///   idf(t)     = ln(1 + (N - df + 0.5) / (df + 0.5))
///   score(D,Q) = sum over query token occurrences of
///                idf(t) * tf(t,D) * (k1 + 1) / (tf(t,D) + k1 * (1 - b + b * |D|/avgdl))
/// Tokens are lowercase alphanumeric runs. A query sharing no term with a
/// document scores exactly 0.
class Bm25Index {
  public:
    Bm25Index(std::vector<std::vector<std::string>> docs, Bm25Params params)
        : params_(params), doc_len_(docs.size()) {
        if (docs.empty()) throw DataError("BM25 index needs a non-empty database");
        size_t total = 0;
        for (size_t d = 0; d < docs.size(); ++d) {
            doc_len_[d] = docs[d].size();
            total += docs[d].size();
            std::map<std::string, uint32_t> tf;
            for (const auto& tok : docs[d]) ++tf[tok];
            for (const auto& [tok, freq] : tf)
                postings_[tok].push_back({static_cast<uint32_t>(d), freq});
        }
        avgdl_ = static_cast<double>(total) / static_cast<double>(docs.size());
    }

    static Bm25Index build(const std::vector<std::string>& docs_text, Bm25Params params = {}) {
        std::vector<std::vector<std::string>> docs;
        docs.reserve(docs_text.size());
        for (const auto& text : docs_text) docs.push_back(tokenize(text));
        return Bm25Index(std::move(docs), params);
    }

    size_t size() const { return doc_len_.size(); }
    double avgdl() const { return avgdl_; }

    double idf(const std::string& token) const {
        auto it = postings_.find(token);
        size_t df = it == postings_.end() ? 0 : it->second.size();
        double n = static_cast<double>(size());
        return std::log(1.0 + (n - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5));
    }

    /// Scores for every document, accumulated over query token occurrences.
    std::vector<double> scores(const std::vector<std::string>& query_tokens) const {
        std::vector<double> out(size(), 0.0);
        const double k1 = params_.k1;
        const double b = params_.b;
        for (const auto& tok : query_tokens) {
            auto it = postings_.find(tok);
            if (it == postings_.end()) continue;
            double w = idf(tok);
            for (const auto& [doc, tf] : it->second) {
                double norm = avgdl_ > 0.0 ? 1.0 - b + b * (static_cast<double>(doc_len_[doc]) / avgdl_)
                                           : 1.0;
                out[doc] += w * (static_cast<double>(tf) * (k1 + 1.0)) /
                            (static_cast<double>(tf) + k1 * norm);
            }
        }
        return out;
    }

    std::vector<double> scores_text(std::string_view query) const { return scores(tokenize(query)); }

    nlohmann::json to_json() const {
        nlohmann::json postings = nlohmann::json::object();
        for (const auto& [tok, list] : postings_) {
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& [doc, tf] : list) entries.push_back({doc, tf});
            postings[tok] = std::move(entries);
        }
        return {{"k1", params_.k1},
                {"b", params_.b},
                {"doc_len", doc_len_},
                {"avgdl", avgdl_},
                {"postings", std::move(postings)}};
    }

    static Bm25Index from_json(const nlohmann::json& j) {
        Bm25Index index;
        index.params_.k1 = j.at("k1").get<double>();
        index.params_.b = j.at("b").get<double>();
        index.doc_len_ = j.at("doc_len").get<std::vector<size_t>>();
        if (index.doc_len_.empty()) throw DataError("BM25 index file has no documents");
        index.avgdl_ = j.at("avgdl").get<double>();
        for (const auto& [tok, list] : j.at("postings").items())
            for (const auto& entry : list)
                index.postings_[tok].push_back(
                    {entry.at(0).get<uint32_t>(), entry.at(1).get<uint32_t>()});
        return index;
    }

  private:
    Bm25Index() = default;

    Bm25Params params_;
    std::vector<size_t> doc_len_;
    double avgdl_ = 0.0;
    std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> postings_;
};

}  // namespace slotqa
