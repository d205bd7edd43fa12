#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive and share no code with the library implementations
// they check.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace reference {

inline std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

/// Brute-force Okapi BM25: no index, document frequencies recomputed by
/// scanning the collection for every query token occurrence.
inline std::vector<double> bm25_scores(const std::vector<std::string>& docs_text,
                                       const std::string& query_text, double k1 = 1.5,
                                       double b = 0.75) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& d : docs_text) docs.push_back(split_tokens(d));
    std::vector<std::string> query = split_tokens(query_text);
    double n = static_cast<double>(docs.size());
    double total_len = 0;
    for (const auto& d : docs) total_len += static_cast<double>(d.size());
    double avgdl = total_len / n;

    std::vector<double> scores(docs.size(), 0.0);
    for (size_t i = 0; i < docs.size(); ++i) {
        for (const auto& q : query) {
            double tf = 0;
            for (const auto& tok : docs[i])
                if (tok == q) tf += 1;
            if (tf == 0) continue;
            double df = 0;
            for (const auto& d : docs) {
                bool found = false;
                for (const auto& tok : d)
                    if (tok == q) found = true;
                if (found) df += 1;
            }
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            double norm = avgdl > 0.0 ? 1.0 - b + b * (static_cast<double>(docs[i].size()) / avgdl)
                                      : 1.0;
            scores[i] += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
        }
    }
    return scores;
}

/// Directional F1 between sets, P computed against `predicted` and R against
/// `target`; the mean of both directions is the appendix-style similarity.
inline double directional_f1(const std::set<std::string>& predicted,
                             const std::set<std::string>& target) {
    if (predicted.empty() || target.empty()) return 0.0;
    double m = 0;
    for (const auto& x : predicted)
        if (target.count(x)) m += 1;
    if (m == 0) return 0.0;
    double p = m / static_cast<double>(predicted.size());
    double r = m / static_cast<double>(target.size());
    return 2.0 * p * r / (p + r);
}

}  // namespace reference
