#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "slotqa/errors.hpp"
#include "slotqa/jsonl.hpp"
#include "slotqa/types.hpp"

namespace slotqa {

inline bool states_match(const DialogueState& a, const DialogueState& b) {
    return normalized(a) == normalized(b);
}

/// Joint goal accuracy: the fraction of turns whose predicted state equals
/// the gold state exactly (same key set, same normalized values).
inline double jga(const std::vector<DialogueState>& predictions,
                  const std::vector<DialogueState>& golds) {
    if (predictions.size() != golds.size())
        throw DataError("jga: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " golds");
    if (predictions.empty()) throw DataError("jga: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (states_match(predictions[i], golds[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

/// a[t][i] = JGA on service i after training stage t (0-based internally).
/// The lower triangle plus diagonal is always populated by a full run; the
/// superdiagonal additionally when forward transfer is evaluated.
struct AccuracyMatrix {
    std::vector<std::string> order;
    std::vector<std::vector<std::optional<double>>> cells;

    explicit AccuracyMatrix(std::vector<std::string> service_order = {})
        : order(std::move(service_order)),
          cells(order.size(), std::vector<std::optional<double>>(order.size())) {}

    int size() const { return static_cast<int>(order.size()); }

    void set(int stage, int service, double value) {
        if (value < 0.0 || value > 1.0) throw DataError("accuracy out of [0,1]");
        cells.at(stage).at(service) = value;
    }

    double at(int stage, int service) const {
        const auto& cell = cells.at(stage).at(service);
        if (!cell)
            throw DataError("matrix cell (" + std::to_string(stage + 1) + "," +
                            std::to_string(service + 1) + ") is not populated");
        return *cell;
    }

    json to_json() const {
        json grid = json::array();
        for (const auto& row : cells) {
            json r = json::array();
            for (const auto& cell : row) {
                if (cell)
                    r.push_back(*cell);
                else
                    r.push_back(nullptr);
            }
            grid.push_back(std::move(r));
        }
        return {{"order", order}, {"matrix", std::move(grid)}};
    }

    static AccuracyMatrix from_json(const json& j) {
        AccuracyMatrix m(j.at("order").get<std::vector<std::string>>());
        const json& grid = j.at("matrix");
        if (grid.size() != m.order.size()) throw DataError("matrix is not square");
        for (size_t t = 0; t < grid.size(); ++t) {
            if (grid[t].size() != m.order.size()) throw DataError("matrix is not square");
            for (size_t i = 0; i < grid[t].size(); ++i)
                if (!grid[t][i].is_null()) m.set(static_cast<int>(t), static_cast<int>(i),
                                                 grid[t][i].get<double>());
        }
        return m;
    }
};

/// Mean of the last row: average JGA over all services after the final
/// training stage.
inline double avg_jga(const AccuracyMatrix& m) {
    if (m.size() < 1) throw DataError("empty accuracy matrix");
    double sum = 0.0;
    for (int i = 0; i < m.size(); ++i) sum += m.at(m.size() - 1, i);
    return sum / m.size();
}

/// Mean of a[i-1][i] for i = 2..T: zero-shot gain on the next unseen service.
inline double fwt(const AccuracyMatrix& m) {
    if (m.size() < 2) throw DataError("forward transfer needs at least 2 services");
    double sum = 0.0;
    for (int i = 1; i < m.size(); ++i) sum += m.at(i - 1, i);
    return sum / (m.size() - 1);
}

/// Mean of a[T][i] - a[i][i] for i = 1..T-1: forgetting on previously seen
/// services (typically negative).
inline double bwt(const AccuracyMatrix& m) {
    if (m.size() < 2) throw DataError("backward transfer needs at least 2 services");
    double sum = 0.0;
    for (int i = 0; i + 1 < m.size(); ++i) sum += m.at(m.size() - 1, i) - m.at(i, i);
    return sum / (m.size() - 1);
}

struct MetricAggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

inline MetricAggregate aggregate(const std::vector<double>& values) {
    MetricAggregate agg;
    if (values.empty()) return agg;
    double sum = 0.0;
    for (double v : values) sum += v;
    agg.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
        agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return agg;
}

/// CLI-style rendering: percentages with one decimal.
inline std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

}  // namespace slotqa
