#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qvfdag/error.hpp"
#include "qvfdag/graph.hpp"

namespace qvfdag {

/// Divisor for the normalized Hamming distance.
enum class HmNormalization {
    skeleton,  // p(p-1)/2
    ordered,   // p(p-1)
};

struct Metrics {
    double hm = 0.0;
    double recall = 1.0;
    double precision = 1.0;
    double f1 = 1.0;
    std::size_t tp = 0;
    std::size_t fp = 0;  // estimated edges that are not true edges (includes reversed ones)
    std::size_t fn = 0;  // true edges not estimated in that direction (includes reversed ones)
    std::size_t flips = 0;
    std::size_t insertions = 0;
    std::size_t deletions = 0;
    std::size_t estimated_edges = 0;
    std::size_t true_edges = 0;
};

inline double hm_divisor(std::size_t p, HmNormalization norm)
{
    const double pairs = static_cast<double>(p) * static_cast<double>(p - 1);
    return norm == HmNormalization::skeleton ? pairs / 2.0 : pairs;
}

/// Edit counts between two DAGs on the same node set. A true edge present only in
/// reverse is one flip; other extra estimated edges are insertions and other missing
/// true edges deletions.
inline Metrics structural_metrics(const Dag& estimated, const Dag& truth,
                                  HmNormalization norm = HmNormalization::skeleton)
{
    if (estimated.size() != truth.size()) {
        throw InputError("graphs have different node counts (" + std::to_string(estimated.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
    }
    const std::size_t p = truth.size();
    Metrics m;
    m.estimated_edges = estimated.edge_count();
    m.true_edges = truth.edge_count();

    for (const Edge& e : truth.edges()) {
        if (estimated.has_edge(e.source, e.target)) {
            ++m.tp;
        } else if (estimated.has_edge(e.target, e.source)) {
            ++m.flips;
        } else {
            ++m.deletions;
        }
    }
    for (const Edge& e : estimated.edges()) {
        if (!truth.has_edge(e.source, e.target) && !truth.has_edge(e.target, e.source)) ++m.insertions;
    }
    m.fp = m.estimated_edges - m.tp;
    m.fn = m.true_edges - m.tp;

    m.hm = p < 2 ? 0.0 : static_cast<double>(m.insertions + m.deletions + m.flips) / hm_divisor(p, norm);
    if (m.estimated_edges == 0 && m.true_edges == 0) {
        m.precision = m.recall = m.f1 = 1.0;
        return m;
    }
    m.precision = m.estimated_edges == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.estimated_edges);
    m.recall = m.true_edges == 0 ? 1.0 : static_cast<double>(m.tp) / static_cast<double>(m.true_edges);
    const double s = m.precision + m.recall;
    m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
    return m;
}

/// Mean and standard error (sd / sqrt(R)) of one metric over replications.
struct Summary {
    double mean = 0.0;
    std::optional<double> se;  // unset when fewer than two values
    std::size_t count = 0;
};

inline Summary summarize(const std::vector<double>& values)
{
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.se = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

struct MetricsSummary {
    Summary hm, recall, precision, f1;
    std::size_t failures = 0;
};

/// Aggregates successful replications; nullopt entries count as failures.
inline MetricsSummary summarize(const std::vector<std::optional<Metrics>>& reps)
{
    std::vector<double> hm, recall, precision, f1;
    MetricsSummary out;
    for (const auto& r : reps) {
        if (!r) {
            ++out.failures;
            continue;
        }
        hm.push_back(r->hm);
        recall.push_back(r->recall);
        precision.push_back(r->precision);
        f1.push_back(r->f1);
    }
    out.hm = summarize(hm);
    out.recall = summarize(recall);
    out.precision = summarize(precision);
    out.f1 = summarize(f1);
    return out;
}

}  // namespace qvfdag
