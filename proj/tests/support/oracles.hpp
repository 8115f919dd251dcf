#pragma once
// Brute-force reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "qvfdag/glm.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/metrics.hpp"
#include "qvfdag/rng.hpp"

namespace oracle {

using qvfdag::NodeSet;

struct KappaTable {
    std::size_t n11 = 0, n12 = 0, n21 = 0, n22 = 0;
};

// Classifies every universe element one at a time.
inline KappaTable classify(const NodeSet& a, const NodeSet& b, const NodeSet& universe)
{
    const std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    KappaTable t;
    for (auto u : std::set<std::size_t>(universe.begin(), universe.end())) {
        const bool ia = sa.count(u) > 0, ib = sb.count(u) > 0;
        if (ia && ib) ++t.n11;
        else if (ia) ++t.n12;
        else if (ib) ++t.n21;
        else ++t.n22;
    }
    return t;
}

inline double kappa(const NodeSet& a, const NodeSet& b, const NodeSet& universe)
{
    const auto t = classify(a, b, universe);
    const double pn = static_cast<double>(t.n11 + t.n12 + t.n21 + t.n22);
    const double pa = static_cast<double>(t.n11 + t.n22) / pn;
    const double pe = (static_cast<double>(t.n11 + t.n12) * static_cast<double>(t.n11 + t.n21) +
                       static_cast<double>(t.n12 + t.n22) * static_cast<double>(t.n21 + t.n22)) /
                      (pn * pn);
    if (pe >= 1.0) return (t.n12 == 0 && t.n21 == 0) ? 1.0 : 0.0;
    return (pa - pe) / (1.0 - pe);
}

struct EditCounts {
    std::size_t tp = 0, flips = 0, insertions = 0, deletions = 0, est = 0, truth = 0;
};

// Walks every unordered node pair and compares its state in the two graphs
// (none, a->b, b->a) through dense adjacency matrices.
inline EditCounts edits(const qvfdag::Dag& est, const qvfdag::Dag& truth)
{
    const std::size_t p = truth.size();
    std::vector<std::vector<int>> e(p, std::vector<int>(p, 0)), t(p, std::vector<int>(p, 0));
    for (const auto& x : est.edges()) e[x.source][x.target] = 1;
    for (const auto& x : truth.edges()) t[x.source][x.target] = 1;
    EditCounts c;
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a + 1; b < p; ++b) {
            const int se = e[a][b] ? 1 : (e[b][a] ? -1 : 0);
            const int st = t[a][b] ? 1 : (t[b][a] ? -1 : 0);
            c.est += se != 0;
            c.truth += st != 0;
            if (se == st) {
                c.tp += st != 0;
            } else if (st == 0) {
                ++c.insertions;
            } else if (se == 0) {
                ++c.deletions;
            } else {
                ++c.flips;
            }
        }
    }
    return c;
}

inline bool matches(const qvfdag::Metrics& m, const EditCounts& c, std::size_t p)
{
    const double hm = p < 2 ? 0.0 : static_cast<double>(c.insertions + c.deletions + c.flips) / (p * (p - 1) / 2.0);
    double precision, recall, f1;
    if (c.est == 0 && c.truth == 0) {
        precision = recall = f1 = 1.0;
    } else {
        precision = c.est == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.est);
        recall = c.truth == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.truth);
        f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    return m.tp == c.tp && m.flips == c.flips && m.insertions == c.insertions && m.deletions == c.deletions &&
           m.estimated_edges == c.est && m.true_edges == c.truth && m.hm == hm && m.precision == precision &&
           m.recall == recall && m.f1 == f1;
}

// Random DAG drawn by keeping forward pairs of a random order.
inline qvfdag::Dag random_dag(std::size_t p, double density, qvfdag::Rng& rng)
{
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution keep(density);
    std::vector<qvfdag::Edge> edges;
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a + 1; b < p; ++b) {
            if (keep(rng)) edges.push_back({order[a], order[b]});
        }
    }
    return qvfdag::Dag{p, edges};
}

inline NodeSet random_subset(const NodeSet& universe, qvfdag::Rng& rng)
{
    const double rate = std::uniform_real_distribution<double>{0.0, 1.0}(rng);
    std::bernoulli_distribution keep(rate);
    NodeSet out;
    for (auto u : universe) {
        if (keep(rng)) out.push_back(u);
    }
    return out;
}

// Largest relative gap between the analytic gradient and central differences.
inline double gradient_gap(const qvfdag::Vector& y, const qvfdag::Matrix& x, const qvfdag::QvfFamily& family,
                           const qvfdag::LinearPredictor& at)
{
    qvfdag::Vector analytic;
    qvfdag::mean_nll(y, x, family, at, &analytic);
    double worst = 0.0;
    for (Eigen::Index k = 0; k <= x.cols(); ++k) {
        auto plus = at, minus = at;
        const double h = 1e-6;
        if (k == 0) {
            plus.intercept += h;
            minus.intercept -= h;
        } else {
            plus.coefficients[static_cast<std::size_t>(k - 1)] += h;
            minus.coefficients[static_cast<std::size_t>(k - 1)] -= h;
        }
        const double fd = (qvfdag::mean_nll(y, x, family, plus) - qvfdag::mean_nll(y, x, family, minus)) / (2 * h);
        worst = std::max(worst, std::abs(fd - analytic[k]) / std::max(1.0, std::abs(fd)));
    }
    return worst;
}

}  // namespace oracle
