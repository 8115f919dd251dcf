#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qvfdag/assign_layer.hpp"
#include "qvfdag/ratio.hpp"

namespace qvfdag {

/// 2x2 agreement table of two subsets of a universe.
struct KappaCounts {
    std::size_t n11 = 0;  // in both
    std::size_t n12 = 0;  // first only
    std::size_t n21 = 0;  // second only
    std::size_t n22 = 0;  // in neither

    std::size_t total() const noexcept { return n11 + n12 + n21 + n22; }
};

/// (Pr(a) - Pr(e)) / (1 - Pr(e)). When chance agreement is certain (both sets empty
/// or both full) kappa is 1 for identical sets and 0 otherwise.
inline double cohen_kappa(const KappaCounts& c)
{
    const double pn = static_cast<double>(c.total());
    if (pn <= 0) throw InputError("kappa needs a nonempty universe");
    const double pa = static_cast<double>(c.n11 + c.n22) / pn;
    const double pe = (static_cast<double>(c.n11 + c.n12) * static_cast<double>(c.n11 + c.n21) +
                       static_cast<double>(c.n12 + c.n22) * static_cast<double>(c.n21 + c.n22)) /
                      (pn * pn);
    if (pe >= 1.0) return c.n12 == 0 && c.n21 == 0 ? 1.0 : 0.0;
    return (pa - pe) / (1.0 - pe);
}

/// Kappa of two node sets over the given universe (p_n = |universe|).
inline double cohen_kappa(const NodeSet& a, const NodeSet& b, const NodeSet& universe)
{
    auto sorted = [](NodeSet s) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    };
    const NodeSet u = sorted(universe), sa = sorted(a), sb = sorted(b);
    for (const NodeSet* s : {&sa, &sb}) {
        if (!std::includes(u.begin(), u.end(), s->begin(), s->end())) {
            throw InputError("kappa set contains a node outside the universe");
        }
    }
    NodeSet both;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
    KappaCounts c;
    c.n11 = both.size();
    c.n12 = sa.size() - both.size();
    c.n21 = sb.size() - both.size();
    c.n22 = u.size() - c.n11 - c.n12 - c.n21;
    return cohen_kappa(c);
}

/// Default threshold grid {10^(-2 + 0.15 s) : s = 0..60}.
inline std::vector<double> default_epsilon_grid()
{
    std::vector<double> grid(61);
    for (int s = 0; s <= 60; ++s) grid[static_cast<std::size_t>(s)] = std::pow(10.0, -2.0 + 0.15 * s);
    return grid;
}

struct StabilityOptions {
    int splits = 5;      // B
    double cutoff = 0.9; // c
};

/// Candidate ratios recomputed on the two halves of one random split.
struct SplitRatios {
    std::uint64_t seed = 0;
    std::map<NodeId, double> first;
    std::map<NodeId, double> second;
    /// Non-empty when any ratio failed on either half; the split then scores kappa = 0.
    std::string failure;
};

struct StabilityReport {
    std::vector<double> grid;
    std::vector<double> scores;
    double chosen = 0.0;
    std::size_t chosen_index = 0;
    /// max score <= 0: argmax used instead of the cutoff rule.
    bool fallback = false;
    std::vector<std::uint64_t> split_seeds;
    std::vector<std::string> diagnostics;
};

namespace stability_detail {

inline DataMatrix take_rows(const DataMatrix& data, const std::vector<Eigen::Index>& rows)
{
    return data(rows, Eigen::all);
}

}  // namespace stability_detail

/// For b = 1..B: shuffle rows with a stream derived from (seed, b), split into halves
/// (first half gets the extra row for odd n), and compute every candidate's ratio on
/// each half against the fixed conditioning set.
inline std::vector<SplitRatios> split_ratios(const NodeSet& candidates, const NodeSet& cond_set, const DataMatrix& data,
                                             const std::vector<QvfFamily>& families, int splits, std::uint64_t seed,
                                             const RatioOptions& ratio_opt = {}, const Executor& exec = Executor{})
{
    const Eigen::Index n = data.rows();
    if (n < 4) throw InputError("stability selection needs at least four rows");
    if (splits < 1) throw InputError("stability selection needs B >= 1");
    if (candidates.empty()) throw InputError("stability selection needs candidates");

    std::vector<SplitRatios> out(static_cast<std::size_t>(splits));
    exec.parallel_for(out.size(), [&](std::size_t b) {
        auto& split = out[b];
        split.seed = derive_seed(seed, {tag(Stream::stability), b});
        Rng rng{split.seed};
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto half = static_cast<std::ptrdiff_t>((n + 1) / 2);
        const std::vector<Eigen::Index> r1(rows.begin(), rows.begin() + half), r2(rows.begin() + half, rows.end());

        RatioOptions local = ratio_opt;
        local.seed = split.seed;
        const auto s1 = ratios_for_candidates(candidates, cond_set, stability_detail::take_rows(data, r1), families, local);
        const auto s2 = ratios_for_candidates(candidates, cond_set, stability_detail::take_rows(data, r2), families, local);
        for (const auto* s : {&s1, &s2}) {
            if (!s->failures.empty()) {
                const auto& [j, f] = *s->failures.begin();
                split.failure = "split " + std::to_string(b + 1) + ": " + f.message;
                return;
            }
        }
        split.first = s1.ratios;
        split.second = s2.ratios;
    });
    return out;
}

/// Mean kappa over splits of the sets selected by assign_layer at this epsilon.
inline double stability_score(double epsilon, const NodeSet& candidates, const std::vector<SplitRatios>& splits)
{
    if (splits.empty()) throw InputError("no splits");
    double total = 0.0;
    for (const auto& s : splits) {
        if (!s.failure.empty()) continue;  // kappa = 0
        total += cohen_kappa(assign_layer(s.first, epsilon).nodes, assign_layer(s.second, epsilon).nodes, candidates);
    }
    return total / static_cast<double>(splits.size());
}

inline double stability_score(double epsilon, const NodeSet& candidates, const NodeSet& cond_set, const DataMatrix& data,
                              const std::vector<QvfFamily>& families, int splits, std::uint64_t seed,
                              const RatioOptions& ratio_opt = {})
{
    return stability_score(epsilon, candidates, split_ratios(candidates, cond_set, data, families, splits, seed, ratio_opt));
}

/// Smallest grid index whose score reaches cutoff * max (inclusive). If the max
/// score is not positive, the argmax (smallest epsilon on ties) with fallback set.
inline std::pair<std::size_t, bool> choose_epsilon_index(const std::vector<double>& scores, double cutoff)
{
    if (scores.empty()) throw InputError("empty epsilon grid");
    const auto best = std::max_element(scores.begin(), scores.end());
    const double top = *best;
    if (!(top > 0.0)) return {static_cast<std::size_t>(best - scores.begin()), true};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] / top >= cutoff - 1e-12) return {i, false};
    }
    return {static_cast<std::size_t>(best - scores.begin()), false};
}

inline StabilityReport select_epsilon(const std::vector<double>& grid, const NodeSet& candidates, const NodeSet& cond_set,
                                      const DataMatrix& data, const std::vector<QvfFamily>& families,
                                      const StabilityOptions& opt, std::uint64_t seed, const RatioOptions& ratio_opt = {},
                                      const Executor& exec = Executor{})
{
    if (grid.empty()) throw InputError("empty epsilon grid");
    if (!(opt.cutoff > 0.0 && opt.cutoff < 1.0)) throw InputError("stability cutoff c must lie in (0, 1)");
    const auto splits = split_ratios(candidates, cond_set, data, families, opt.splits, seed, ratio_opt, exec);

    StabilityReport report;
    report.grid = grid;
    report.scores.reserve(grid.size());
    for (double eps : grid) report.scores.push_back(stability_score(eps, candidates, splits));
    for (const auto& s : splits) {
        report.split_seeds.push_back(s.seed);
        if (!s.failure.empty()) report.diagnostics.push_back(s.failure);
    }
    const auto [idx, fallback] = choose_epsilon_index(report.scores, opt.cutoff);
    report.chosen_index = idx;
    report.chosen = grid[idx];
    report.fallback = fallback;
    if (fallback) report.diagnostics.push_back("no positive stability score; argmax threshold used");
    return report;
}

}  // namespace qvfdag
