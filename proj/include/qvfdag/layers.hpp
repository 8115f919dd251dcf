#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qvfdag/assign_layer.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/ratio.hpp"
#include "qvfdag/stability.hpp"

namespace qvfdag {

struct LayerLearnConfig {
    /// Fixed threshold for every layer; stability selection per layer when unset.
    std::optional<double> fixed_epsilon;
    std::vector<double> epsilon_grid = default_epsilon_grid();
    StabilityOptions stability;
    /// One learner family per column.
    std::vector<QvfFamily> families;
    RatioOptions ratio;
    std::uint64_t seed = 0;

    void validate(std::size_t p) const
    {
        if (families.size() != p) {
            throw InputError("family config covers " + std::to_string(families.size()) + " nodes but data has " +
                             std::to_string(p) + " columns");
        }
        for (const auto& f : families) {
            if (f.is_mixture()) throw InputError("layer learning needs a QVF family per node, not a mixture");
        }
        if (fixed_epsilon && !(*fixed_epsilon > 0.0)) throw InputError("epsilon must be positive");
        if (!fixed_epsilon) {
            if (epsilon_grid.empty()) throw InputError("epsilon grid is empty");
            for (std::size_t i = 0; i < epsilon_grid.size(); ++i) {
                if (!(epsilon_grid[i] > 0.0) || (i > 0 && !(epsilon_grid[i] > epsilon_grid[i - 1]))) {
                    throw InputError("epsilon grid must be positive and strictly increasing");
                }
            }
            if (stability.splits < 1) throw InputError("stability B must be at least 1");
            if (!(stability.cutoff > 0.0 && stability.cutoff < 1.0)) throw InputError("stability c must lie in (0, 1)");
        }
    }
};

/// One iteration of the reconstruction loop.
struct LayerStep {
    NodeSet candidates;
    RatioStep ratios;
    /// Constant columns assigned to this layer without thresholding.
    NodeSet forced;
    NodeSet assigned;
    double epsilon = 0.0;
    bool fallback = false;
    std::optional<StabilityReport> stability;
};

struct LayerResult {
    TopologicalLayers layers;
    std::vector<LayerStep> steps;
    std::vector<std::string> diagnostics;

    std::vector<double> epsilons() const
    {
        std::vector<double> out;
        for (const auto& s : steps) out.push_back(s.epsilon);
        return out;
    }

    std::vector<bool> fallbacks() const
    {
        std::vector<bool> out;
        for (const auto& s : steps) out.push_back(s.fallback);
        return out;
    }
};

namespace layer_detail {

inline bool is_constant(const DataMatrix& data, NodeId j)
{
    const auto col = data.col(static_cast<Eigen::Index>(j));
    return (col.array() == col[0]).all();
}

[[noreturn]] inline void rethrow_at_step(std::size_t t, const RatioFailure& f)
{
    const std::string msg = "layer step " + std::to_string(t) + ": " + f.message;
    if (f.degenerate) throw DegenerateError(msg);
    throw NumericError(msg);
}

}  // namespace layer_detail

/// Top-down reconstruction of topological layers. Step t computes R(j, S_t) for all
/// unassigned nodes, picks epsilon_t (fixed or by stability selection) and takes
/// A_t = {j : |R - 1| <= epsilon_t}, falling back to the single closest node.
/// Terminates after at most p steps.
inline LayerResult reconstruct_layers(const DataMatrix& data, const LayerLearnConfig& config,
                                      const Executor& exec = Executor{})
{
    const auto p = static_cast<std::size_t>(data.cols());
    if (p == 0 || data.rows() == 0) throw InputError("data matrix is empty");
    config.validate(p);

    LayerResult result;
    if (data.rows() < 20) {
        result.diagnostics.push_back("only " + std::to_string(data.rows()) + " rows; ratio estimates will be noisy");
    }

    std::vector<bool> done(p, false);
    NodeSet cond_set;
    std::vector<NodeSet> layers;
    for (std::size_t t = 0; cond_set.size() < p; ++t) {
        LayerStep step;
        for (NodeId j = 0; j < p; ++j) {
            if (!done[j]) step.candidates.push_back(j);
        }

        // zero-variance columns have no meaningful ratio
        NodeSet scored;
        for (NodeId j : step.candidates) {
            if (layer_detail::is_constant(data, j)) {
                step.forced.push_back(j);
                result.diagnostics.push_back("node " + std::to_string(j + 1) + " has a constant column; forced into layer " +
                                             std::to_string(t));
            } else {
                scored.push_back(j);
            }
        }

        RatioOptions ropt = config.ratio;
        ropt.seed = derive_seed(config.seed, {tag(Stream::ratio_cv), t});
        step.ratios = ratios_for_candidates(scored, cond_set, data, config.families, ropt, exec);

        for (const auto& [j, failure] : step.ratios.failures) {
            if (scored.size() > 1) {
                layer_detail::rethrow_at_step(t, failure);
            } else {
                step.forced.push_back(j);
                result.diagnostics.push_back("node " + std::to_string(j + 1) + " is the last candidate; assigned despite: " +
                                             failure.message);
            }
        }

        step.epsilon = config.fixed_epsilon.value_or(config.epsilon_grid.front());
        const auto& ratios = step.ratios.ratios;
        if (scored.size() <= 1 || ratios.empty()) {
            step.assigned.assign(step.candidates.begin(), step.candidates.end());
        } else {
            if (!config.fixed_epsilon) {
                NodeSet pool;
                for (const auto& kv : ratios) pool.push_back(kv.first);
                step.stability = select_epsilon(config.epsilon_grid, pool, cond_set, data, config.families,
                                                config.stability, derive_seed(config.seed, {tag(Stream::stability), t}),
                                                ropt, exec);
                step.epsilon = step.stability->chosen;
            }
            const auto assignment = assign_layer(ratios, step.epsilon);
            step.fallback = assignment.fallback;
            step.assigned = assignment.nodes;
            step.assigned.insert(step.assigned.end(), step.forced.begin(), step.forced.end());
            std::sort(step.assigned.begin(), step.assigned.end());
        }

        for (NodeId j : step.assigned) done[j] = true;
        cond_set.insert(cond_set.end(), step.assigned.begin(), step.assigned.end());
        std::sort(cond_set.begin(), cond_set.end());
        layers.push_back(step.assigned);
        result.steps.push_back(std::move(step));
    }
    result.layers = TopologicalLayers{std::move(layers)};
    return result;
}

}  // namespace qvfdag
