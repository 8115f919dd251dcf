#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qvfdag/glm.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/parallel.hpp"
#include "qvfdag/ratio.hpp"

namespace qvfdag {

/// Sparse regression of one node on all nodes in the layers above it.
struct ParentFit {
    NodeId node = 0;
    NodeSet upper;
    NodeSet parents;
    /// Aligned with `upper`.
    std::vector<double> coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
    bool converged = true;
    std::string diagnostic;
};

struct EdgeResult {
    Dag dag;
    TopologicalLayers layers;
    /// Indexed by node id; layer-0 nodes have an empty fit.
    std::vector<ParentFit> fits;
    std::vector<std::string> diagnostics;
};

/// l1-penalized GLM of X_j on X_upper with cross-validated lambda; parents are the
/// exact nonzero coefficients at the chosen lambda.
inline ParentFit recover_parents(NodeId j, const NodeSet& upper, const DataMatrix& data, const QvfFamily& family,
                                 const CvOptions& cv, std::uint64_t seed)
{
    ParentFit out;
    out.node = j;
    out.upper = upper;
    if (upper.empty()) return out;
    if (std::find(upper.begin(), upper.end(), j) != upper.end()) {
        throw InputError("node " + std::to_string(j + 1) + " cannot be regressed on itself");
    }

    const Vector y = data.col(static_cast<Eigen::Index>(j));
    const std::vector<Eigen::Index> cols(upper.begin(), upper.end());
    const Matrix x = data(Eigen::all, cols);
    auto rng = make_rng(seed, {tag(Stream::cv_folds), j});
    const auto report = cv_select_lambda(y, x, family, cv, rng);
    const std::vector<double> grid(report.lambda_grid.begin(),
                                   report.lambda_grid.begin() + static_cast<std::ptrdiff_t>(report.chosen_index) + 1);
    const GlmFit fit = fit_path(y, x, family, grid, cv.glm).back();

    out.lambda = report.chosen_lambda;
    out.intercept = fit.predictor.intercept;
    out.coefficients = fit.predictor.coefficients;
    out.converged = fit.converged;
    if (!fit.converged) {
        out.diagnostic = "node " + std::to_string(j + 1) + ": sparse GLM did not converge; no parents reported";
        return out;
    }
    for (std::size_t k = 0; k < upper.size(); ++k) {
        if (out.coefficients[k] != 0.0) out.parents.push_back(upper[k]);
    }
    return out;
}

/// Runs recover_parents for every node below layer 0 with upper = S_t, then assembles
/// the DAG. `order` only permutes the processing sequence; the result is independent of it.
inline EdgeResult recover_all(const TopologicalLayers& layers, const DataMatrix& data,
                              const std::vector<QvfFamily>& families, const CvOptions& cv, std::uint64_t seed,
                              const Executor& exec = Executor{}, std::span<const NodeId> order = {})
{
    const std::size_t p = layers.node_count();
    if (p != static_cast<std::size_t>(data.cols())) throw InputError("layers do not partition the data columns");
    if (families.size() != p) throw InputError("family config does not cover every column");

    std::vector<NodeId> sequence(p);
    if (order.empty()) {
        std::iota(sequence.begin(), sequence.end(), NodeId{0});
    } else {
        if (order.size() != p) throw InputError("processing order must list every node once");
        sequence.assign(order.begin(), order.end());
    }

    std::vector<NodeSet> uppers(layers.count());
    for (std::size_t t = 0; t < layers.count(); ++t) uppers[t] = layers.upper(t);

    EdgeResult result;
    result.layers = layers;
    result.fits.resize(p);
    std::vector<std::string> errors(p);
    exec.parallel_for(p, [&](std::size_t i) {
        const NodeId j = sequence[i];
        const NodeSet& upper = uppers[layers.layer_index(j)];
        try {
            result.fits[j] = recover_parents(j, upper, data, families[j], cv, seed);
        } catch (const Error& e) {
            result.fits[j] = ParentFit{};
            result.fits[j].node = j;
            result.fits[j].upper = upper;
            result.fits[j].converged = false;
            errors[j] = "node " + std::to_string(j + 1) + ": " + e.what();
        }
    });

    std::vector<Edge> edges;
    for (NodeId j = 0; j < p; ++j) {
        if (!errors[j].empty()) result.diagnostics.push_back(errors[j]);
        if (!result.fits[j].diagnostic.empty()) result.diagnostics.push_back(result.fits[j].diagnostic);
        for (NodeId k : result.fits[j].parents) {
            if (layers.layer_index(k) >= layers.layer_index(j)) {
                throw StructuralError("edge " + std::to_string(k + 1) + "->" + std::to_string(j + 1) +
                                      " does not point to a lower layer");
            }
            edges.push_back({k, j});
        }
    }
    result.dag = Dag{p, std::move(edges)};
    return result;
}

/// Every upper-layer node as a parent of every node below it.
inline Dag dense_layer_graph(const TopologicalLayers& layers)
{
    std::vector<Edge> edges;
    for (std::size_t t = 1; t < layers.count(); ++t) {
        const NodeSet upper = layers.upper(t);
        for (NodeId j : layers.layer(t)) {
            for (NodeId k : upper) edges.push_back({k, j});
        }
    }
    return Dag{layers.node_count(), std::move(edges)};
}

}  // namespace qvfdag
