#pragma once

#include <cmath>
#include <map>

#include "qvfdag/error.hpp"
#include "qvfdag/graph.hpp"

namespace qvfdag {

struct LayerAssignment {
    NodeSet nodes;
    /// No ratio fell inside the band; the single node closest to 1 was taken instead.
    bool fallback = false;
};

/// {j : |R(j) - 1| <= epsilon}; when that set is empty, the node minimizing
/// |R(j) - 1| (smallest id on ties) with the fallback flag set.
inline LayerAssignment assign_layer(const std::map<NodeId, double>& ratios, double epsilon)
{
    if (ratios.empty()) throw InputError("assign_layer needs at least one ratio");
    LayerAssignment out;
    NodeId best = ratios.begin()->first;
    double best_gap = std::abs(ratios.begin()->second - 1.0);
    for (const auto& [j, r] : ratios) {
        const double gap = std::abs(r - 1.0);
        if (gap <= epsilon) out.nodes.push_back(j);
        if (gap < best_gap) {
            best_gap = gap;
            best = j;
        }
    }
    if (out.nodes.empty()) {
        out.nodes = {best};
        out.fallback = true;
    }
    return out;
}

}  // namespace qvfdag
