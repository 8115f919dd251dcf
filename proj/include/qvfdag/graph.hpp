#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qvfdag/error.hpp"

namespace qvfdag {

/// Node ids are 0-based and contiguous internally; files and reports use 1-based ids.
using NodeId = std::size_t;
using NodeSet = std::vector<NodeId>;  // always kept sorted, no duplicates

struct Edge {
    NodeId source;
    NodeId target;

    auto operator<=>(const Edge&) const = default;
};

namespace detail {

struct Adjacency {
    std::vector<NodeSet> parents;
    std::vector<NodeSet> children;
};

inline Adjacency build_adjacency(std::size_t p, std::span<const Edge> edges)
{
    Adjacency adj{std::vector<NodeSet>(p), std::vector<NodeSet>(p)};
    for (const auto& e : edges) {
        adj.parents[e.target].push_back(e.source);
        adj.children[e.source].push_back(e.target);
    }
    for (auto& v : adj.parents) std::sort(v.begin(), v.end());
    for (auto& v : adj.children) std::sort(v.begin(), v.end());
    return adj;
}

/// Kahn's algorithm; returns a topological order, shorter than p iff a cycle exists.
/// Ties are broken by smallest node id so the order is deterministic.
inline std::vector<NodeId> kahn_order(const Adjacency& adj)
{
    const std::size_t p = adj.parents.size();
    std::vector<std::size_t> indeg(p);
    std::vector<NodeId> heap;
    for (NodeId j = 0; j < p; ++j) {
        indeg[j] = adj.parents[j].size();
        if (indeg[j] == 0) heap.push_back(j);
    }
    auto cmp = std::greater<>{};
    std::make_heap(heap.begin(), heap.end(), cmp);
    std::vector<NodeId> order;
    order.reserve(p);
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        const NodeId j = heap.back();
        heap.pop_back();
        order.push_back(j);
        for (NodeId c : adj.children[j]) {
            if (--indeg[c] == 0) {
                heap.push_back(c);
                std::push_heap(heap.begin(), heap.end(), cmp);
            }
        }
    }
    return order;
}

/// Iterative DFS returning an edge that closes a directed cycle. Only called
/// when a cycle is known to exist.
inline Edge find_back_edge(const Adjacency& adj)
{
    const std::size_t p = adj.children.size();
    enum class Color : unsigned char { white, grey, black };
    std::vector<Color> color(p, Color::white);
    for (NodeId root = 0; root < p; ++root) {
        if (color[root] != Color::white) continue;
        std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
        color[root] = Color::grey;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < adj.children[node].size()) {
                const NodeId c = adj.children[node][next++];
                if (color[c] == Color::grey) return {node, c};
                if (color[c] == Color::white) {
                    color[c] = Color::grey;
                    stack.emplace_back(c, 0);
                }
            } else {
                color[node] = Color::black;
                stack.pop_back();
            }
        }
    }
    return {0, 0};
}

}  // namespace detail

/// True iff the directed graph on p nodes has no directed cycle.
/// Self loops count as cycles; out-of-range ids make the graph invalid.
inline bool is_acyclic(std::span<const Edge> edges, std::size_t p)
{
    for (const auto& e : edges) {
        if (e.source >= p || e.target >= p || e.source == e.target) return false;
    }
    return detail::kahn_order(detail::build_adjacency(p, edges)).size() == p;
}

/// Immutable directed acyclic graph. Construction validates every invariant,
/// so any Dag value in the program is acyclic, loop free and duplicate free.
class Dag {
public:
    Dag() = default;

    explicit Dag(std::size_t p, std::vector<Edge> edges = {}) : p_{p}, edges_{std::move(edges)}
    {
        std::sort(edges_.begin(), edges_.end());
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const auto& e = edges_[i];
            if (e.source >= p_ || e.target >= p_) {
                throw StructuralError("edge " + std::to_string(e.source + 1) + "->" + std::to_string(e.target + 1) +
                                      " references a node outside 1.." + std::to_string(p_));
            }
            if (e.source == e.target) {
                throw StructuralError("self loop on node " + std::to_string(e.source + 1));
            }
            if (i > 0 && edges_[i - 1] == e) {
                throw StructuralError("duplicate edge " + std::to_string(e.source + 1) + "->" +
                                      std::to_string(e.target + 1));
            }
        }
        adj_ = detail::build_adjacency(p_, edges_);
        order_ = detail::kahn_order(adj_);
        if (order_.size() != p_) {
            const Edge back = detail::find_back_edge(adj_);
            throw StructuralError("directed cycle detected through back edge " + std::to_string(back.source + 1) +
                                  "->" + std::to_string(back.target + 1));
        }
    }

    std::size_t size() const noexcept { return p_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const NodeSet& parents(NodeId j) const { return adj_.parents.at(j); }
    const NodeSet& children(NodeId j) const { return adj_.children.at(j); }
    /// Deterministic topological order (smallest available id first).
    const std::vector<NodeId>& topological_order() const noexcept { return order_; }

    bool has_edge(NodeId source, NodeId target) const
    {
        return std::binary_search(edges_.begin(), edges_.end(), Edge{source, target});
    }

    friend bool operator==(const Dag& a, const Dag& b) { return a.p_ == b.p_ && a.edges_ == b.edges_; }

private:
    std::size_t p_ = 0;
    std::vector<Edge> edges_;
    detail::Adjacency adj_;
    std::vector<NodeId> order_;
};

inline const NodeSet& parents(const Dag& dag, NodeId j) { return dag.parents(j); }

/// Ordered partition A_0, ..., A_{T-1} of the node set.
class TopologicalLayers {
public:
    TopologicalLayers() = default;

    explicit TopologicalLayers(std::vector<NodeSet> layers) : layers_{std::move(layers)}
    {
        std::size_t p = 0;
        for (auto& l : layers_) {
            std::sort(l.begin(), l.end());
            p += l.size();
        }
        index_.assign(p, p);
        for (std::size_t t = 0; t < layers_.size(); ++t) {
            if (layers_[t].empty()) throw StructuralError("layer " + std::to_string(t) + " is empty");
            for (NodeId j : layers_[t]) {
                if (j >= p) throw StructuralError("layers do not cover a contiguous node range");
                if (index_[j] != p) throw StructuralError("node " + std::to_string(j + 1) + " appears in two layers");
                index_[j] = t;
            }
        }
    }

    std::size_t count() const noexcept { return layers_.size(); }
    std::size_t node_count() const noexcept { return index_.size(); }
    const std::vector<NodeSet>& layers() const noexcept { return layers_; }
    const NodeSet& layer(std::size_t t) const { return layers_.at(t); }
    std::size_t layer_index(NodeId j) const { return index_.at(j); }

    /// S_t: union of the layers strictly above layer t.
    NodeSet upper(std::size_t t) const
    {
        NodeSet s;
        for (std::size_t d = 0; d < t && d < layers_.size(); ++d) s.insert(s.end(), layers_[d].begin(), layers_[d].end());
        std::sort(s.begin(), s.end());
        return s;
    }

    friend bool operator==(const TopologicalLayers& a, const TopologicalLayers& b) { return a.layers_ == b.layers_; }

private:
    std::vector<NodeSet> layers_;
    std::vector<std::size_t> index_;
};

/// Layer of each node = length of the longest directed path reaching it from a root.
/// Roots and isolated nodes form layer 0. Linear in p + |E|.
inline TopologicalLayers layers_of(const Dag& dag)
{
    const std::size_t p = dag.size();
    if (p == 0) return {};
    std::vector<std::size_t> depth(p, 0);
    std::size_t deepest = 0;
    for (NodeId j : dag.topological_order()) {
        for (NodeId k : dag.parents(j)) depth[j] = std::max(depth[j], depth[k] + 1);
        deepest = std::max(deepest, depth[j]);
    }
    std::vector<NodeSet> layers(deepest + 1);
    for (NodeId j = 0; j < p; ++j) layers[depth[j]].push_back(j);
    return TopologicalLayers{std::move(layers)};
}

/// Overload for raw edge lists; throws StructuralError naming a back edge on cycles.
inline TopologicalLayers layers_of(std::size_t p, std::vector<Edge> edges) { return layers_of(Dag{p, std::move(edges)}); }

/// Applies a node relabelling old -> perm[old].
inline Dag relabel(const Dag& dag, std::span<const NodeId> perm)
{
    std::vector<Edge> edges;
    edges.reserve(dag.edge_count());
    for (const auto& e : dag.edges()) edges.push_back({perm[e.source], perm[e.target]});
    return Dag{dag.size(), std::move(edges)};
}

}  // namespace qvfdag
