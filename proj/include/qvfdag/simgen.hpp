#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvfdag/families.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/ratio.hpp"
#include "qvfdag/rng.hpp"

namespace qvfdag {

enum class GraphKind { hub, er, ba, custom };

inline std::string graph_kind_name(GraphKind k)
{
    switch (k) {
    case GraphKind::hub: return "hub";
    case GraphKind::er: return "er";
    case GraphKind::ba: return "ba";
    case GraphKind::custom: return "custom";
    }
    return "unknown";
}

inline GraphKind parse_graph_kind(std::string_view s)
{
    if (s == "hub") return GraphKind::hub;
    if (s == "er") return GraphKind::er;
    if (s == "ba") return GraphKind::ba;
    if (s == "custom") return GraphKind::custom;
    throw InputError("unknown graph kind '" + std::string(s) + "'");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const Range&, const Range&) = default;
};

/// Uniform ranges for the intercept theta_j and the edge weights theta_jk of one family component.
struct ParamRanges {
    Range node;
    Range edge;

    friend bool operator==(const ParamRanges&, const ParamRanges&) = default;
};

struct SimSpec {
    GraphKind graph = GraphKind::hub;
    std::size_t p = 5;
    double edge_prob = 0.35;   // er
    std::size_t attach = 2;    // ba
    /// Data-generating family shared by every node.
    QvfFamily family = QvfFamily::poisson();
    /// One entry per family component (two for a mixture).
    std::vector<ParamRanges> ranges{{{1.0, 3.0}, {0.1, 0.5}}};
    /// Family the learner assumes for every column of the generated data.
    QvfFamily learner_family = QvfFamily::poisson();
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::optional<Dag> custom;
    std::string preset;

    void validate() const
    {
        if (p < 1) throw InputError("p must be at least 1");
        if (graph == GraphKind::hub && p < 2) throw InputError("a hub graph needs p >= 2");
        if (graph == GraphKind::er && !(edge_prob >= 0.0 && edge_prob <= 1.0)) throw InputError("P_E must lie in [0, 1]");
        if (graph == GraphKind::ba && (attach < 1 || attach >= p)) throw InputError("BA model needs p > e >= 1");
        if (graph == GraphKind::custom && (!custom || custom->size() != p)) throw InputError("custom graph missing or wrong size");
        const std::size_t comps = family.is_mixture() ? 2 : 1;
        if (ranges.size() != comps) throw InputError("need one parameter range per family component");
        for (const auto& r : ranges) {
            if (!(r.node.lo <= r.node.hi) || !(r.edge.lo <= r.edge.hi)) throw InputError("parameter range has lower > upper");
        }
        if (n < 1) throw InputError("n must be positive");
    }
};

// ---------------------------------------------------------------------------
// graph generators

/// Node 0 points to every other node.
inline Dag gen_hub(std::size_t p)
{
    if (p < 2) throw InputError("a hub graph needs p >= 2");
    std::vector<Edge> edges;
    for (NodeId j = 1; j < p; ++j) edges.push_back({0, j});
    return Dag{p, std::move(edges)};
}

/// Erdos-Renyi DAG: uniform random causal order, each order-respecting pair kept with probability pe.
template <class Urbg>
Dag gen_er(std::size_t p, double pe, Urbg& rng)
{
    if (p < 1) throw InputError("p must be positive");
    if (!(pe >= 0.0 && pe <= 1.0)) throw InputError("P_E must lie in [0, 1]");
    std::vector<NodeId> order(p);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution keep{pe};
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a + 1; b < p; ++b) {
            if (keep(rng)) edges.push_back({order[a], order[b]});
        }
    }
    return Dag{p, std::move(edges)};
}

/// Barabasi-Albert preferential attachment. Node i >= 1 attaches to min(e, i) distinct
/// earlier nodes drawn with probability proportional to (attachments received + 1);
/// edges point old -> new.
template <class Urbg>
Dag gen_ba(std::size_t p, std::size_t e, Urbg& rng)
{
    if (e < 1 || p <= e) throw InputError("BA model needs p > e >= 1");
    std::vector<double> received(p, 0.0);
    std::vector<Edge> edges;
    for (NodeId i = 1; i < p; ++i) {
        std::vector<double> weight(received.begin(), received.begin() + static_cast<std::ptrdiff_t>(i));
        for (auto& w : weight) w += 1.0;
        const std::size_t m = std::min<std::size_t>(e, i);
        NodeSet targets;
        for (std::size_t draw = 0; draw < m; ++draw) {
            std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
            const std::size_t k = pick(rng);
            targets.push_back(k);
            weight[k] = 0.0;
        }
        for (NodeId k : targets) {
            edges.push_back({k, i});
            received[k] += 1.0;
        }
    }
    return Dag{p, std::move(edges)};
}

// ---------------------------------------------------------------------------
// parameters and data

/// Parameters of one node, per family component; weights align with dag.parents(j).
struct NodeParams {
    std::vector<double> intercept;
    std::vector<std::vector<double>> weights;
};

using SimParams = std::vector<NodeParams>;

namespace sim_detail {

template <class Urbg>
double uniform(const Range& r, Urbg& rng)
{
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>{r.lo, r.hi}(rng);
}

}  // namespace sim_detail

template <class Urbg>
SimParams draw_params(const Dag& dag, const std::vector<ParamRanges>& ranges, Urbg& rng)
{
    if (ranges.empty()) throw InputError("missing parameter ranges");
    SimParams params(dag.size());
    for (NodeId j = 0; j < dag.size(); ++j) {
        auto& np = params[j];
        for (const auto& r : ranges) {
            np.intercept.push_back(sim_detail::uniform(r.node, rng));
            std::vector<double> w;
            for (std::size_t k = 0; k < dag.parents(j).size(); ++k) w.push_back(sim_detail::uniform(r.edge, rng));
            np.weights.push_back(std::move(w));
        }
    }
    return params;
}

/// Ancestral sampling: rows are independent; within a row nodes are drawn in topological
/// order with eta = theta_j + sum_k theta_jk x_k. Mixture nodes toss a fair coin per
/// observation and use that component's parameters.
template <class Urbg>
DataMatrix sample_data(const Dag& dag, const SimParams& params, const std::vector<QvfFamily>& families, std::size_t n,
                       Urbg& rng)
{
    const std::size_t p = dag.size();
    if (params.size() != p || families.size() != p) throw InputError("parameters or families do not cover every node");
    DataMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::bernoulli_distribution coin{0.5};
    const auto& order = dag.topological_order();
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (NodeId j : order) {
            const auto& f = families[j];
            const std::size_t c = f.is_mixture() ? (coin(rng) ? 1 : 0) : 0;
            const auto& np = params[j];
            if (c >= np.intercept.size()) throw InputError("missing mixture component parameters");
            double eta = np.intercept[c];
            const auto& pa = dag.parents(j);
            for (std::size_t k = 0; k < pa.size(); ++k) eta += np.weights[c][k] * data(row, static_cast<Eigen::Index>(pa[k]));
            data(row, static_cast<Eigen::Index>(j)) = sample(f.is_mixture() ? f.components()[c] : f, eta, rng);
        }
    }
    return data;
}

struct Simulation {
    SimSpec spec;
    Dag dag;
    SimParams params;
    DataMatrix data;
};

inline Dag generate_graph(const SimSpec& spec)
{
    auto rng = make_rng(spec.seed, {tag(Stream::graph)});
    switch (spec.graph) {
    case GraphKind::hub: return gen_hub(spec.p);
    case GraphKind::er: return gen_er(spec.p, spec.edge_prob, rng);
    case GraphKind::ba: return gen_ba(spec.p, spec.attach, rng);
    case GraphKind::custom: return *spec.custom;
    }
    throw InputError("unknown graph kind");
}

inline Simulation simulate(const SimSpec& spec)
{
    spec.validate();
    Simulation sim{spec, generate_graph(spec), {}, {}};
    auto prng = make_rng(spec.seed, {tag(Stream::params)});
    sim.params = draw_params(sim.dag, spec.ranges, prng);
    auto drng = make_rng(spec.seed, {tag(Stream::data)});
    sim.data = sample_data(sim.dag, sim.params, std::vector<QvfFamily>(spec.p, spec.family), spec.n, drng);
    return sim;
}

// ---------------------------------------------------------------------------
// presets for the benchmark examples

struct PresetEntry {
    std::string name;
    GraphKind graph;
    /// 0 when the entry applies to every p.
    std::size_t p;
    double edge_prob = 0.0;
    std::size_t attach = 0;
    std::vector<ParamRanges> ranges;  // poisson component first
};

/// Parameter regimes of the four benchmark examples plus the four-node layer toy
/// (1 -> 2 -> 3, node 4 isolated).
inline const std::vector<PresetEntry>& preset_table()
{
    static const std::vector<PresetEntry> table = [] {
        std::vector<PresetEntry> t;
        t.push_back({"example1", GraphKind::hub, 0, 0.0, 0, {{{1.0, 3.0}, {0.1, 0.5}}}});

        t.push_back({"example2", GraphKind::hub, 5, 0.0, 0, {{{1.0, 3.0}, {0.1, 0.3}}, {{0.1, 0.2}, {0.1, 0.2}}}});
        t.push_back({"example2", GraphKind::hub, 20, 0.0, 0, {{{1.0, 3.0}, {0.1, 0.2}}, {{0.1, 0.2}, {0.1, 0.2}}}});
        t.push_back({"example2", GraphKind::hub, 100, 0.0, 0, {{{1.0, 3.0}, {0.05, 0.2}}, {{0.05, 0.2}, {0.05, 0.2}}}});

        t.push_back({"example3", GraphKind::er, 5, 0.35, 0, {{{1.0, 3.0}, {0.01, 0.05}}, {{0.01, 0.05}, {0.01, 0.05}}}});
        t.push_back({"example3", GraphKind::er, 20, 0.35, 0, {{{1.0, 3.0}, {0.005, 0.015}}, {{0.005, 0.015}, {0.005, 0.015}}}});
        t.push_back({"example3", GraphKind::er, 100, 0.1, 0, {{{1.0, 3.0}, {0.001, 0.01}}, {{0.005, 0.01}, {0.005, 0.01}}}});

        t.push_back({"example4", GraphKind::ba, 5, 0.0, 2, {{{1.0, 3.0}, {0.01, 0.03}}, {{0.01, 0.05}, {0.01, 0.05}}}});
        t.push_back({"example4", GraphKind::ba, 20, 0.0, 2, {{{1.0, 3.0}, {0.005, 0.02}}, {{0.005, 0.02}, {0.005, 0.02}}}});
        t.push_back({"example4", GraphKind::ba, 100, 0.0, 2, {{{1.0, 3.0}, {0.001, 0.01}}, {{0.001, 0.01}, {0.001, 0.01}}}});

        t.push_back({"toy", GraphKind::custom, 4, 0.0, 0, {{{1.0, 2.0}, {0.1, 0.15}}}});
        return t;
    }();
    return table;
}

inline Dag toy_layer_graph() { return Dag{4, {{0, 1}, {1, 2}}}; }

/// Builds the SimSpec of a named preset at the requested size.
inline SimSpec preset_spec(std::string_view name, std::size_t p, std::size_t n, std::uint64_t seed)
{
    const auto& table = preset_table();
    const PresetEntry* hit = nullptr;
    bool known = false;
    for (const auto& e : table) {
        if (e.name != name) continue;
        known = true;
        if (e.p == 0 || e.p == p) {
            hit = &e;
            break;
        }
    }
    if (!known) throw InputError("unknown preset '" + std::string(name) + "'");
    if (hit == nullptr) {
        throw InputError("preset '" + std::string(name) + "' has no parameter ranges for p = " + std::to_string(p));
    }

    SimSpec spec;
    spec.preset = std::string(name);
    spec.graph = hit->graph;
    spec.p = p;
    spec.n = n;
    spec.seed = seed;
    spec.edge_prob = hit->edge_prob;
    spec.attach = hit->attach;
    spec.ranges = hit->ranges;
    spec.learner_family = QvfFamily::poisson();
    if (hit->ranges.size() == 2) {
        spec.family = QvfFamily::mixture(QvfFamily::poisson(), QvfFamily::binomial(4));
    } else {
        spec.family = QvfFamily::poisson();
    }
    if (hit->graph == GraphKind::custom) spec.custom = toy_layer_graph();
    return spec;
}

inline nlohmann::json ranges_to_json(const std::vector<ParamRanges>& ranges)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : ranges) {
        out.push_back({{"node", {r.node.lo, r.node.hi}}, {"edge", {r.edge.lo, r.edge.hi}}});
    }
    return out;
}

inline nlohmann::json preset_table_json()
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : preset_table()) {
        nlohmann::json j{{"name", e.name}, {"graph", graph_kind_name(e.graph)}, {"p", e.p}, {"ranges", ranges_to_json(e.ranges)}};
        if (e.graph == GraphKind::er) j["edge_prob"] = e.edge_prob;
        if (e.graph == GraphKind::ba) j["attach"] = e.attach;
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace qvfdag
