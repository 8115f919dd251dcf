#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qvfdag/edges.hpp"
#include "qvfdag/layers.hpp"
#include "qvfdag/metrics.hpp"
#include "qvfdag/parallel.hpp"
#include "qvfdag/simgen.hpp"

namespace qvfdag {

/// Full two-phase learner: layers by the ratio criterion, then sparse parents per node.
struct LearnConfig {
    LayerLearnConfig layers;
    CvOptions edge_cv;
    std::uint64_t seed = 0;
};

struct LearnTiming {
    double layers_seconds = 0.0;
    double edges_seconds = 0.0;
    double total() const noexcept { return layers_seconds + edges_seconds; }
};

struct LearnOutput {
    LayerResult layers;
    EdgeResult edges;
    LearnTiming timing;
};

namespace pipeline_detail {

inline double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace pipeline_detail

inline LearnConfig default_learn_config(std::size_t p, const QvfFamily& family = QvfFamily::poisson())
{
    LearnConfig c;
    c.layers.families.assign(p, family);
    return c;
}

inline LearnOutput learn_structure(const DataMatrix& data, LearnConfig config, const Executor& exec = Executor{})
{
    config.layers.seed = config.seed;
    LearnOutput out;
    auto start = std::chrono::steady_clock::now();
    out.layers = reconstruct_layers(data, config.layers, exec);
    out.timing.layers_seconds = pipeline_detail::seconds_since(start);

    start = std::chrono::steady_clock::now();
    out.edges = recover_all(out.layers.layers, data, config.layers.families, config.edge_cv, config.seed, exec);
    out.timing.edges_seconds = pipeline_detail::seconds_since(start);
    return out;
}

// ---------------------------------------------------------------------------
// benchmark replications

struct BenchReplicate {
    std::uint64_t seed = 0;
    std::optional<Metrics> learned;
    std::optional<Metrics> dense;
    std::size_t layer_count = 0;
    double seconds = 0.0;
    std::string error;
};

struct BenchCell {
    std::string preset;
    std::size_t p = 0;
    std::size_t n = 0;
    std::vector<BenchReplicate> reps;
};

struct BenchConfig {
    std::string preset = "example1";
    std::vector<std::size_t> sizes{5};
    std::size_t n = 200;
    std::size_t reps = 50;
    std::uint64_t base_seed = 0;
    /// Overrides the preset's learner family when set.
    std::optional<QvfFamily> learner_family;
    LearnConfig learn;
    HmNormalization hm = HmNormalization::skeleton;
    /// Skip metric computation; only the learner is timed.
    bool time_only = false;
};

/// One replication: simulate with seed, learn, score against truth (and the dense
/// baseline on the learned layers). Failures are captured, never thrown.
inline BenchReplicate run_replicate(const BenchConfig& cfg, std::size_t p, std::uint64_t seed,
                                    const Executor& exec = Executor{})
{
    BenchReplicate rep;
    rep.seed = seed;
    try {
        const SimSpec spec = preset_spec(cfg.preset, p, cfg.n, seed);
        const Simulation sim = simulate(spec);
        LearnConfig lc = cfg.learn;
        lc.seed = seed;
        lc.layers.families.assign(p, cfg.learner_family.value_or(spec.learner_family));
        const auto start = std::chrono::steady_clock::now();
        const LearnOutput out = learn_structure(sim.data, lc, exec);
        rep.seconds = pipeline_detail::seconds_since(start);
        rep.layer_count = out.layers.layers.count();
        if (!cfg.time_only) {
            rep.learned = structural_metrics(out.edges.dag, sim.dag, cfg.hm);
            rep.dense = structural_metrics(dense_layer_graph(out.layers.layers), sim.dag, cfg.hm);
        }
    } catch (const std::exception& e) {
        rep.learned.reset();
        rep.dense.reset();
        rep.error = e.what();
    }
    return rep;
}

/// Replications run concurrently, each single-threaded; seeds are base_seed + index.
inline std::vector<BenchCell> run_bench(const BenchConfig& cfg, const Executor& exec = Executor{})
{
    if (cfg.reps < 1) throw InputError("bench needs at least one replication");
    if (cfg.sizes.empty()) throw InputError("bench needs at least one p");
    for (std::size_t p : cfg.sizes) (void)preset_spec(cfg.preset, p, cfg.n, 0);  // fail fast on unknown regimes

    std::vector<BenchCell> cells;
    for (std::size_t p : cfg.sizes) {
        BenchCell cell{cfg.preset, p, cfg.n, std::vector<BenchReplicate>(cfg.reps)};
        exec.parallel_for(cfg.reps, [&](std::size_t r) {
            cell.reps[r] = run_replicate(cfg, p, cfg.base_seed + r);
        });
        cells.push_back(std::move(cell));
    }
    return cells;
}

inline MetricsSummary summarize_learned(const BenchCell& cell)
{
    std::vector<std::optional<Metrics>> m;
    for (const auto& r : cell.reps) m.push_back(r.learned);
    return summarize(m);
}

inline MetricsSummary summarize_dense(const BenchCell& cell)
{
    std::vector<std::optional<Metrics>> m;
    for (const auto& r : cell.reps) m.push_back(r.dense);
    return summarize(m);
}

}  // namespace qvfdag
