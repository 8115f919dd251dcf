#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvfdag/io.hpp"
#include "qvfdag/pipeline.hpp"

namespace qvfdag::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int { ok = 0, usage = 1, data_error = 2, internal = 3 };

inline std::optional<std::uint64_t> env_seed()
{
    const char* v = std::getenv("QVF_DAG_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    std::uint64_t s = 0;
    const std::string_view text{v};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InputError("QVF_DAG_SEED must be a non-negative integer, got '" + std::string(text) + "'");
    }
    return s;
}

/// Explicit flag, then QVF_DAG_SEED, then 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag)
{
    if (flag) return *flag;
    return env_seed().value_or(0);
}

inline QvfFamily parse_family(const std::string& text)
{
    if (!text.empty() && text.front() == '{') {
        try {
            return family_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("bad family JSON: ") + e.what());
        }
    }
    if (text == "poisson") return QvfFamily::poisson();
    if (text == "exponential") return QvfFamily::exponential();
    if (text.rfind("binomial:", 0) == 0) {
        int trials = 0;
        const auto [ptr, ec] = std::from_chars(text.data() + 9, text.data() + text.size(), trials);
        if (ec != std::errc{} || ptr != text.data() + text.size()) throw InputError("bad binomial trials in '" + text + "'");
        return QvfFamily::binomial(trials);
    }
    if (text == "binomial") throw InputError("binomial family needs its trials here: binomial:N");
    throw InputError("unknown family '" + text + "'");
}

/// Learner family for one column. An empty value is a binomial whose trials
/// are taken from the column maximum.
using FamilyChoice = std::optional<QvfFamily>;

inline FamilyChoice parse_learner_family(const std::string& text)
{
    if (text == "binomial") return std::nullopt;
    return parse_family(text);
}

inline FamilyChoice learner_family_from_json(const nlohmann::json& j)
{
    if (j.is_object() && j.value("kind", std::string{}) == "binomial" && !j.contains("trials")) return std::nullopt;
    return family_from_json(j);
}

/// A JSON array with one family per column, or an object with a "families" array.
inline std::vector<FamilyChoice> read_family_file(const fs::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("cannot parse " + path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("families")) j = j["families"];
    if (!j.is_array()) throw InputError(path.string() + ": expected an array of families");
    std::vector<FamilyChoice> out;
    try {
        for (const auto& f : j) out.push_back(learner_family_from_json(f));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return out;
}

inline QvfFamily binomial_from_column(const Matrix& data, Eigen::Index column)
{
    const double top = data.rows() > 0 ? data.col(column).maxCoeff() : 1.0;
    return QvfFamily::binomial(std::max(1, static_cast<int>(std::ceil(top))));
}

inline std::vector<QvfFamily> resolve_families(const std::vector<FamilyChoice>& choices, const Matrix& data)
{
    if (choices.size() != static_cast<std::size_t>(data.cols())) {
        throw InputError("family list has " + std::to_string(choices.size()) + " entries for " +
                         std::to_string(data.cols()) + " columns");
    }
    std::vector<QvfFamily> out;
    for (std::size_t j = 0; j < choices.size(); ++j) {
        out.push_back(choices[j] ? *choices[j] : binomial_from_column(data, static_cast<Eigen::Index>(j)));
    }
    return out;
}

inline void require_output_dir(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("output directory " + dir.string() + " does not exist");
}

inline void require_input_file(const fs::path& file)
{
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) throw IoError("input file " + file.string() + " does not exist");
}

inline nlohmann::json family_list_json(const std::vector<QvfFamily>& families)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : families) out.push_back(f);
    return out;
}

inline nlohmann::json learn_config_json(const LearnConfig& c)
{
    nlohmann::json j{{"seed", c.seed},
                     {"families", family_list_json(c.layers.families)},
                     {"stability_splits", c.layers.stability.splits},
                     {"stability_cutoff", c.layers.stability.cutoff},
                     {"cv_folds", c.edge_cv.folds},
                     {"lambda_grid_size", c.edge_cv.grid_size},
                     {"lambda_min_ratio", c.edge_cv.min_ratio}};
    if (c.layers.fixed_epsilon) {
        j["epsilon_mode"] = "fixed";
        j["epsilon"] = *c.layers.fixed_epsilon;
    } else {
        j["epsilon_mode"] = "stability";
        j["epsilon_grid"] = c.layers.epsilon_grid;
    }
    return j;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string preset;  // empty for a custom spec
    SimSpec spec;        // used when preset is empty; p/n/seed always taken from here
    fs::path out_dir = ".";
};

inline nlohmann::json spec_json(const SimSpec& s)
{
    nlohmann::json j{{"preset", s.preset}, {"graph", graph_kind_name(s.graph)}, {"p", s.p},     {"n", s.n},
                     {"seed", s.seed},     {"family", s.family},                {"learner_family", s.learner_family},
                     {"ranges", ranges_to_json(s.ranges)}};
    if (s.graph == GraphKind::er) {
        j["edge_prob"] = s.edge_prob;
        j["orientation"] = "uniform random causal order";
    }
    if (s.graph == GraphKind::ba) {
        j["attach"] = s.attach;
        j["attachment_weight"] = "degree + 1";
    }
    return j;
}

inline nlohmann::json params_json(const Dag& dag, const SimParams& params)
{
    nlohmann::json out = nlohmann::json::array();
    for (NodeId j = 0; j < dag.size(); ++j) {
        nlohmann::json comps = nlohmann::json::array();
        for (std::size_t c = 0; c < params[j].intercept.size(); ++c) {
            nlohmann::json w = nlohmann::json::object();
            for (std::size_t k = 0; k < dag.parents(j).size(); ++k) w[std::to_string(dag.parents(j)[k] + 1)] = params[j].weights[c][k];
            comps.push_back({{"intercept", params[j].intercept[c]}, {"weights", w}});
        }
        out.push_back({{"node", j + 1}, {"components", comps}});
    }
    return out;
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& log = std::cerr)
{
    require_output_dir(opt.out_dir);
    SimSpec spec = opt.spec;
    if (!opt.preset.empty()) spec = preset_spec(opt.preset, opt.spec.p, opt.spec.n, opt.spec.seed);
    const Simulation sim = simulate(spec);

    const nlohmann::json meta{{"schema", kSchemaVersion},
                              {"spec", spec_json(spec)},
                              {"seed", spec.seed},
                              {"params", params_json(sim.dag, sim.params)},
                              {"truth_layers", layers_json(layers_of(sim.dag))}};
    write_text(opt.out_dir / "data.csv", format_data_csv(sim.data));
    write_text(opt.out_dir / "truth.csv", format_edge_csv(sim.dag));
    write_json(opt.out_dir / "meta.json", meta);
    log << "wrote " << sim.data.rows() << "x" << sim.data.cols() << " data and " << sim.dag.edge_count()
        << " true edges to " << opt.out_dir.string() << "\n";
    return ok;
}

// ---------------------------------------------------------------------------
// learn

struct LearnOptions {
    fs::path data;
    fs::path out_dir = ".";
    /// Applied to every column unless a family file is given.
    FamilyChoice family = QvfFamily::poisson();
    std::optional<fs::path> family_file;
    LearnConfig config;
    std::size_t threads = 1;
    bool emit_ratios = false;
};

inline int cmd_learn(LearnOptions opt, std::ostream& log = std::cerr)
{
    require_input_file(opt.data);
    require_output_dir(opt.out_dir);
    const CsvData csv = read_data_csv(opt.data);
    const auto p = static_cast<std::size_t>(csv.data.cols());
    const auto choices = opt.family_file ? read_family_file(*opt.family_file) : std::vector<FamilyChoice>(p, opt.family);
    opt.config.layers.families = resolve_families(choices, csv.data);

    const Executor exec{opt.threads};
    const LearnOutput out = learn_structure(csv.data, opt.config, exec);

    nlohmann::json diag = layer_result_json(out.layers, opt.emit_ratios);
    diag["schema"] = kSchemaVersion;
    diag["config"] = learn_config_json(opt.config);
    diag["input"] = {{"rows", csv.data.rows()}, {"columns", p}, {"header", csv.header}};
    diag["edge_diagnostics"] = out.edges.diagnostics;

    const nlohmann::json layers{{"schema", kSchemaVersion}, {"seed", opt.config.seed}, {"layers", layers_json(out.layers.layers)}};
    nlohmann::json coef = coefficients_json(out.edges);
    coef["seed"] = opt.config.seed;
    const nlohmann::json timing{{"schema", kSchemaVersion},
                                {"threads", exec.threads()},
                                {"layers_seconds", out.timing.layers_seconds},
                                {"edges_seconds", out.timing.edges_seconds},
                                {"total_seconds", out.timing.total()}};

    write_json(opt.out_dir / "layers.json", layers);
    write_text(opt.out_dir / "edges.csv", format_edge_csv(out.edges.dag));
    write_json(opt.out_dir / "coefficients.json", coef);
    write_json(opt.out_dir / "diagnostics.json", diag);
    write_json(opt.out_dir / "timing.json", timing);
    log << "learned " << out.layers.layers.count() << " layers and " << out.edges.dag.edge_count() << " edges in "
        << out.timing.total() << " s\n";
    return ok;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    fs::path estimated;
    fs::path truth;
    std::optional<std::size_t> p;
    std::optional<fs::path> out;
    HmNormalization hm = HmNormalization::skeleton;
};

inline int cmd_eval(const EvalOptions& opt, std::ostream& out = std::cout)
{
    require_input_file(opt.estimated);
    require_input_file(opt.truth);
    if (opt.out) require_output_dir(opt.out->parent_path().empty() ? fs::path{"."} : opt.out->parent_path());
    const EdgeList est = read_edge_csv(opt.estimated);
    const EdgeList truth = read_edge_csv(opt.truth);
    const std::size_t p = opt.p.value_or(std::max(est.max_id, truth.max_id));
    const Metrics m = structural_metrics(edge_list_to_dag(est, p), edge_list_to_dag(truth, p), opt.hm);

    nlohmann::json j = metrics_json(m);
    j["schema"] = kSchemaVersion;
    j["p"] = p;
    j["hm_divisor"] = opt.hm == HmNormalization::skeleton ? "p(p-1)/2" : "p(p-1)";
    if (opt.out) write_json(*opt.out, j);
    out << j.dump(2) << "\n";
    return ok;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
    BenchConfig bench;
    fs::path out_dir = ".";
    std::size_t threads = 1;
};

namespace bench_detail {

inline std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string mean_se(const Summary& s)
{
    if (s.count == 0) return "NA";
    return fixed(s.mean) + "(" + (s.se ? fixed(*s.se) : std::string("NA")) + ")";
}

inline std::string metric_or_na(const std::optional<Metrics>& m, double Metrics::*field)
{
    return m ? format_number((*m).*field) : std::string("NA");
}

inline std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' ? ' ' : c);
    }
    return out + "\"";
}

}  // namespace bench_detail

/// Aggregated mean(se) rows for the learner and the dense layer baseline.
inline std::string format_bench_csv(const std::vector<BenchCell>& cells)
{
    using bench_detail::mean_se;
    std::string out = "preset,p,n,method,reps,failures,hm,recall,precision,f1\n";
    for (const auto& c : cells) {
        const MetricsSummary rows[2] = {summarize_learned(c), summarize_dense(c)};
        const char* names[2] = {"TLDAG", "dense_layers"};
        for (int k = 0; k < 2; ++k) {
            const auto& s = rows[k];
            out += c.preset + "," + std::to_string(c.p) + "," + std::to_string(c.n) + "," + names[k] + "," +
                   std::to_string(c.reps.size()) + "," + std::to_string(s.failures) + "," + mean_se(s.hm) + "," +
                   mean_se(s.recall) + "," + mean_se(s.precision) + "," + mean_se(s.f1) + "\n";
        }
    }
    return out;
}

/// One line per replication and method; failed replications carry NA metrics and the error.
inline std::string format_bench_reps_csv(const std::vector<BenchCell>& cells)
{
    using bench_detail::metric_or_na;
    std::string out = "preset,p,n,rep,seed,method,layers,hm,recall,precision,f1,error\n";
    for (const auto& c : cells) {
        for (std::size_t r = 0; r < c.reps.size(); ++r) {
            const auto& rep = c.reps[r];
            const std::pair<const char*, const std::optional<Metrics>*> rows[2] = {{"TLDAG", &rep.learned},
                                                                                   {"dense_layers", &rep.dense}};
            for (const auto& [name, m] : rows) {
                out += c.preset + "," + std::to_string(c.p) + "," + std::to_string(c.n) + "," + std::to_string(r) + "," +
                       std::to_string(rep.seed) + "," + name + "," +
                       (rep.error.empty() ? std::to_string(rep.layer_count) : std::string("NA")) + "," +
                       metric_or_na(*m, &Metrics::hm) + "," + metric_or_na(*m, &Metrics::recall) + "," +
                       metric_or_na(*m, &Metrics::precision) + "," + metric_or_na(*m, &Metrics::f1) + "," +
                       bench_detail::csv_quote(rep.error) + "\n";
            }
        }
    }
    return out;
}

inline std::string format_timing_csv(const std::vector<BenchCell>& cells)
{
    std::string out = "preset,p,n,reps,mean_seconds,se_seconds\n";
    for (const auto& c : cells) {
        std::vector<double> t;
        for (const auto& r : c.reps) {
            if (r.error.empty()) t.push_back(r.seconds);
        }
        const Summary s = summarize(t);
        out += c.preset + "," + std::to_string(c.p) + "," + std::to_string(c.n) + "," + std::to_string(t.size()) + "," +
               (s.count ? bench_detail::fixed(s.mean, 6) : "NA") + "," +
               (s.se ? bench_detail::fixed(*s.se, 6) : std::string("NA")) + "\n";
    }
    return out;
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& log = std::cerr)
{
    require_output_dir(opt.out_dir);
    const auto& b = opt.bench;
    const Executor exec{opt.threads};
    const auto cells = run_bench(b, exec);

    nlohmann::json meta{{"schema", kSchemaVersion},
                        {"preset", b.preset},
                        {"sizes", b.sizes},
                        {"n", b.n},
                        {"reps", b.reps},
                        {"base_seed", b.base_seed},
                        {"seed_rule", "base_seed + replication index"},
                        {"time_only", b.time_only},
                        {"hm_divisor", b.hm == HmNormalization::skeleton ? "p(p-1)/2" : "p(p-1)"},
                        {"learn", learn_config_json(b.learn)}};
    meta["learn"].erase("families");
    meta["learn"].erase("seed");
    if (b.learner_family) meta["learner_family"] = *b.learner_family;

    std::size_t failures = 0;
    for (const auto& c : cells) {
        for (const auto& r : c.reps) failures += r.error.empty() ? 0 : 1;
    }
    if (!b.time_only) {
        write_text(opt.out_dir / "bench.csv", format_bench_csv(cells));
        write_text(opt.out_dir / "bench_reps.csv", format_bench_reps_csv(cells));
    }
    write_text(opt.out_dir / "timing.csv", format_timing_csv(cells));
    write_json(opt.out_dir / "meta.json", meta);
    log << "ran " << cells.size() << " cell(s) x " << b.reps << " replications";
    if (failures) log << ", " << failures << " failed (NA rows)";
    log << "\n";
    return ok;
}

}  // namespace qvfdag::cli
