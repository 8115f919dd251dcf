// qvfdag: simulate, learn, eval and bench subcommands.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qvfdag/cli.hpp"

namespace {

using namespace qvfdag;
namespace cli = qvfdag::cli;

struct Flags {
    std::optional<std::uint64_t> seed;
    std::size_t threads = Executor::hardware_threads();
};

struct LearnFlags {
    std::optional<double> epsilon;
    int splits = 5;
    double cutoff = 0.9;
    int folds = 5;
    int grid_size = 50;
    double min_ratio = 0.01;
};

void add_learn_flags(CLI::App& cmd, LearnFlags& f)
{
    cmd.add_option("--epsilon", f.epsilon, "fixed ratio threshold (skips stability selection)")->check(CLI::PositiveNumber);
    cmd.add_option("--splits", f.splits, "stability selection half-splits B")->check(CLI::PositiveNumber);
    cmd.add_option("--cutoff", f.cutoff, "stability cutoff c in (0,1)");
    cmd.add_option("--folds", f.folds, "cross-validation folds for the sparse GLM")->check(CLI::Range(2, 1000));
    cmd.add_option("--lambda-grid", f.grid_size, "number of lambda values")->check(CLI::PositiveNumber);
    cmd.add_option("--lambda-min-ratio", f.min_ratio, "smallest lambda as a fraction of lambda_max");
}

LearnConfig make_learn_config(const LearnFlags& f, std::uint64_t seed)
{
    LearnConfig c;
    c.seed = seed;
    c.layers.fixed_epsilon = f.epsilon;
    c.layers.stability.splits = f.splits;
    c.layers.stability.cutoff = f.cutoff;
    c.edge_cv.folds = f.folds;
    c.edge_cv.grid_size = f.grid_size;
    c.edge_cv.min_ratio = f.min_ratio;
    c.layers.ratio.cv = c.edge_cv;
    return c;
}

std::vector<double> parse_range(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw InputError("range must be written lo,hi");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw InputError("range must be written lo,hi, got '" + text + "'");
    }
}

HmNormalization parse_hm(const std::string& s)
{
    if (s == "skeleton") return HmNormalization::skeleton;
    if (s == "ordered") return HmNormalization::ordered;
    throw InputError("--hm must be 'skeleton' or 'ordered'");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Structure learning for QVF directed acyclic graph models"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--seed", flags.seed, "master seed (falls back to QVF_DAG_SEED, then 0)");
    app.add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a graph and data");
    cli::SimulateOptions sopt;
    std::string graph = "hub", family = "poisson", node_range = "1,3", edge_range = "0.1,0.5";
    std::string sim_out = ".";
    sim->add_option("--preset", sopt.preset, "example1..example4 or toy");
    sim->add_option("--p", sopt.spec.p, "node count")->required();
    sim->add_option("--n", sopt.spec.n, "sample count")->required();
    sim->add_option("--graph", graph, "hub, er or ba (custom specs only)");
    sim->add_option("--edge-prob", sopt.spec.edge_prob, "ER edge probability");
    sim->add_option("--attach", sopt.spec.attach, "BA edges per new node");
    sim->add_option("--family", family, "poisson, binomial:N, exponential or family JSON");
    sim->add_option("--node-range", node_range, "intercept range lo,hi");
    sim->add_option("--edge-range", edge_range, "edge weight range lo,hi");
    sim->add_option("--out", sim_out, "existing output directory");

    // learn
    auto* learn = app.add_subcommand("learn", "learn layers and edges from a data CSV");
    cli::LearnOptions lopt;
    LearnFlags lflags;
    std::string learn_family = "poisson", family_file, learn_out = ".";
    learn->add_option("--data", lopt.data, "data CSV")->required();
    learn->add_option("--out", learn_out, "existing output directory");
    learn->add_option("--family", learn_family, "family for every column; plain binomial takes N from each column maximum");
    learn->add_option("--families", family_file, "JSON file with one family per column");
    learn->add_flag("--emit-ratios", lopt.emit_ratios, "include ratio tables in diagnostics.json");
    add_learn_flags(*learn, lflags);

    // eval
    auto* eval = app.add_subcommand("eval", "score an estimated edge list against the truth");
    cli::EvalOptions eopt;
    std::string eval_out, eval_hm = "skeleton";
    std::size_t eval_p = 0;
    eval->add_option("estimated", eopt.estimated, "estimated edge CSV")->required();
    eval->add_option("truth", eopt.truth, "true edge CSV")->required();
    eval->add_option("--p", eval_p, "node count (default: largest id seen)");
    eval->add_option("--out", eval_out, "metrics JSON path");
    eval->add_option("--hm", eval_hm, "Hamming divisor: skeleton = p(p-1)/2, ordered = p(p-1)");

    // bench
    auto* bench = app.add_subcommand("bench", "seeded replications of a preset");
    cli::BenchOptions bopt;
    LearnFlags bflags;
    std::vector<std::size_t> sizes;
    std::string bench_out = ".", bench_hm = "skeleton", bench_family;
    bench->add_option("--preset", bopt.bench.preset, "example1..example4 or toy")->required();
    bench->add_option("--p", sizes, "node counts, comma separated")->delimiter(',')->required();
    bench->add_option("--n", bopt.bench.n, "sample count")->required();
    bench->add_option("--reps", bopt.bench.reps, "replications per cell")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "existing output directory");
    bench->add_option("--hm", bench_hm, "Hamming divisor: skeleton or ordered");
    bench->add_option("--learner-family", bench_family, "family assumed by the learner");
    bench->add_flag("--time-only", bopt.bench.time_only, "time the learner without scoring");
    add_learn_flags(*bench, bflags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::ok : cli::usage;
    }

    try {
        const std::uint64_t seed = cli::resolve_seed(flags.seed);
        if (sim->parsed()) {
            sopt.spec.seed = seed;
            sopt.out_dir = sim_out;
            if (sopt.preset.empty()) {
                sopt.spec.graph = parse_graph_kind(graph);
                sopt.spec.family = cli::parse_family(family);
                const auto nr = parse_range(node_range), er = parse_range(edge_range);
                sopt.spec.ranges.assign(sopt.spec.family.is_mixture() ? 2 : 1, ParamRanges{{nr[0], nr[1]}, {er[0], er[1]}});
                sopt.spec.learner_family =
                    sopt.spec.family.is_mixture() ? sopt.spec.family.components()[0] : sopt.spec.family;
            }
            return cli::cmd_simulate(sopt);
        }
        if (learn->parsed()) {
            lopt.out_dir = learn_out;
            lopt.threads = flags.threads;
            lopt.family = cli::parse_learner_family(learn_family);
            if (!family_file.empty()) lopt.family_file = family_file;
            lopt.config = make_learn_config(lflags, seed);
            return cli::cmd_learn(lopt);
        }
        if (eval->parsed()) {
            if (eval_p > 0) eopt.p = eval_p;
            if (!eval_out.empty()) eopt.out = eval_out;
            eopt.hm = parse_hm(eval_hm);
            return cli::cmd_eval(eopt);
        }
        if (bench->parsed()) {
            bopt.out_dir = bench_out;
            bopt.threads = flags.threads;
            bopt.bench.sizes = sizes;
            bopt.bench.base_seed = seed;
            bopt.bench.hm = parse_hm(bench_hm);
            bopt.bench.learn = make_learn_config(bflags, seed);
            if (!bench_family.empty()) bopt.bench.learner_family = cli::parse_family(bench_family);
            return cli::cmd_bench(bopt);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::data_error;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::data_error;
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::data_error;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::data_error;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return cli::internal;
    }
    return cli::usage;
}
