#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvfdag/edges.hpp"
#include "qvfdag/error.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/layers.hpp"
#include "qvfdag/metrics.hpp"
#include "qvfdag/ratio.hpp"

namespace qvfdag {

class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

namespace io_detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

}  // namespace io_detail

/// Shortest round-trip text for a double; integral values print without a decimal point.
inline std::string format_number(double v)
{
    if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct CsvData {
    std::vector<std::string> header;
    DataMatrix data;
};

/// Parses a numeric CSV with a header line. Every row must have as many fields as the
/// header and every field must be a finite number; errors name the 1-based row and column.
inline CsvData parse_data_csv(std::string_view text)
{
    auto lines = io_detail::lines_of(text);
    while (!lines.empty() && io_detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw InputError("data CSV is empty");

    CsvData out;
    for (auto f : io_detail::split(lines[0])) out.header.emplace_back(f);
    const std::size_t p = out.header.size();
    if (p == 0 || (p == 1 && out.header[0].empty())) throw InputError("data CSV header has no columns");

    const std::size_t n = lines.size() - 1;
    out.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        const auto fields = io_detail::split(lines[i + 1]);
        const std::size_t row = i + 2;  // file line number
        if (fields.size() != p) {
            throw InputError("data CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(p));
        }
        for (std::size_t c = 0; c < p; ++c) {
            const auto v = io_detail::parse_double(fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw InputError("data CSV row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                 ": not a finite number '" + std::string(fields[c]) + "'");
            }
            out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    return out;
}

inline CsvData read_data_csv(const std::filesystem::path& path) { return parse_data_csv(io_detail::read_file(path)); }

inline std::string format_data_csv(const DataMatrix& data)
{
    std::string out;
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        if (c > 0) out += ',';
        out += "x" + std::to_string(c + 1);
    }
    out += '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index c = 0; c < data.cols(); ++c) {
            if (c > 0) out += ',';
            out += format_number(data(i, c));
        }
        out += '\n';
    }
    return out;
}

struct EdgeList {
    std::vector<Edge> edges;
    /// Largest node id mentioned (1-based), 0 for an empty list.
    std::size_t max_id = 0;
};

/// `source,target` header then one 1-based pair per line.
inline EdgeList parse_edge_csv(std::string_view text)
{
    auto lines = io_detail::lines_of(text);
    while (!lines.empty() && io_detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw InputError("edge CSV is empty");
    const auto header = io_detail::split(lines[0]);
    if (header.size() != 2 || header[0] != "source" || header[1] != "target") {
        throw InputError("edge CSV header must be 'source,target'");
    }
    EdgeList out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = io_detail::split(lines[i]);
        const std::size_t row = i + 1;
        if (fields.size() != 2) throw InputError("edge CSV row " + std::to_string(row) + " must have two fields");
        std::size_t ids[2];
        for (int c = 0; c < 2; ++c) {
            const auto f = fields[static_cast<std::size_t>(c)];
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || v == 0) {
                throw InputError("edge CSV row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                 ": expected a positive node id, got '" + std::string(f) + "'");
            }
            ids[c] = v;
        }
        out.edges.push_back({ids[0] - 1, ids[1] - 1});
        out.max_id = std::max({out.max_id, ids[0], ids[1]});
    }
    return out;
}

inline EdgeList read_edge_csv(const std::filesystem::path& path) { return parse_edge_csv(io_detail::read_file(path)); }

/// Builds a Dag of size p (or the inferred max id when p is unset).
inline Dag edge_list_to_dag(const EdgeList& list, std::optional<std::size_t> p = std::nullopt)
{
    const std::size_t size = p.value_or(list.max_id);
    if (list.max_id > size) {
        throw InputError("edge list references node " + std::to_string(list.max_id) + " but p = " + std::to_string(size));
    }
    return Dag{size, list.edges};
}

inline std::string format_edge_csv(const Dag& dag)
{
    std::string out = "source,target\n";
    for (const Edge& e : dag.edges()) out += std::to_string(e.source + 1) + "," + std::to_string(e.target + 1) + "\n";
    return out;
}

/// Writes via a temporary sibling and renames, so a failed write leaves no partial file.
inline void write_text(const std::filesystem::path& path, std::string_view text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// JSON views (1-based node ids throughout)

inline nlohmann::json node_set_json(const NodeSet& s)
{
    nlohmann::json out = nlohmann::json::array();
    for (NodeId j : s) out.push_back(j + 1);
    return out;
}

inline nlohmann::json layers_json(const TopologicalLayers& layers)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : layers.layers()) out.push_back(node_set_json(l));
    return out;
}

inline TopologicalLayers layers_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) throw InputError("layers JSON must be an array of arrays");
    std::vector<NodeSet> layers;
    for (const auto& l : j) {
        if (!l.is_array()) throw InputError("layers JSON must be an array of arrays");
        NodeSet s;
        for (const auto& v : l) {
            if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) throw InputError("layer entries must be 1-based ids");
            s.push_back(v.get<std::size_t>() - 1);
        }
        layers.push_back(std::move(s));
    }
    return TopologicalLayers{std::move(layers)};
}

inline nlohmann::json ratio_step_json(const RatioStep& step)
{
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [j, r] : step.ratios) ratios[std::to_string(j + 1)] = r;
    nlohmann::json failures = nlohmann::json::object();
    for (const auto& [j, f] : step.failures) failures[std::to_string(j + 1)] = f.message;
    return {{"cond_set", node_set_json(step.cond_set)}, {"ratios", ratios}, {"failures", failures}};
}

inline nlohmann::json stability_json(const StabilityReport& r)
{
    return {{"grid", r.grid},       {"scores", r.scores},        {"chosen", r.chosen},
            {"chosen_index", r.chosen_index}, {"fallback", r.fallback}, {"split_seeds", r.split_seeds},
            {"diagnostics", r.diagnostics}};
}

/// Per-layer diagnostics. Ratio tables are included only when requested.
inline nlohmann::json layer_result_json(const LayerResult& res, bool with_ratios)
{
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t t = 0; t < res.steps.size(); ++t) {
        const auto& s = res.steps[t];
        nlohmann::json j{{"layer", t},
                         {"candidates", node_set_json(s.candidates)},
                         {"assigned", node_set_json(s.assigned)},
                         {"forced", node_set_json(s.forced)},
                         {"epsilon", s.epsilon},
                         {"fallback", s.fallback}};
        if (s.stability) j["stability"] = stability_json(*s.stability);
        if (with_ratios) j["ratio_table"] = ratio_step_json(s.ratios);
        steps.push_back(std::move(j));
    }
    return {{"layers", layers_json(res.layers)},
            {"epsilons", res.epsilons()},
            {"fallbacks", res.fallbacks()},
            {"steps", steps},
            {"diagnostics", res.diagnostics}};
}

inline nlohmann::json coefficients_json(const EdgeResult& res)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& f : res.fits) {
        nlohmann::json coef = nlohmann::json::object();
        for (std::size_t k = 0; k < f.upper.size() && k < f.coefficients.size(); ++k) {
            coef[std::to_string(f.upper[k] + 1)] = f.coefficients[k];
        }
        nodes.push_back({{"node", f.node + 1},
                         {"upper", node_set_json(f.upper)},
                         {"parents", node_set_json(f.parents)},
                         {"intercept", f.intercept},
                         {"lambda", f.lambda},
                         {"converged", f.converged},
                         {"coefficients", coef}});
    }
    return {{"schema", kSchemaVersion}, {"nodes", nodes}};
}

inline nlohmann::json metrics_json(const Metrics& m)
{
    return {{"hm", m.hm},
            {"recall", m.recall},
            {"precision", m.precision},
            {"f1", m.f1},
            {"tp", m.tp},
            {"fp", m.fp},
            {"fn", m.fn},
            {"flips", m.flips},
            {"insertions", m.insertions},
            {"deletions", m.deletions},
            {"estimated_edges", m.estimated_edges},
            {"true_edges", m.true_edges}};
}

}  // namespace qvfdag
