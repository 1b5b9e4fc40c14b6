#include "causa/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace causa {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delimiter, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw InputError("error reading '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("error writing '" + path + "'");
}

TimeSeriesDataset parse_csv(std::string_view text, char delimiter) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!trim(line).empty()) lines.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (lines.empty()) throw InputError("CSV is empty: missing header row");

    std::vector<std::string> names;
    for (auto field : split(lines.front(), delimiter)) names.emplace_back(field);
    if (names.size() == 1 && names.front().empty()) throw InputError("CSV header names no variables");

    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    Eigen::MatrixXd values(rows, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto fields = split(lines[static_cast<std::size_t>(r) + 1], delimiter);
        const auto row_no = std::to_string(r + 1);
        if (fields.size() != names.size()) {
            throw InputError("ragged CSV: data row " + row_no + " has " + std::to_string(fields.size()) +
                             " fields, header has " + std::to_string(names.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto cell = fields[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw InputError("non-numeric cell '" + std::string(cell) + "' at data row " + row_no + ", column '" +
                                 names[c] + "'");
            }
            if (!std::isfinite(v)) {
                throw InputError("non-finite cell '" + std::string(cell) + "' at data row " + row_no + ", column '" +
                                 names[c] + "'");
            }
            values(r, static_cast<Eigen::Index>(c)) = v;
        }
    }
    return TimeSeriesDataset(std::move(names), std::move(values));
}

TimeSeriesDataset load_csv(const std::string& path, char delimiter) {
    return parse_csv(read_file(path), delimiter);
}

std::string format_csv(const TimeSeriesDataset& data, char delimiter) {
    std::string out;
    const auto& names = data.var_names();
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out += delimiter;
        out += names[j];
    }
    out += '\n';
    const auto& v = data.values();
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (j) out += delimiter;
            out += format_double(v(t, j));
        }
        out += '\n';
    }
    return out;
}

void write_csv(const TimeSeriesDataset& data, const std::string& path, char delimiter) {
    write_file(path, format_csv(data, delimiter));
}

namespace {

std::string dot_id(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

std::string format_width(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", w);
    return buf;
}

std::string graph_dot(const CausalGraph& graph) {
    constexpr double max_width = 5.0;
    double strongest = 0.0;
    for (const auto& e : graph.edges()) strongest = std::max(strongest, std::abs(e.statistic));
    auto width = [&](double stat) { return strongest > 0.0 ? max_width * std::abs(stat) / strongest : 1.0; };

    // Self-edges become node border annotations.
    std::map<std::string, std::pair<double, std::vector<int>>> self;
    for (const auto& e : graph.edges()) {
        if (e.source != e.target) continue;
        auto& [stat, lags] = self[e.source];
        stat = std::max(stat, std::abs(e.statistic));
        lags.push_back(e.lag);
    }

    std::string out = "digraph causal {\n";
    for (const auto& n : graph.nodes()) {
        out += "  " + dot_id(n);
        if (auto it = self.find(n); it != self.end()) {
            std::string lags;
            for (int lag : it->second.second) lags += (lags.empty() ? "" : ",") + std::to_string(lag);
            out += " [penwidth=" + format_width(width(it->second.first)) + ", xlabel=\"τ=" + lags + "\"]";
        }
        out += ";\n";
    }
    for (const auto& e : graph.edges()) {
        if (e.source == e.target) continue;
        out += "  " + dot_id(e.source) + " -> " + dot_id(e.target) + " [label=\"τ=" + std::to_string(e.lag) +
               "\", penwidth=" + format_width(width(e.statistic)) + "];\n";
    }
    out += "}\n";
    return out;
}

}  // namespace

std::string serialize_graph(const CausalGraph& graph, GraphFormat format) {
    if (format == GraphFormat::dot) return graph_dot(graph);

    nlohmann::ordered_json j;
    j["nodes"] = graph.nodes();
    j["lag_window"] = {{"tau_min", graph.lag_window().tau_min}, {"tau_max", graph.lag_window().tau_max}};
    j["alpha"] = graph.alpha();
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : graph.edges()) {
        j["edges"].push_back({{"source", e.source},
                              {"lag", e.lag},
                              {"target", e.target},
                              {"statistic", e.statistic},
                              {"p_value", e.p_value}});
    }
    return j.dump(2) + "\n";
}

CausalGraph parse_graph(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("graph JSON does not parse: ") + e.what());
    }
    try {
        if (!j.is_object()) throw InputError("graph JSON must be an object");
        for (const char* key : {"nodes", "lag_window", "alpha", "edges"}) {
            if (!j.contains(key)) throw InputError(std::string("graph JSON missing '") + key + "'");
        }
        auto nodes = j.at("nodes").get<std::vector<std::string>>();
        const auto& w = j.at("lag_window");
        auto window = LagWindow::make(w.at("tau_min").get<int>(), w.at("tau_max").get<int>());
        std::vector<LaggedEdge> edges;
        for (const auto& e : j.at("edges")) {
            LaggedEdge edge;
            edge.source = e.at("source").get<std::string>();
            edge.lag = e.at("lag").get<int>();
            edge.target = e.at("target").get<std::string>();
            edge.statistic = e.value("statistic", 0.0);
            edge.p_value = e.value("p_value", 0.0);
            edges.push_back(std::move(edge));
        }
        return CausalGraph(std::move(nodes), std::move(edges), window, j.at("alpha").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("graph JSON schema violation: ") + e.what());
    }
}

}  // namespace causa
