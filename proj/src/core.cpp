#include "causa/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace causa {

LagWindow LagWindow::make(int tau_min, int tau_max) {
    if (tau_min < 1 || tau_max < tau_min) {
        throw InputError("invalid lag window [" + std::to_string(tau_min) + ", " + std::to_string(tau_max) +
                         "]: need 1 <= tau_min <= tau_max");
    }
    return LagWindow{tau_min, tau_max};
}

TimeSeriesDataset::TimeSeriesDataset(std::vector<std::string> var_names, Eigen::MatrixXd values)
    : names_(std::move(var_names)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.cols()) != names_.size()) {
        throw InputError("dataset has " + std::to_string(names_.size()) + " names but " +
                         std::to_string(values_.cols()) + " columns");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
        if (name.empty()) throw InputError("empty variable name");
        if (!seen.insert(name).second) throw InputError("duplicate variable name '" + name + "'");
    }
    if (!names_.empty() && values_.rows() < 2) {
        throw InputError("dataset needs at least 2 time steps, got " + std::to_string(values_.rows()));
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        for (Eigen::Index t = 0; t < values_.rows(); ++t) {
            if (!std::isfinite(values_(t, j))) {
                throw InputError("non-finite value at row " + std::to_string(t) + ", column '" +
                                 names_[static_cast<std::size_t>(j)] + "'");
            }
        }
    }
}

bool TimeSeriesDataset::has_var(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t TimeSeriesDataset::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InputError("unknown variable '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

TimeSeriesDataset TimeSeriesDataset::select(std::span<const std::string> names) const {
    Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(index_of(names[j])));
    }
    return TimeSeriesDataset(std::vector<std::string>(names.begin(), names.end()), std::move(out));
}

bool ParentSet::contains(const VarLag& p) const {
    return std::any_of(parents.begin(), parents.end(), [&](const ParentLink& l) { return l.parent == p; });
}

std::vector<VarLag> ParentSet::strongest(std::size_t max_count) const {
    std::vector<ParentLink> sorted = parents;
    std::sort(sorted.begin(), sorted.end(), [](const ParentLink& a, const ParentLink& b) {
        if (a.statistic != b.statistic) return a.statistic > b.statistic;
        return a.parent < b.parent;
    });
    std::vector<VarLag> out;
    for (std::size_t i = 0; i < sorted.size() && i < max_count; ++i) out.push_back(sorted[i].parent);
    return out;
}

CausalGraph::CausalGraph(std::vector<std::string> nodes, std::vector<LaggedEdge> edges, LagWindow window, double alpha)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), window_(window), alpha_(alpha) {
    LagWindow::make(window_.tau_min, window_.tau_max);
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw InputError("graph alpha must lie in [0, 1]");
    std::unordered_set<std::string> node_set;
    for (const auto& n : nodes_) {
        if (n.empty()) throw InputError("empty node name");
        if (!node_set.insert(n).second) throw InputError("duplicate node '" + n + "'");
    }
    for (const auto& e : edges_) {
        const std::string label = e.source + " -(" + std::to_string(e.lag) + ")-> " + e.target;
        if (!node_set.contains(e.source) || !node_set.contains(e.target)) {
            throw InputError("edge " + label + " references an unknown node");
        }
        if (e.lag < 1) throw InputError("edge " + label + " has lag < 1");
        if (!window_.contains(e.lag)) throw InputError("edge " + label + " lies outside the lag window");
        if (!std::isfinite(e.statistic)) throw InputError("edge " + label + " has a non-finite statistic");
        if (!(e.p_value >= 0.0 && e.p_value <= 1.0)) throw InputError("edge " + label + " has p-value outside [0, 1]");
        if (e.p_value > alpha_) throw InputError("edge " + label + " has p-value above alpha");
    }
    std::sort(edges_.begin(), edges_.end(), [](const LaggedEdge& a, const LaggedEdge& b) { return a.key() < b.key(); });
    auto dup = std::adjacent_find(edges_.begin(), edges_.end(),
                                  [](const LaggedEdge& a, const LaggedEdge& b) { return a.key() == b.key(); });
    if (dup != edges_.end()) {
        throw InputError("duplicate edge " + dup->source + " -(" + std::to_string(dup->lag) + ")-> " + dup->target);
    }
}

bool CausalGraph::has_node(std::string_view name) const {
    return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

const LaggedEdge* CausalGraph::find_edge(std::string_view source, int lag, std::string_view target) const {
    for (const auto& e : edges_) {
        if (e.source == source && e.lag == lag && e.target == target) return &e;
    }
    return nullptr;
}

bool CausalGraph::has_edge(std::string_view source, int lag, std::string_view target) const {
    return find_edge(source, lag, target) != nullptr;
}

Eigen::VectorXd aligned_column(const TimeSeriesDataset& data, std::size_t column, int lag, int max_lag) {
    const auto T = static_cast<Eigen::Index>(data.num_samples());
    if (lag < 0 || lag > max_lag) {
        throw InputError("lag " + std::to_string(lag) + " outside [0, " + std::to_string(max_lag) + "]");
    }
    if (max_lag >= T) throw EstimationError("series too short for maximum lag " + std::to_string(max_lag));
    return data.values().col(static_cast<Eigen::Index>(column)).segment(max_lag - lag, T - max_lag);
}

std::vector<double> lagged_column(const TimeSeriesDataset& data, std::string_view var, int lag, const LagWindow& window) {
    const Eigen::VectorXd col = aligned_column(data, data.index_of(var), lag, window.tau_max);
    return {col.data(), col.data() + col.size()};
}

}  // namespace causa
