#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace causa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: bad files, bad flags, violated preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

/// Estimation could not proceed on the given data (singular covariance,
/// constant columns, too few samples).
class EstimationError : public Error {
public:
    using Error::Error;
};

struct LagWindow {
    int tau_min = 1;
    int tau_max = 1;

    /// Throws InputError unless 1 <= tau_min <= tau_max.
    static LagWindow make(int tau_min, int tau_max);

    int size() const noexcept { return tau_max - tau_min + 1; }
    bool contains(int lag) const noexcept { return lag >= tau_min && lag <= tau_max; }

    friend bool operator==(const LagWindow&, const LagWindow&) = default;
};

/// A variable observed at a lag relative to the present sample.
struct VarLag {
    std::string var;
    int lag = 0;

    friend auto operator<=>(const VarLag&, const VarLag&) = default;
};

/// Column-aligned multivariate series, T rows by N columns.
///
/// Immutable after construction. Ingestion requires N >= 1, but an
/// empty-variable dataset (N = 0) is representable so that the filter can
/// report "nothing selected".
class TimeSeriesDataset {
public:
    TimeSeriesDataset() = default;
    TimeSeriesDataset(std::vector<std::string> var_names, Eigen::MatrixXd values);

    const std::vector<std::string>& var_names() const noexcept { return names_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

    std::size_t num_vars() const noexcept { return names_.size(); }
    std::size_t num_samples() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    bool empty() const noexcept { return names_.empty(); }

    bool has_var(std::string_view name) const;
    /// Column index of `name`; throws InputError for unknown variables.
    std::size_t index_of(std::string_view name) const;
    Eigen::Ref<const Eigen::VectorXd> column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

    /// Subset of columns in the order given.
    TimeSeriesDataset select(std::span<const std::string> names) const;

private:
    std::vector<std::string> names_;
    Eigen::MatrixXd values_;
};

struct LaggedEdge {
    std::string source;
    int lag = 1;
    std::string target;
    double statistic = 0.0;
    double p_value = 0.0;

    /// Identity of an edge ignores statistic and p-value.
    auto key() const { return std::tie(source, lag, target); }

    friend bool operator==(const LaggedEdge&, const LaggedEdge&) = default;
};

/// The filter's proposed candidate parents, per target.
struct HypotheticalStructure {
    std::map<std::string, std::set<VarLag>> candidates;

    bool empty() const noexcept { return candidates.empty(); }
    friend bool operator==(const HypotheticalStructure&, const HypotheticalStructure&) = default;
};

struct ParentLink {
    VarLag parent;
    double statistic = 0.0;
    double p_value = 0.0;

    friend bool operator==(const ParentLink&, const ParentLink&) = default;
};

struct ParentSet {
    std::string owner;
    std::vector<ParentLink> parents;

    bool contains(const VarLag& p) const;
    /// Parents sorted by descending statistic (ties by var, then lag), capped at `max_count`.
    std::vector<VarLag> strongest(std::size_t max_count) const;
};

using ParentMap = std::map<std::string, ParentSet>;

/// Validated lag-specific directed graph.
///
/// Edges are kept sorted by (source, lag, target). Construction enforces the
/// invariants: endpoints are nodes, no duplicates, lag within the window,
/// p_value <= alpha, finite statistics.
class CausalGraph {
public:
    CausalGraph() = default;
    CausalGraph(std::vector<std::string> nodes, std::vector<LaggedEdge> edges, LagWindow window, double alpha);

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const std::vector<LaggedEdge>& edges() const noexcept { return edges_; }
    const LagWindow& lag_window() const noexcept { return window_; }
    double alpha() const noexcept { return alpha_; }

    bool has_node(std::string_view name) const;
    bool has_edge(std::string_view source, int lag, std::string_view target) const;
    const LaggedEdge* find_edge(std::string_view source, int lag, std::string_view target) const;

    friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

private:
    std::vector<std::string> nodes_;
    std::vector<LaggedEdge> edges_;
    LagWindow window_{};
    double alpha_ = 0.05;
};

enum class GraphFormat { json, dot };

// Ingestion and export.

TimeSeriesDataset load_csv(const std::string& path, char delimiter = ',');
TimeSeriesDataset parse_csv(std::string_view text, char delimiter = ',');
/// Header plus rows, values written with 17 significant digits.
std::string format_csv(const TimeSeriesDataset& data, char delimiter = ',');
void write_csv(const TimeSeriesDataset& data, const std::string& path, char delimiter = ',');

/// Column `var` shifted back by `lag`, aligned so that every lag in
/// [0, max_lag] shares the index range [0, T - max_lag): entry t is the
/// original sample t + max_lag - lag.
std::vector<double> lagged_column(const TimeSeriesDataset& data, std::string_view var, int lag, const LagWindow& window);
Eigen::VectorXd aligned_column(const TimeSeriesDataset& data, std::size_t column, int lag, int max_lag);

std::string serialize_graph(const CausalGraph& graph, GraphFormat format);
CausalGraph parse_graph(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace causa
