#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causa/core.hpp"
#include "causa/estimators.hpp"
#include "causa/filter.hpp"

namespace causa {

/// Which links the MCI phase validates: every initial candidate, with the PC
/// parents used only as conditions, or just the links that survived PC.
enum class MciScope { candidates, pc_parents };

struct DiscoveryConfig {
    double alpha = 0.05;
    LagWindow window{1, 1};
    /// Cap on the conditioning-set size in the PC phase.
    int max_conditioning_dim = 3;
    /// Number of strongest parents of each side used as MCI conditions.
    int max_parents_in_mci = 5;
    EstimatorConfig estimator{};
    /// true: filter first and start from its structure; false: plain PCMCI.
    bool constrained = true;
    MciScope mci_scope = MciScope::candidates;

    void validate() const;
};

/// Initial candidate parents per target, in iteration order.
using CandidateMap = std::map<std::string, std::vector<VarLag>>;

/// Every (variable, lag) pair, self-lags included, for every target.
CandidateMap full_candidates(const TimeSeriesDataset& data, const LagWindow& window);
/// Candidates from a filter structure, restricted to variables present in `data`.
CandidateMap structure_candidates(const HypotheticalStructure& structure, const TimeSeriesDataset& data);

/// Lagged PC condition selection.
///
/// At level k each surviving candidate of a target is tested against the
/// target given the k strongest other survivors (ranked by the statistics of
/// the previous level). Removals are applied after the whole level, so the
/// result does not depend on candidate order. Survivors keep the statistic of
/// the last test they passed and come back sorted strongest first.
ParentMap pc_phase(const TimeSeriesDataset& data, const CandidateMap& init, const DiscoveryConfig& cfg,
                   std::size_t* tests = nullptr, const LaggedCorrelation* moments = nullptr);

/// p <= alpha keeps a link.
inline bool retain_link(double p_value, double alpha) noexcept { return p_value <= alpha; }

/// MCI validation of every link in `links`, conditioning on the strongest
/// `parents` of both endpoints. Graph nodes are the dataset's variables.
CausalGraph mci_phase(const TimeSeriesDataset& data, const ParentMap& parents, const CandidateMap& links,
                      const DiscoveryConfig& cfg, std::size_t* tests = nullptr);
/// MCI validation restricted to the links in `parents`.
CausalGraph mci_phase(const TimeSeriesDataset& data, const ParentMap& parents, const DiscoveryConfig& cfg,
                      std::size_t* tests = nullptr);

struct StageTimings {
    double filter_ms = 0.0;
    double pc_ms = 0.0;
    double mci_ms = 0.0;
    double total_ms = 0.0;
};

struct TestCounts {
    std::size_t filter = 0;
    std::size_t pc = 0;
    std::size_t mci = 0;
};

struct DiscoveryRun {
    CausalGraph graph;
    std::optional<FilterResult> filter;
    ParentMap pc_parents;
    StageTimings timings;
    TestCounts tests;
};

/// Constrained: select_features, shrink, then pc_phase and mci_phase over the
/// filter's structure. Unconstrained: pc_phase and mci_phase over every link.
DiscoveryRun discover(const TimeSeriesDataset& data, const DiscoveryConfig& cfg);

nlohmann::ordered_json config_to_json(const DiscoveryConfig& cfg);
/// Config echo, stage durations, test counts, graph, and filter audit (when run).
nlohmann::ordered_json run_report_json(const DiscoveryRun& run, const DiscoveryConfig& cfg);

}  // namespace causa
