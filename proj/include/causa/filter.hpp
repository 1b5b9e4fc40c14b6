#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causa/core.hpp"
#include "causa/estimators.hpp"

namespace causa {

/// One transfer-entropy evaluation made during selection.
struct FilterTraceEntry {
    std::string target;
    std::string candidate;
    double statistic = 0.0;
    double p_value = 1.0;
    bool accepted = false;
    /// True for the target's own-past check (candidate == target).
    bool auto_dependency = false;

    friend bool operator==(const FilterTraceEntry&, const FilterTraceEntry&) = default;
};

struct FilterResult {
    std::set<std::string> selected_vars;
    HypotheticalStructure structure;
    std::vector<FilterTraceEntry> trace;
    std::size_t tests = 0;

    friend bool operator==(const FilterResult&, const FilterResult&) = default;
};

/// p-value of the best of `candidates` independent tests (Sidak), so a round
/// that scans many sources keeps its false-acceptance rate at the nominal level.
double max_statistic_p_value(double p_value, int candidates);

/// Greedy forward selection of sources per target by transfer entropy.
///
/// For each target the best remaining source (largest statistic, ties by
/// smaller p-value then name) joins the conditioning set while its
/// max-statistic p-value over the round is <= alpha. Afterwards the target's
/// own past is tested against its present, conditioned on the selected
/// sources; a significant result keeps a target that would otherwise have no
/// links at all. The structure lists every accepted source at every lag of
/// the window, plus the target itself when it has sources or tested
/// auto-dependent. `moments`, when given, must cover lags 0..tau_max of `data`.
FilterResult select_features(const TimeSeriesDataset& data, double alpha, const LagWindow& window,
                             const EstimatorConfig& config, const LaggedCorrelation* moments = nullptr);

/// Restrict `data` to the selected variables, keeping the original column order.
TimeSeriesDataset shrink(const TimeSeriesDataset& data, const FilterResult& result);

nlohmann::ordered_json filter_to_json(const FilterResult& result);

}  // namespace causa
