#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "causa/core.hpp"

namespace causa {

enum class EstimatorKind { gaussian, knn };

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::gaussian;
    int knn_k = 4;
    /// 0 selects the analytic chi-square p-value (Gaussian only).
    int surrogates = 0;
    std::uint64_t seed = 0;

    /// Throws InputError when the combination is unusable.
    void validate() const;
};

/// Gaussian estimator with chi-square p-values, the case LaggedCorrelation serves.
inline bool analytic_gaussian(const EstimatorConfig& c) noexcept {
    return c.kind == EstimatorKind::gaussian && c.surrogates == 0;
}

class LaggedCorrelation;

/// I(X; Y | Z) over lagged columns of one dataset.
struct CmiQuery {
    std::vector<VarLag> x;
    std::vector<VarLag> y;
    std::vector<VarLag> z;
    const TimeSeriesDataset* data = nullptr;
    LagWindow window{};
    /// Number of leading samples dropped for alignment; 0 means window.tau_max.
    int alignment_lag = 0;
    /// Optional precomputed correlations; used by the analytic Gaussian test
    /// when built from the same dataset and alignment.
    const LaggedCorrelation* moments = nullptr;

    int effective_alignment() const noexcept { return alignment_lag > 0 ? alignment_lag : window.tau_max; }
    std::size_t effective_samples() const;
    /// Stable textual identity used to derive surrogate RNG streams.
    std::string fingerprint() const;
};

/// Correlation matrix of lagged columns over the rows that one alignment
/// keeps. Gaussian CMI depends on the data only through these correlations,
/// so queries sharing an alignment can read blocks of one matrix.
class LaggedCorrelation {
public:
    /// Every variable at lags 0..max_lag.
    LaggedCorrelation(const TimeSeriesDataset& data, int max_lag);
    /// Only the listed columns.
    LaggedCorrelation(const TimeSeriesDataset& data, int max_lag, const std::set<VarLag>& columns);

    const TimeSeriesDataset& data() const noexcept { return *data_; }
    int max_lag() const noexcept { return max_lag_; }
    /// Same dataset and alignment, and every column of the query is present.
    bool serves(const CmiQuery& query) const;
    Eigen::Index index(const VarLag& v) const;
    const Eigen::MatrixXd& matrix() const noexcept { return corr_; }
    bool constant(Eigen::Index i) const { return constant_[static_cast<std::size_t>(i)]; }

private:
    const TimeSeriesDataset* data_;
    int max_lag_;
    std::map<VarLag, Eigen::Index> index_;
    Eigen::MatrixXd corr_;
    std::vector<bool> constant_;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof_or_surrogates = 0;
};

/// Estimated CMI in nats, clamped to >= 0.
double estimate_cmi(const CmiQuery& query, const EstimatorConfig& config);
/// Same estimate without the clamp; used for surrogate comparison.
double estimate_cmi_raw(const CmiQuery& query, const EstimatorConfig& config);

TestResult test_dependence(const CmiQuery& query, const EstimatorConfig& config, double alpha);

/// Transfer entropy from `source` to `target`, with both the target's own past
/// and the past of every variable in `cond_set` over the lag window in the
/// conditioning set.
TestResult te_score(const std::string& source, const std::string& target, const std::set<std::string>& cond_set,
                    const TimeSeriesDataset& data, const LagWindow& window, const EstimatorConfig& config,
                    double alpha = 0.05, const LaggedCorrelation* moments = nullptr);

/// Lag-specific MCI test of source_{t-lag} -> target_t given both parent sets.
TestResult mci_statistic(const VarLag& source, const std::string& target, const ParentSet& parents_of_target,
                         const ParentSet& parents_of_source, const TimeSeriesDataset& data, const LagWindow& window,
                         const EstimatorConfig& config, double alpha = 0.05,
                         const LaggedCorrelation* moments = nullptr);

/// The conditioning set mci_statistic uses; exposed for inspection.
std::vector<VarLag> mci_conditioning_set(const VarLag& source, const ParentSet& parents_of_target,
                                         const ParentSet& parents_of_source, const LagWindow& window);

namespace detail {

/// Gaussian CMI on raw columns laid out [X | Y | Z]. `labels` names the
/// columns for diagnostics.
double gaussian_cmi(const Eigen::MatrixXd& columns, int dx, int dy, const std::vector<std::string>& labels);
/// Gaussian CMI from a correlation matrix laid out [X | Y | Z].
double gaussian_cmi_from_correlation(Eigen::MatrixXd corr, int dx, int dy, const std::vector<std::string>& labels);
/// Frenzel-Pompe / Kraskov nearest-neighbour CMI on columns laid out [X | Y | Z].
double knn_cmi(const Eigen::MatrixXd& columns, int dx, int dy, int k);
/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double dof);
/// (1 + #{surrogate >= observed}) / (1 + n).
double surrogate_p_value(double observed, const std::vector<double>& surrogate_values);

}  // namespace detail

}  // namespace causa
