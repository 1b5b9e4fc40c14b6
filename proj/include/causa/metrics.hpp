#pragma once

#include <optional>
#include <span>
#include <vector>

#include "causa/core.hpp"

namespace causa {

struct EvaluationReport {
    int shd = 0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::optional<double> runtime_ms;
};

/// Exact (source, lag, target) matching; shd = fp + fn.
EvaluationReport score_graph(const CausalGraph& estimated, const CausalGraph& truth);

/// Mean absolute error over the population standard deviation of `actual`.
double nmae(std::span<const double> actual, std::span<const double> predicted);
/// Root-mean-square error over the population standard deviation of `actual`.
double nrmse(std::span<const double> actual, std::span<const double> predicted);

struct FieldStats {
    double mean = 0.0;
    double sd = 0.0;
};

struct AggregateReport {
    std::size_t count = 0;
    FieldStats shd, f1, precision, recall, tp, fp, fn;
    /// Present only when every report carries a runtime.
    std::optional<FieldStats> runtime_ms;
};

/// Per-field mean and sample standard deviation.
AggregateReport aggregate(std::span<const EvaluationReport> reports);

}  // namespace causa
