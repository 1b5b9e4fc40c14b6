#include "causa/metrics.hpp"

#include <cmath>
#include <functional>
#include <set>

namespace causa {

EvaluationReport score_graph(const CausalGraph& estimated, const CausalGraph& truth) {
    using Key = std::tuple<std::string, int, std::string>;
    auto keys = [](const CausalGraph& g) {
        std::set<Key> out;
        for (const auto& e : g.edges()) out.emplace(e.source, e.lag, e.target);
        return out;
    };
    const auto est = keys(estimated);
    const auto tru = keys(truth);

    EvaluationReport r;
    for (const auto& k : est) (tru.contains(k) ? r.tp : r.fp)++;
    for (const auto& k : tru)
        if (!est.contains(k)) r.fn++;
    r.shd = r.fp + r.fn;
    r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

namespace {

double population_sd(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

double check_and_sd(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw InputError("actual and predicted lengths differ");
    if (actual.size() < 2) throw InputError("need at least 2 values");
    const double sd = population_sd(actual);
    if (!(sd > 0.0)) throw InputError("actual values have zero variance");
    return sd;
}

FieldStats stats(std::span<const EvaluationReport> reports, const std::function<double(const EvaluationReport&)>& f) {
    FieldStats s;
    for (const auto& r : reports) s.mean += f(r);
    s.mean /= static_cast<double>(reports.size());
    if (reports.size() > 1) {
        double ss = 0.0;
        for (const auto& r : reports) ss += (f(r) - s.mean) * (f(r) - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(reports.size() - 1));
    }
    return s;
}

}  // namespace

double nmae(std::span<const double> actual, std::span<const double> predicted) {
    const double sd = check_and_sd(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
    return sum / static_cast<double>(actual.size()) / sd;
}

double nrmse(std::span<const double> actual, std::span<const double> predicted) {
    const double sd = check_and_sd(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sum += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return std::sqrt(sum / static_cast<double>(actual.size())) / sd;
}

AggregateReport aggregate(std::span<const EvaluationReport> reports) {
    if (reports.empty()) throw InputError("cannot aggregate an empty report list");
    AggregateReport a;
    a.count = reports.size();
    a.shd = stats(reports, [](const auto& r) { return static_cast<double>(r.shd); });
    a.f1 = stats(reports, [](const auto& r) { return r.f1; });
    a.precision = stats(reports, [](const auto& r) { return r.precision; });
    a.recall = stats(reports, [](const auto& r) { return r.recall; });
    a.tp = stats(reports, [](const auto& r) { return static_cast<double>(r.tp); });
    a.fp = stats(reports, [](const auto& r) { return static_cast<double>(r.fp); });
    a.fn = stats(reports, [](const auto& r) { return static_cast<double>(r.fn); });
    bool all_timed = true;
    for (const auto& r : reports) all_timed = all_timed && r.runtime_ms.has_value();
    if (all_timed) a.runtime_ms = stats(reports, [](const auto& r) { return *r.runtime_ms; });
    return a;
}

}  // namespace causa
