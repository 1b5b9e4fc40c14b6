#include "causa/filter.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "causa/log.hpp"

namespace causa {

namespace {

struct Scored {
    std::string source;
    TestResult result;
};

bool better(const Scored& a, const Scored& b) {
    if (a.result.statistic != b.result.statistic) return a.result.statistic > b.result.statistic;
    if (a.result.p_value != b.result.p_value) return a.result.p_value < b.result.p_value;
    return a.source < b.source;
}

}  // namespace

double max_statistic_p_value(double p_value, int candidates) {
    if (candidates <= 1) return p_value;
    return std::clamp(-std::expm1(candidates * std::log1p(-std::min(p_value, 1.0))), 0.0, 1.0);
}

FilterResult select_features(const TimeSeriesDataset& data, double alpha, const LagWindow& window,
                             const EstimatorConfig& config, const LaggedCorrelation* moments) {
    if (data.num_vars() < 2) throw InputError("feature selection needs at least 2 variables");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    config.validate();

    std::optional<LaggedCorrelation> own;
    if (!moments && analytic_gaussian(config)) own.emplace(data, window.tau_max);
    const LaggedCorrelation* cache = own ? &*own : moments;

    if (config.surrogates > 0) {
        const double floor = 1.0 / (1.0 + config.surrogates);
        const int pool = static_cast<int>(data.num_vars()) - 1;
        if (max_statistic_p_value(floor, pool) > alpha) {
            log::warn("filter: with {} surrogates the smallest corrected p-value over {} candidates is {:.3g} > alpha",
                      config.surrogates, pool, max_statistic_p_value(floor, pool));
        }
    }

    FilterResult out;
    for (const auto& target : data.var_names()) {
        std::vector<std::string> pool;
        for (const auto& v : data.var_names())
            if (v != target) pool.push_back(v);
        std::set<std::string> sources;

        while (!pool.empty()) {
            std::optional<Scored> best;
            const auto first_entry = out.trace.size();
            const auto round_size = static_cast<int>(pool.size());
            for (const auto& s : pool) {
                Scored cur{s, te_score(s, target, sources, data, window, config, alpha, cache)};
                cur.result.p_value = max_statistic_p_value(cur.result.p_value, round_size);
                ++out.tests;
                out.trace.push_back({target, s, cur.result.statistic, cur.result.p_value, false, false});
                if (!best || better(cur, *best)) best = std::move(cur);
            }
            if (best->result.p_value > alpha) break;
            for (auto i = first_entry; i < out.trace.size(); ++i) {
                if (out.trace[i].candidate == best->source) out.trace[i].accepted = true;
            }
            sources.insert(best->source);
            pool.erase(std::find(pool.begin(), pool.end(), best->source));
            log::debug("filter: {} <- {} (I={:.4g}, p={:.3g})", target, best->source, best->result.statistic,
                       best->result.p_value);
        }

        // Own past against present, given the selected sources' pasts.
        CmiQuery self;
        self.data = &data;
        self.window = window;
        self.moments = cache;
        self.y = {{target, 0}};
        for (int tau = window.tau_min; tau <= window.tau_max; ++tau) {
            self.x.push_back({target, tau});
            for (const auto& s : sources) self.z.push_back({s, tau});
        }
        const TestResult auto_result = test_dependence(self, config, alpha);
        ++out.tests;
        const bool auto_dependent = auto_result.p_value <= alpha;
        out.trace.push_back({target, target, auto_result.statistic, auto_result.p_value, auto_dependent, true});

        if (sources.empty() && !auto_dependent) continue;
        auto& cands = out.structure.candidates[target];
        for (int tau = window.tau_min; tau <= window.tau_max; ++tau) {
            for (const auto& s : sources) cands.insert({s, tau});
            cands.insert({target, tau});
        }
        out.selected_vars.insert(target);
        out.selected_vars.insert(sources.begin(), sources.end());
    }
    log::info("filter kept {} of {} variables after {} tests", out.selected_vars.size(), data.num_vars(), out.tests);
    return out;
}

TimeSeriesDataset shrink(const TimeSeriesDataset& data, const FilterResult& result) {
    for (const auto& v : result.selected_vars) {
        if (!data.has_var(v)) throw InputError("filter result names unknown variable '" + v + "'");
    }
    std::vector<std::string> keep;
    for (const auto& v : data.var_names())
        if (result.selected_vars.contains(v)) keep.push_back(v);
    return data.select(keep);
}

nlohmann::ordered_json filter_to_json(const FilterResult& result) {
    nlohmann::ordered_json j;
    j["selected_vars"] = result.selected_vars;
    j["structure"] = nlohmann::ordered_json::object();
    for (const auto& [target, cands] : result.structure.candidates) {
        auto& arr = j["structure"][target] = nlohmann::ordered_json::array();
        for (const auto& c : cands) arr.push_back({{"source", c.var}, {"lag", c.lag}});
    }
    j["tests"] = result.tests;
    j["trace"] = nlohmann::ordered_json::array();
    for (const auto& t : result.trace) {
        j["trace"].push_back({{"target", t.target},
                              {"candidate", t.candidate},
                              {"statistic", t.statistic},
                              {"p_value", t.p_value},
                              {"accepted", t.accepted},
                              {"auto_dependency", t.auto_dependency}});
    }
    return j;
}

}  // namespace causa
