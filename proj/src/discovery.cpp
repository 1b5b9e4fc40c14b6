#include "causa/discovery.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "causa/log.hpp"

namespace causa {

void DiscoveryConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    LagWindow::make(window.tau_min, window.tau_max);
    if (max_conditioning_dim < 0) throw InputError("max_conditioning_dim must be >= 0");
    if (max_parents_in_mci < 1) throw InputError("max_parents_in_mci must be >= 1");
    estimator.validate();
}

CandidateMap full_candidates(const TimeSeriesDataset& data, const LagWindow& window) {
    CandidateMap out;
    for (const auto& target : data.var_names()) {
        auto& c = out[target];
        for (const auto& source : data.var_names())
            for (int tau = window.tau_min; tau <= window.tau_max; ++tau) c.push_back({source, tau});
    }
    return out;
}

CandidateMap structure_candidates(const HypotheticalStructure& structure, const TimeSeriesDataset& data) {
    CandidateMap out;
    for (const auto& [target, cands] : structure.candidates) {
        if (!data.has_var(target)) continue;
        std::vector<VarLag> c;
        for (const auto& v : cands)
            if (data.has_var(v.var)) c.push_back(v);
        if (!c.empty()) out[target] = std::move(c);
    }
    return out;
}

namespace {

bool stronger(const ParentLink& a, const ParentLink& b) {
    if (a.statistic != b.statistic) return a.statistic > b.statistic;
    return a.parent < b.parent;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

ParentMap pc_phase(const TimeSeriesDataset& data, const CandidateMap& init, const DiscoveryConfig& cfg,
                   std::size_t* tests, const LaggedCorrelation* shared) {
    cfg.validate();
    std::optional<LaggedCorrelation> moments;
    if (!shared && analytic_gaussian(cfg.estimator) && !init.empty()) {
        std::set<VarLag> columns;
        for (const auto& [target, initial] : init) {
            for (const auto& c : initial)
                if (!cfg.window.contains(c.lag)) throw InputError("candidate lag outside the window for " + target);
            columns.insert({target, 0});
            columns.insert(initial.begin(), initial.end());
        }
        moments.emplace(data, cfg.window.tau_max, columns);
    }

    ParentMap out;
    std::size_t count = 0;
    for (const auto& [target, initial] : init) {
        std::vector<ParentLink> survivors;
        for (const auto& c : initial) {
            if (!cfg.window.contains(c.lag)) throw InputError("candidate lag outside the window for " + target);
            survivors.push_back({c, 0.0, 1.0});
        }
        for (int k = 0; k <= cfg.max_conditioning_dim; ++k) {
            if (survivors.size() < static_cast<std::size_t>(k) + 1) break;
            std::vector<ParentLink> ranked = survivors;
            std::sort(ranked.begin(), ranked.end(), stronger);

            std::vector<ParentLink> kept;
            for (const auto& cand : survivors) {
                CmiQuery q;
                q.data = &data;
                q.window = cfg.window;
                q.moments = moments ? &*moments : shared;
                q.x = {cand.parent};
                q.y = {{target, 0}};
                for (const auto& r : ranked) {
                    if (static_cast<int>(q.z.size()) == k) break;
                    if (r.parent != cand.parent) q.z.push_back(r.parent);
                }
                const TestResult res = test_dependence(q, cfg.estimator, cfg.alpha);
                ++count;
                if (retain_link(res.p_value, cfg.alpha)) kept.push_back({cand.parent, res.statistic, res.p_value});
            }
            survivors = std::move(kept);
        }
        std::sort(survivors.begin(), survivors.end(), stronger);
        out[target] = ParentSet{target, std::move(survivors)};
    }
    if (tests) *tests += count;
    return out;
}

CausalGraph mci_phase(const TimeSeriesDataset& data, const ParentMap& parents, const CandidateMap& links,
                      const DiscoveryConfig& cfg, std::size_t* tests) {
    cfg.validate();
    const auto cap = static_cast<std::size_t>(cfg.max_parents_in_mci);
    auto capped = [&](const std::string& owner, const VarLag* exclude) {
        ParentSet out{owner, {}};
        auto it = parents.find(owner);
        if (it == parents.end()) return out;
        std::vector<ParentLink> sorted = it->second.parents;
        std::sort(sorted.begin(), sorted.end(), stronger);
        for (const auto& p : sorted) {
            if (out.parents.size() == cap) break;
            if (exclude && p.parent == *exclude) continue;
            out.parents.push_back(p);
        }
        return out;
    };

    struct Planned {
        VarLag link;
        std::string target;
        ParentSet p_target;
        ParentSet p_source;
    };
    std::vector<Planned> plan;
    std::set<VarLag> columns;
    for (const auto& [target, candidates] : links) {
        for (const auto& link : candidates) {
            if (!cfg.window.contains(link.lag)) throw InputError("link lag outside the window for " + target);
            Planned p{link, target, capped(target, &link), capped(link.var, nullptr)};
            columns.insert({target, 0});
            columns.insert(link);
            for (const auto& z : mci_conditioning_set(link, p.p_target, p.p_source, cfg.window)) columns.insert(z);
            plan.push_back(std::move(p));
        }
    }
    std::optional<LaggedCorrelation> moments;
    if (analytic_gaussian(cfg.estimator) && !plan.empty()) moments.emplace(data, 2 * cfg.window.tau_max, columns);

    std::vector<LaggedEdge> edges;
    std::size_t count = 0;
    for (const auto& p : plan) {
        const TestResult r = mci_statistic(p.link, p.target, p.p_target, p.p_source, data, cfg.window, cfg.estimator,
                                           cfg.alpha, moments ? &*moments : nullptr);
        ++count;
        if (retain_link(r.p_value, cfg.alpha)) edges.push_back({p.link.var, p.link.lag, p.target, r.statistic, r.p_value});
    }
    if (tests) *tests += count;
    return CausalGraph(data.var_names(), std::move(edges), cfg.window, cfg.alpha);
}

CausalGraph mci_phase(const TimeSeriesDataset& data, const ParentMap& parents, const DiscoveryConfig& cfg,
                      std::size_t* tests) {
    CandidateMap links;
    for (const auto& [target, set] : parents) {
        auto& l = links[target];
        for (const auto& p : set.parents) l.push_back(p.parent);
    }
    return mci_phase(data, parents, links, cfg, tests);
}

DiscoveryRun discover(const TimeSeriesDataset& data, const DiscoveryConfig& cfg) {
    cfg.validate();
    DiscoveryRun run;
    const auto start = Clock::now();

    // The filter and the PC phase share one alignment, so one correlation
    // table serves both; PC reads only the columns of the selected variables.
    std::optional<LaggedCorrelation> moments;
    if (analytic_gaussian(cfg.estimator)) moments.emplace(data, cfg.window.tau_max);
    const LaggedCorrelation* shared = moments ? &*moments : nullptr;

    const TimeSeriesDataset* working = &data;
    TimeSeriesDataset shrunk;
    CandidateMap init;
    if (cfg.constrained) {
        const auto t0 = Clock::now();
        run.filter = select_features(data, cfg.alpha, cfg.window, cfg.estimator, shared);
        shrunk = shrink(data, *run.filter);
        run.timings.filter_ms = elapsed_ms(t0);
        run.tests.filter = run.filter->tests;
        working = &shrunk;
        init = structure_candidates(run.filter->structure, shrunk);
    } else {
        init = full_candidates(data, cfg.window);
    }

    if (working->empty()) {
        run.graph = CausalGraph({}, {}, cfg.window, cfg.alpha);
    } else {
        auto t1 = Clock::now();
        run.pc_parents = pc_phase(data, init, cfg, &run.tests.pc, shared);
        run.timings.pc_ms = elapsed_ms(t1);
        auto t2 = Clock::now();
        run.graph = cfg.mci_scope == MciScope::candidates
                        ? mci_phase(*working, run.pc_parents, init, cfg, &run.tests.mci)
                        : mci_phase(*working, run.pc_parents, cfg, &run.tests.mci);
        run.timings.mci_ms = elapsed_ms(t2);
    }
    run.timings.total_ms = elapsed_ms(start);
    log::info("discover ({}): {} nodes, {} edges, {:.1f} ms", cfg.constrained ? "fpcmci" : "pcmci",
              run.graph.nodes().size(), run.graph.edges().size(), run.timings.total_ms);
    return run;
}

nlohmann::ordered_json config_to_json(const DiscoveryConfig& cfg) {
    nlohmann::ordered_json j;
    j["mode"] = cfg.constrained ? "fpcmci" : "pcmci";
    j["alpha"] = cfg.alpha;
    j["tau_min"] = cfg.window.tau_min;
    j["tau_max"] = cfg.window.tau_max;
    j["max_conditioning_dim"] = cfg.max_conditioning_dim;
    j["max_parents_in_mci"] = cfg.max_parents_in_mci;
    j["mci_scope"] = cfg.mci_scope == MciScope::candidates ? "candidates" : "pc_parents";
    j["estimator"] = cfg.estimator.kind == EstimatorKind::gaussian ? "gaussian" : "knn";
    j["knn_k"] = cfg.estimator.knn_k;
    j["surrogates"] = cfg.estimator.surrogates;
    j["seed"] = cfg.estimator.seed;
    return j;
}

nlohmann::ordered_json run_report_json(const DiscoveryRun& run, const DiscoveryConfig& cfg) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(cfg);
    j["timings_ms"] = {{"filter", run.timings.filter_ms},
                       {"pc", run.timings.pc_ms},
                       {"mci", run.timings.mci_ms},
                       {"total", run.timings.total_ms}};
    j["test_counts"] = {{"filter", run.tests.filter}, {"pc", run.tests.pc}, {"mci", run.tests.mci}};
    j["graph"] = nlohmann::ordered_json::parse(serialize_graph(run.graph, GraphFormat::json));
    if (run.filter) j["filter"] = filter_to_json(*run.filter);
    return j;
}

}  // namespace causa
