#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "causa/discovery.hpp"
#include "causa/metrics.hpp"
#include "causa/synth.hpp"

namespace py = pybind11;
using namespace causa;

namespace {

using LagPair = std::pair<std::string, int>;

std::vector<VarLag> to_varlags(const std::vector<LagPair>& in) {
    std::vector<VarLag> out;
    for (const auto& [v, lag] : in) out.push_back({v, lag});
    return out;
}

EstimatorKind parse_kind(const std::string& s) {
    if (s == "gaussian") return EstimatorKind::gaussian;
    if (s == "knn") return EstimatorKind::knn;
    throw InputError("unknown estimator '" + s + "' (gaussian or knn)");
}

std::string kind_name(EstimatorKind k) { return k == EstimatorKind::gaussian ? "gaussian" : "knn"; }

CmiQuery make_query(const TimeSeriesDataset& data, const std::vector<LagPair>& x, const std::vector<LagPair>& y,
                    const std::vector<LagPair>& z, const LagWindow& window, int alignment_lag) {
    CmiQuery q;
    q.data = &data;
    q.x = to_varlags(x);
    q.y = to_varlags(y);
    q.z = to_varlags(z);
    q.window = window;
    q.alignment_lag = alignment_lag;
    return q;
}

py::dict timings_dict(const StageTimings& t) {
    py::dict d;
    d["filter"] = t.filter_ms;
    d["pc"] = t.pc_ms;
    d["mci"] = t.mci_ms;
    d["total"] = t.total_ms;
    return d;
}

}  // namespace

PYBIND11_MODULE(_causa, m) {
    m.doc() = "Filtered causal discovery (transfer-entropy filter + PCMCI) for multivariate time series";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<EstimationError>(m, "EstimationError", base.ptr());

    py::class_<LagWindow>(m, "LagWindow")
        .def(py::init(&LagWindow::make), py::arg("tau_min") = 1, py::arg("tau_max") = 1)
        .def_readonly("tau_min", &LagWindow::tau_min)
        .def_readonly("tau_max", &LagWindow::tau_max)
        .def("__eq__", [](const LagWindow& a, const LagWindow& b) { return a == b; })
        .def("__repr__", [](const LagWindow& w) {
            return "LagWindow(" + std::to_string(w.tau_min) + ", " + std::to_string(w.tau_max) + ")";
        });

    py::class_<TimeSeriesDataset>(m, "TimeSeriesDataset")
        .def(py::init<std::vector<std::string>, Eigen::MatrixXd>(), py::arg("var_names"), py::arg("values"))
        .def_property_readonly("var_names", &TimeSeriesDataset::var_names)
        .def_property_readonly("values", [](const TimeSeriesDataset& d) { return Eigen::MatrixXd(d.values()); })
        .def_property_readonly("num_vars", &TimeSeriesDataset::num_vars)
        .def_property_readonly("num_samples", &TimeSeriesDataset::num_samples)
        .def("select", [](const TimeSeriesDataset& d, const std::vector<std::string>& names) { return d.select(names); })
        .def("__len__", &TimeSeriesDataset::num_samples);

    m.def("load_csv", &load_csv, py::arg("path"), py::arg("delimiter") = ',');
    m.def("parse_csv", [](const std::string& text, char delimiter) { return parse_csv(text, delimiter); },
          py::arg("text"), py::arg("delimiter") = ',');
    m.def("format_csv", &format_csv, py::arg("data"), py::arg("delimiter") = ',');

    py::class_<LaggedEdge>(m, "LaggedEdge")
        .def_readonly("source", &LaggedEdge::source)
        .def_readonly("lag", &LaggedEdge::lag)
        .def_readonly("target", &LaggedEdge::target)
        .def_readonly("statistic", &LaggedEdge::statistic)
        .def_readonly("p_value", &LaggedEdge::p_value)
        .def("key", [](const LaggedEdge& e) { return py::make_tuple(e.source, e.lag, e.target); })
        .def("__repr__", [](const LaggedEdge& e) {
            return "LaggedEdge(" + e.source + " -" + std::to_string(e.lag) + "-> " + e.target + ")";
        });

    py::class_<CausalGraph>(m, "CausalGraph")
        .def(py::init([](std::vector<std::string> nodes, const std::vector<py::tuple>& edges, LagWindow window,
                         double alpha) {
                 std::vector<LaggedEdge> es;
                 for (const auto& t : edges) {
                     if (t.size() != 3 && t.size() != 5) throw InputError("edges are (source, lag, target[, stat, p])");
                     LaggedEdge e{t[0].cast<std::string>(), t[1].cast<int>(), t[2].cast<std::string>(), 0.0, 0.0};
                     if (t.size() == 5) {
                         e.statistic = t[3].cast<double>();
                         e.p_value = t[4].cast<double>();
                     }
                     es.push_back(std::move(e));
                 }
                 return CausalGraph(std::move(nodes), std::move(es), window, alpha);
             }),
             py::arg("nodes"), py::arg("edges"), py::arg("window") = LagWindow{1, 1}, py::arg("alpha") = 0.05)
        .def_property_readonly("nodes", &CausalGraph::nodes)
        .def_property_readonly("edges", &CausalGraph::edges)
        .def_property_readonly("lag_window", &CausalGraph::lag_window)
        .def_property_readonly("alpha", &CausalGraph::alpha)
        .def("has_edge", [](const CausalGraph& g, const std::string& s, int lag, const std::string& t) {
            return g.has_edge(s, lag, t);
        })
        .def("edge_keys", [](const CausalGraph& g) {
            std::vector<std::tuple<std::string, int, std::string>> out;
            for (const auto& e : g.edges()) out.emplace_back(e.source, e.lag, e.target);
            return out;
        })
        .def("to_json", [](const CausalGraph& g) { return serialize_graph(g, GraphFormat::json); })
        .def("to_dot", [](const CausalGraph& g) { return serialize_graph(g, GraphFormat::dot); })
        .def_static("from_json", [](const std::string& s) { return parse_graph(s); })
        .def("__eq__", [](const CausalGraph& a, const CausalGraph& b) { return a == b; });

    py::class_<EstimatorConfig>(m, "EstimatorConfig")
        .def(py::init([](const std::string& kind, int knn_k, int surrogates, std::uint64_t seed) {
                 EstimatorConfig c{parse_kind(kind), knn_k, surrogates, seed};
                 c.validate();
                 return c;
             }),
             py::arg("kind") = "gaussian", py::arg("knn_k") = 4, py::arg("surrogates") = 0, py::arg("seed") = 0)
        .def_property_readonly("kind", [](const EstimatorConfig& c) { return kind_name(c.kind); })
        .def_readonly("knn_k", &EstimatorConfig::knn_k)
        .def_readonly("surrogates", &EstimatorConfig::surrogates)
        .def_readonly("seed", &EstimatorConfig::seed);

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("statistic", &TestResult::statistic)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("dof_or_surrogates", &TestResult::dof_or_surrogates);

    m.def(
        "estimate_cmi",
        [](const TimeSeriesDataset& data, const std::vector<LagPair>& x, const std::vector<LagPair>& y,
           const std::vector<LagPair>& z, LagWindow window, const EstimatorConfig& config, int alignment_lag) {
            return estimate_cmi(make_query(data, x, y, z, window, alignment_lag), config);
        },
        py::arg("data"), py::arg("x"), py::arg("y"), py::arg("z") = std::vector<LagPair>{},
        py::arg("window") = LagWindow{1, 1}, py::arg("config") = EstimatorConfig{}, py::arg("alignment_lag") = 0,
        "I(X; Y | Z) in nats. Variables are (name, lag) pairs.");
    m.def(
        "test_dependence",
        [](const TimeSeriesDataset& data, const std::vector<LagPair>& x, const std::vector<LagPair>& y,
           const std::vector<LagPair>& z, LagWindow window, const EstimatorConfig& config, double alpha,
           int alignment_lag) {
            return test_dependence(make_query(data, x, y, z, window, alignment_lag), config, alpha);
        },
        py::arg("data"), py::arg("x"), py::arg("y"), py::arg("z") = std::vector<LagPair>{},
        py::arg("window") = LagWindow{1, 1}, py::arg("config") = EstimatorConfig{}, py::arg("alpha") = 0.05,
        py::arg("alignment_lag") = 0);
    m.def(
        "te_score",
        [](const std::string& source, const std::string& target, const std::set<std::string>& cond_set,
           const TimeSeriesDataset& data, LagWindow window, const EstimatorConfig& config, double alpha) {
            return te_score(source, target, cond_set, data, window, config, alpha);
        },
        py::arg("source"), py::arg("target"), py::arg("cond_set") = std::set<std::string>{}, py::arg("data"),
        py::arg("window") = LagWindow{1, 1}, py::arg("config") = EstimatorConfig{}, py::arg("alpha") = 0.05);

    py::class_<FilterResult>(m, "FilterResult")
        .def_readonly("selected_vars", &FilterResult::selected_vars)
        .def_readonly("tests", &FilterResult::tests)
        .def_property_readonly("structure",
                               [](const FilterResult& r) {
                                   std::map<std::string, std::vector<LagPair>> out;
                                   for (const auto& [t, cands] : r.structure.candidates)
                                       for (const auto& c : cands) out[t].emplace_back(c.var, c.lag);
                                   return out;
                               })
        .def("to_json", [](const FilterResult& r) { return filter_to_json(r).dump(2); });

    m.def(
        "select_features",
        [](const TimeSeriesDataset& data, double alpha, LagWindow window, const EstimatorConfig& config) {
            return select_features(data, alpha, window, config);
        },
        py::arg("data"), py::arg("alpha") = 0.05, py::arg("window") = LagWindow{1, 1},
        py::arg("config") = EstimatorConfig{});
    m.def("shrink", &shrink, py::arg("data"), py::arg("result"));

    py::class_<DiscoveryConfig>(m, "DiscoveryConfig")
        .def(py::init([](double alpha, LagWindow window, int max_conditioning_dim, int max_parents_in_mci,
                         const EstimatorConfig& estimator, const std::string& mode, const std::string& mci_scope) {
                 if (mode != "fpcmci" && mode != "pcmci") throw InputError("mode must be fpcmci or pcmci");
                 if (mci_scope != "candidates" && mci_scope != "pc_parents") {
                     throw InputError("mci_scope must be candidates or pc_parents");
                 }
                 DiscoveryConfig c{alpha,     window, max_conditioning_dim, max_parents_in_mci, estimator,
                                   mode == "fpcmci", mci_scope == "candidates" ? MciScope::candidates : MciScope::pc_parents};
                 c.validate();
                 return c;
             }),
             py::arg("alpha") = 0.05, py::arg("window") = LagWindow{1, 1}, py::arg("max_conditioning_dim") = 3,
             py::arg("max_parents_in_mci") = 5, py::arg("estimator") = EstimatorConfig{},
             py::arg("mode") = "fpcmci", py::arg("mci_scope") = "candidates")
        .def_readonly("alpha", &DiscoveryConfig::alpha)
        .def_readonly("window", &DiscoveryConfig::window)
        .def_readonly("estimator", &DiscoveryConfig::estimator)
        .def_property_readonly("mode", [](const DiscoveryConfig& c) { return c.constrained ? "fpcmci" : "pcmci"; });

    py::class_<DiscoveryRun>(m, "DiscoveryRun")
        .def_readonly("graph", &DiscoveryRun::graph)
        .def_readonly("filter", &DiscoveryRun::filter)
        .def_property_readonly("timings_ms", [](const DiscoveryRun& r) { return timings_dict(r.timings); })
        .def_property_readonly("test_counts", [](const DiscoveryRun& r) {
            py::dict d;
            d["filter"] = r.tests.filter;
            d["pc"] = r.tests.pc;
            d["mci"] = r.tests.mci;
            return d;
        });

    m.def("discover", &discover, py::arg("data"), py::arg("config") = DiscoveryConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_report_json",
        [](const DiscoveryRun& run, const DiscoveryConfig& cfg) { return run_report_json(run, cfg).dump(2); },
        py::arg("run"), py::arg("config"));

    m.def(
        "generate_toy",
        [](const std::string& system, int n_vars, int n_samples, std::uint64_t seed, int extra_noise_vars) {
            ToySystemSpec spec;
            spec.system = parse_toy_system(system);
            spec.n_vars = n_vars;
            spec.n_samples = n_samples;
            spec.seed = seed;
            spec.extra_noise_vars = extra_noise_vars;
            SyntheticData sd = generate_toy(spec);
            return py::make_tuple(std::move(sd.data), std::move(sd.truth.graph));
        },
        py::arg("system") = "s1", py::arg("n_vars") = 7, py::arg("n_samples") = 1500, py::arg("seed") = 0,
        py::arg("extra_noise_vars") = 0, "Returns (dataset, ground-truth graph).");
    m.def(
        "generate_var",
        [](int n_vars, int n_samples, double density, double coeff_lo, double coeff_hi, LagWindow window,
           std::uint64_t seed) {
            SyntheticData sd = generate_var(n_vars, n_samples, density, Range{coeff_lo, coeff_hi}, window, seed);
            return py::make_tuple(std::move(sd.data), std::move(sd.truth.graph));
        },
        py::arg("n_vars"), py::arg("n_samples"), py::arg("density") = 0.3, py::arg("coeff_lo") = 0.5,
        py::arg("coeff_hi") = 0.9, py::arg("window") = LagWindow{1, 1}, py::arg("seed") = 0,
        "Random stable linear VAR. Returns (dataset, ground-truth graph).");

    py::class_<EvaluationReport>(m, "EvaluationReport")
        .def_readonly("shd", &EvaluationReport::shd)
        .def_readonly("f1", &EvaluationReport::f1)
        .def_readonly("precision", &EvaluationReport::precision)
        .def_readonly("recall", &EvaluationReport::recall)
        .def_readonly("tp", &EvaluationReport::tp)
        .def_readonly("fp", &EvaluationReport::fp)
        .def_readonly("fn", &EvaluationReport::fn);
    m.def("score_graph", &score_graph, py::arg("estimated"), py::arg("truth"));
    m.def("nmae", [](const std::vector<double>& a, const std::vector<double>& p) { return nmae(a, p); },
          py::arg("actual"), py::arg("predicted"));
    m.def("nrmse", [](const std::vector<double>& a, const std::vector<double>& p) { return nrmse(a, p); },
          py::arg("actual"), py::arg("predicted"));
}
