#include "causa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "causa/discovery.hpp"
#include "causa/log.hpp"
#include "causa/metrics.hpp"
#include "causa/synth.hpp"

namespace causa::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_minutes(double ms) {
    const auto total = static_cast<long long>(std::llround(std::max(ms, 0.0)));
    return fmt::format("{}'{:02}.{:03}\"", total / 60000, (total % 60000) / 1000, total % 1000);
}

namespace {

struct DiscoveryFlags {
    std::string mode = "fpcmci";
    double alpha = 0.05;
    std::optional<int> tau_min;
    std::optional<int> tau_max;
    std::string estimator = "gaussian";
    int knn_k = 4;
    int surrogates = 0;
    std::uint64_t seed = 0;
    int max_conditioning_dim = 3;
    int max_parents = 5;
    std::string mci_scope = "candidates";
};

void add_discovery_flags(CLI::App* app, DiscoveryFlags& f, bool with_mode) {
    if (with_mode) {
        app->add_option("--mode", f.mode, "fpcmci (filter first) or pcmci")
            ->check(CLI::IsMember({"fpcmci", "pcmci"}))
            ->capture_default_str();
    }
    app->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
    app->add_option("--tau-min", f.tau_min, "Smallest lag");
    app->add_option("--tau-max", f.tau_max, "Largest lag");
    app->add_option("--estimator", f.estimator, "CMI estimator")
        ->check(CLI::IsMember({"gaussian", "knn"}))
        ->capture_default_str();
    app->add_option("--knn-k", f.knn_k, "Neighbours for the knn estimator")->capture_default_str();
    app->add_option("--surrogates", f.surrogates, "Circular-shift surrogates per test (0: analytic)")
        ->capture_default_str();
    app->add_option("--seed", f.seed, "Seed for surrogate draws")->capture_default_str();
    app->add_option("--max-cond-dim", f.max_conditioning_dim, "Largest PC conditioning set")->capture_default_str();
    app->add_option("--max-parents", f.max_parents, "Parents per side in MCI conditions")->capture_default_str();
    app->add_option("--mci-scope", f.mci_scope, "Links MCI validates: every candidate, or PC survivors only")
        ->check(CLI::IsMember({"candidates", "pc-parents"}))
        ->capture_default_str();
}

DiscoveryConfig make_config(const DiscoveryFlags& f, LagWindow fallback) {
    DiscoveryConfig cfg;
    cfg.alpha = f.alpha;
    cfg.window = LagWindow::make(f.tau_min.value_or(fallback.tau_min), f.tau_max.value_or(fallback.tau_max));
    cfg.max_conditioning_dim = f.max_conditioning_dim;
    cfg.max_parents_in_mci = f.max_parents;
    cfg.estimator.kind = f.estimator == "knn" ? EstimatorKind::knn : EstimatorKind::gaussian;
    cfg.estimator.knn_k = f.knn_k;
    cfg.estimator.surrogates = f.surrogates;
    cfg.estimator.seed = f.seed;
    cfg.constrained = f.mode == "fpcmci";
    cfg.mci_scope = f.mci_scope == "pc-parents" ? MciScope::pc_parents : MciScope::candidates;
    cfg.validate();
    return cfg;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

json report_json(const EvaluationReport& r) {
    json j{{"shd", r.shd}, {"f1", r.f1}, {"precision", r.precision}, {"recall", r.recall},
           {"tp", r.tp},   {"fp", r.fp}, {"fn", r.fn}};
    j["runtime_ms"] = r.runtime_ms ? json(*r.runtime_ms) : json(nullptr);
    return j;
}

// generate ------------------------------------------------------------------

struct GenerateArgs {
    std::string system = "s1";
    int vars = 7;
    int samples = 1500;
    std::uint64_t seed = 0;
    int extra_noise = 0;
    std::string name;
    std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    ToySystemSpec spec;
    spec.system = parse_toy_system(a.system);
    spec.n_vars = a.vars;
    spec.n_samples = a.samples;
    spec.seed = a.seed;
    spec.extra_noise_vars = a.extra_noise;
    spec.validate();
    const SyntheticData sd = generate_toy(spec);

    const std::string name = a.name.empty() ? fmt::format("{}_n{}_seed{}", a.system, a.vars, a.seed) : a.name;
    ensure_dir(a.out_dir);
    const auto csv = join(a.out_dir, name + ".csv");
    const auto truth = join(a.out_dir, name + ".truth.json");
    write_csv(sd.data, csv);
    write_file(truth, serialize_graph(sd.truth.graph, GraphFormat::json));
    out << csv << "\n" << truth << "\n";
    return kExitOk;
}

// discover ------------------------------------------------------------------

struct DiscoverArgs {
    std::string input;
    std::string truth;
    std::string out_dir = ".";
    bool emit_filter = false;
    DiscoveryFlags flags;
};

int cmd_discover(const DiscoverArgs& a, std::ostream& out) {
    const DiscoveryConfig cfg = make_config(a.flags, LagWindow{1, 1});
    const TimeSeriesDataset data = load_csv(a.input);
    if (data.num_vars() == 0) throw InputError("'" + a.input + "' has no variables");
    std::optional<CausalGraph> truth;
    if (!a.truth.empty()) truth = parse_graph(read_file(a.truth));

    const DiscoveryRun run = discover(data, cfg);

    json report = run_report_json(run, cfg);
    report["input"] = a.input;
    if (truth) {
        EvaluationReport ev = score_graph(run.graph, *truth);
        ev.runtime_ms = run.timings.total_ms;
        report["evaluation"] = report_json(ev);
    }

    ensure_dir(a.out_dir);
    write_file(join(a.out_dir, "graph.json"), serialize_graph(run.graph, GraphFormat::json));
    write_file(join(a.out_dir, "graph.dot"), serialize_graph(run.graph, GraphFormat::dot));
    write_file(join(a.out_dir, "report.json"), report.dump(2) + "\n");
    if (a.emit_filter && run.filter) write_file(join(a.out_dir, "filter.json"), filter_to_json(*run.filter).dump(2) + "\n");

    out << fmt::format("{}: {} nodes, {} edges, {:.1f} ms\n", a.flags.mode, run.graph.nodes().size(),
                       run.graph.edges().size(), run.timings.total_ms);
    return kExitOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> graphs;
    std::string truth;
    std::string out_dir = ".";
};

struct GraphSpec {
    std::string path;
    std::string label;
};

GraphSpec parse_graph_spec(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) return {s, s};
    return {s.substr(0, colon), s.substr(colon + 1)};
}

/// Total runtime from a report.json sitting next to the graph, when there is one.
std::optional<double> sibling_runtime(const std::string& graph_path) {
    const auto report = fs::path(graph_path).parent_path() / "report.json";
    std::error_code ec;
    if (!fs::is_regular_file(report, ec)) return std::nullopt;
    try {
        const auto j = json::parse(read_file(report.string()));
        return j.at("timings_ms").at("total").get<double>();
    } catch (const std::exception& e) {
        log::warn("ignoring unreadable timing in {}: {}", report.string(), e.what());
        return std::nullopt;
    }
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const CausalGraph truth = parse_graph(read_file(a.truth));
    struct Row {
        GraphSpec spec;
        EvaluationReport report;
    };
    std::vector<Row> rows;
    for (const auto& g : a.graphs) {
        GraphSpec spec = parse_graph_spec(g);
        EvaluationReport r = score_graph(parse_graph(read_file(spec.path)), truth);
        r.runtime_ms = sibling_runtime(spec.path);
        rows.push_back({std::move(spec), r});
    }

    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.spec.label.size());
    out << fmt::format("| {:<{}} | {:>3} | {:>8} | {:>12} |\n", "Method", width, "SHD", "F1-Score", "Time");
    out << fmt::format("|{:-<{}}|{:-<5}|{:-<10}|{:-<14}|\n", "", width + 2, "", "", "");
    for (const auto& r : rows) {
        const std::string time = r.report.runtime_ms ? format_minutes(*r.report.runtime_ms) : "-";
        out << fmt::format("| {:<{}} | {:>3} | {:>8.2f} | {:>12} |\n", r.spec.label, width, r.report.shd, r.report.f1,
                           time);
    }

    json j;
    j["truth"] = a.truth;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        json row{{"label", r.spec.label}, {"graph", r.spec.path}};
        row.update(report_json(r.report));
        j["rows"].push_back(std::move(row));
    }
    ensure_dir(a.out_dir);
    write_file(join(a.out_dir, "eval.json"), j.dump(2) + "\n");
    return kExitOk;
}

// benchmark -----------------------------------------------------------------

struct BenchmarkArgs {
    std::string system = "s1";
    std::string vars = "3..7";
    int repeats = 10;
    int samples = 1500;
    int jobs = 1;
    std::string out_dir = ".";
    DiscoveryFlags flags;
};

std::pair<int, int> parse_range(const std::string& s) {
    auto to_int = [&](std::string_view part) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || ptr != part.data() + part.size()) throw InputError("bad --vars range '" + s + "'");
        return v;
    };
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        const int v = to_int(s);
        return {v, v};
    }
    const int lo = to_int(std::string_view(s).substr(0, dots));
    const int hi = to_int(std::string_view(s).substr(dots + 2));
    if (lo > hi) throw InputError("empty --vars range '" + s + "'");
    return {lo, hi};
}

struct Cell {
    int n_vars = 0;
    std::uint64_t seed = 0;
    bool constrained = true;

    std::optional<EvaluationReport> report;
    StageTimings timings;
    std::string error;
};

void run_cell(Cell& c, const BenchmarkArgs& a, ToySystem system) {
    try {
        ToySystemSpec spec;
        spec.system = system;
        spec.n_vars = c.n_vars;
        spec.n_samples = a.samples;
        spec.seed = c.seed;
        DiscoveryFlags flags = a.flags;
        flags.mode = c.constrained ? "fpcmci" : "pcmci";
        const DiscoveryConfig cfg = make_config(flags, default_window(system));
        const SyntheticData sd = generate_toy(spec);
        const DiscoveryRun run = discover(sd.data, cfg);
        EvaluationReport r = score_graph(run.graph, sd.truth.graph);
        r.runtime_ms = run.timings.total_ms;
        c.report = r;
        c.timings = run.timings;
    } catch (const std::exception& e) {
        c.error = e.what();
        log::warn("benchmark cell n_vars={} seed={} mode={} failed: {}", c.n_vars, c.seed,
                  c.constrained ? "fpcmci" : "pcmci", e.what());
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch == '\n' ? ' ' : ch;
    }
    return out + '"';
}

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
    const ToySystem system = parse_toy_system(a.system);
    const auto [lo, hi] = parse_range(a.vars);
    if (a.repeats < 1) throw InputError("--repeats must be >= 1");
    if (a.jobs < 1) throw InputError("--jobs must be >= 1");
    for (int n = lo; n <= hi; ++n) {
        ToySystemSpec spec;
        spec.system = system;
        spec.n_vars = n;
        spec.n_samples = a.samples;
        spec.validate();
    }
    make_config(a.flags, default_window(system));

    std::vector<Cell> cells;
    for (int n = lo; n <= hi; ++n)
        for (int r = 0; r < a.repeats; ++r)
            for (bool constrained : {true, false})
                cells.push_back({n, a.flags.seed + static_cast<std::uint64_t>(r), constrained, {}, {}, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i], a, system);
    };
    {
        std::vector<std::jthread> pool;
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(a.jobs), cells.size());
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    std::string csv = "system,n_vars,seed,mode,shd,f1,runtime_ms,filter_ms,pc_ms,mci_ms,error\n";
    std::map<std::pair<int, bool>, std::vector<EvaluationReport>> groups;
    std::map<std::pair<int, bool>, std::size_t> failures;
    std::size_t failed = 0;
    for (const auto& c : cells) {
        const std::string mode = c.constrained ? "fpcmci" : "pcmci";
        const auto key = std::make_pair(c.n_vars, !c.constrained);
        if (c.report) {
            csv += fmt::format("{},{},{},{},{},{},{},{},{},{},\n", a.system, c.n_vars, c.seed, mode, c.report->shd,
                               c.report->f1, *c.report->runtime_ms, c.timings.filter_ms, c.timings.pc_ms,
                               c.timings.mci_ms);
            groups[key].push_back(*c.report);
        } else {
            csv += fmt::format("{},{},{},{},,,,,,,{}\n", a.system, c.n_vars, c.seed, mode, csv_field(c.error));
            ++failures[key];
            ++failed;
        }
    }

    std::string summary = "system,n_vars,mode,runs,errors,shd_mean,shd_sd,f1_mean,f1_sd,runtime_ms_mean,runtime_ms_sd\n";
    json sj;
    sj["system"] = a.system;
    sj["repeats"] = a.repeats;
    sj["samples"] = a.samples;
    sj["config"] = config_to_json(make_config(a.flags, default_window(system)));
    sj["groups"] = json::array();
    for (int n = lo; n <= hi; ++n) {
        for (bool pcmci : {false, true}) {
            const auto key = std::make_pair(n, pcmci);
            const std::string mode = pcmci ? "pcmci" : "fpcmci";
            const std::size_t errors = failures.contains(key) ? failures.at(key) : 0;
            json g{{"n_vars", n}, {"mode", mode}, {"errors", errors}};
            auto it = groups.find(key);
            if (it == groups.end()) {
                summary += fmt::format("{},{},{},0,{},,,,,,\n", a.system, n, mode, errors);
                g["runs"] = 0;
                sj["groups"].push_back(std::move(g));
                continue;
            }
            const AggregateReport agg = aggregate(it->second);
            summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", a.system, n, mode, agg.count, errors,
                                   agg.shd.mean, agg.shd.sd, agg.f1.mean, agg.f1.sd, agg.runtime_ms->mean,
                                   agg.runtime_ms->sd);
            g["runs"] = agg.count;
            g["shd"] = {{"mean", agg.shd.mean}, {"sd", agg.shd.sd}};
            g["f1"] = {{"mean", agg.f1.mean}, {"sd", agg.f1.sd}};
            g["precision"] = {{"mean", agg.precision.mean}, {"sd", agg.precision.sd}};
            g["recall"] = {{"mean", agg.recall.mean}, {"sd", agg.recall.sd}};
            g["runtime_ms"] = {{"mean", agg.runtime_ms->mean}, {"sd", agg.runtime_ms->sd}};
            sj["groups"].push_back(std::move(g));
        }
    }

    ensure_dir(a.out_dir);
    write_file(join(a.out_dir, "benchmark.csv"), csv);
    write_file(join(a.out_dir, "summary.csv"), summary);
    write_file(join(a.out_dir, "summary.json"), sj.dump(2) + "\n");
    out << fmt::format("{} runs ({} failed) -> {}\n", cells.size(), failed, join(a.out_dir, "benchmark.csv"));
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Filtered causal discovery for multivariate time series", "causa"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Simulate a toy system and write <name>.csv + <name>.truth.json");
    g->add_option("--system", gen.system, "s1 or s2")->check(CLI::IsMember({"s1", "s2"}))->capture_default_str();
    g->add_option("--vars", gen.vars, "Number of system variables (3..7)")->capture_default_str();
    g->add_option("--samples", gen.samples, "Samples kept after burn-in")->capture_default_str();
    g->add_option("--seed", gen.seed, "Coefficient and noise seed")->capture_default_str();
    g->add_option("--extra-noise", gen.extra_noise, "Isolated noise columns to append")->capture_default_str();
    g->add_option("--name", gen.name, "Output file stem (default <system>_n<vars>_seed<seed>)");
    g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

    DiscoverArgs disc;
    auto* d = app.add_subcommand("discover", "Run F-PCMCI or PCMCI on a CSV");
    d->add_option("input", disc.input, "Dataset CSV (header row of variable names)")->required();
    d->add_option("--truth", disc.truth, "Ground-truth graph JSON to score against");
    d->add_option("--out-dir", disc.out_dir, "Output directory")->capture_default_str();
    d->add_flag("--emit-filter", disc.emit_filter, "Also write filter.json (fpcmci only)");
    add_discovery_flags(d, disc.flags, true);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score graphs against a ground truth");
    e->add_option("--graph", ev.graphs, "Graph JSON, optionally PATH:LABEL; repeatable")->required();
    e->add_option("--truth", ev.truth, "Ground-truth graph JSON")->required();
    e->add_option("--out-dir", ev.out_dir, "Where eval.json goes")->capture_default_str();

    BenchmarkArgs bench;
    auto* b = app.add_subcommand("benchmark", "Sweep both modes over variable counts and seeds");
    b->add_option("--system", bench.system, "s1 or s2")->check(CLI::IsMember({"s1", "s2"}))->capture_default_str();
    b->add_option("--vars", bench.vars, "Variable counts, N or LO..HI")->capture_default_str();
    b->add_option("--repeats", bench.repeats, "Seeds per variable count")->capture_default_str();
    b->add_option("--samples", bench.samples, "Samples per dataset")->capture_default_str();
    b->add_option("--jobs", bench.jobs, "Concurrent runs")->capture_default_str();
    b->add_option("--out-dir", bench.out_dir, "Output directory")->capture_default_str();
    add_discovery_flags(b, bench.flags, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        err << "error: " << pe.what() << "\n";
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front(); sub) {
            err << "run 'causa " << sub->get_name() << " --help' for usage\n";
        } else {
            err << "run 'causa --help' for usage\n";
        }
        return kExitUsage;
    }

    try {
        if (*g) return cmd_generate(gen, out);
        if (*d) return cmd_discover(disc, out);
        if (*e) return cmd_eval(ev, out);
        return cmd_benchmark(bench, out);
    } catch (const InputError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitEstimation;
    }
}

}  // namespace causa::cli
