#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causa/cli.hpp"
#include "causa/core.hpp"
#include "support.hpp"

using namespace causa;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("minutes formatting") {
    CHECK(cli::format_minutes(0.0) == "0'00.000\"");
    CHECK(cli::format_minutes(2332000.0) == "38'52.000\"");
    CHECK(cli::format_minutes(61234.5) == "1'01.235\"");
}

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"nonsense"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
    test::TempDir dir("cli_usage");
    CHECK(run({"generate", "--vars", "9", "--out-dir", dir.path().string()}).code == cli::kExitUsage);
    CHECK(run({"discover", dir / "missing.csv", "--out-dir", dir.path().string()}).code == cli::kExitUsage);
    CHECK(run({"discover", dir / "x.csv", "--alpha", "2"}).code == cli::kExitUsage);
    CHECK(run({"eval", "--graph", dir / "g.json", "--truth", dir / "none.json"}).code == cli::kExitUsage);
    CHECK(run({"benchmark", "--vars", "5..3", "--out-dir", dir.path().string()}).code == cli::kExitUsage);
}

TEST_CASE("generate writes reproducible files") {
    test::TempDir a("cli_gen_a"), b("cli_gen_b");
    const auto r = run({"generate", "--system", "s1", "--vars", "7", "--samples", "1500", "--seed", "1", "--out-dir",
                        a.path().string()});
    REQUIRE(r.code == 0);
    CHECK(run({"generate", "--system", "s1", "--vars", "7", "--samples", "1500", "--seed", "1", "--out-dir",
               b.path().string()})
              .code == 0);
    for (const auto* f : {"s1_n7_seed1.csv", "s1_n7_seed1.truth.json"}) CHECK(read_file(a / f) == read_file(b / f));
    const auto d = load_csv(a / "s1_n7_seed1.csv");
    CHECK(d.num_vars() == 7);
    CHECK(d.num_samples() == 1500);
    CHECK(parse_graph(read_file(a / "s1_n7_seed1.truth.json")).edges().size() == 11);
}

TEST_CASE("discover in both modes") {
    test::TempDir dir("cli_disc");
    REQUIRE(run({"generate", "--system", "s1", "--seed", "3", "--extra-noise", "1", "--name", "data", "--out-dir",
                 dir.path().string()})
                .code == 0);
    const auto fp = (dir.path() / "fp").string();
    const auto pc = (dir.path() / "pc").string();
    const auto r = run({"discover", dir / "data.csv", "--truth", dir / "data.truth.json", "--out-dir", fp,
                        "--emit-filter"});
    REQUIRE(r.code == 0);
    REQUIRE(run({"discover", dir / "data.csv", "--mode", "pcmci", "--out-dir", pc}).code == 0);

    const auto g_fp = parse_graph(read_file(fp + "/graph.json"));
    const auto g_pc = parse_graph(read_file(pc + "/graph.json"));
    CHECK(g_fp.nodes().size() < 8);
    CHECK(g_pc.nodes().size() == 8);
    const auto report = nlohmann::json::parse(read_file(fp + "/report.json"));
    CHECK(report["config"]["mode"] == "fpcmci");
    CHECK(report["timings_ms"].contains("filter"));
    CHECK(report.contains("evaluation"));
    CHECK(report["filter"]["trace"].is_array());
    CHECK(read_file(fp + "/graph.dot").rfind("digraph", 0) == 0);
    CHECK(nlohmann::json::parse(read_file(fp + "/filter.json")).contains("selected_vars"));
}

TEST_CASE("discover outputs are byte-identical across runs, apart from timings") {
    test::TempDir dir("cli_det");
    REQUIRE(run({"generate", "--system", "s2", "--seed", "4", "--name", "d", "--out-dir", dir.path().string()}).code ==
            0);
    for (const auto* mode : {"fpcmci", "pcmci"}) {
        const auto a = (dir.path() / (std::string(mode) + "_a")).string();
        const auto b = (dir.path() / (std::string(mode) + "_b")).string();
        for (const auto& out : {a, b})
            REQUIRE(run({"discover", dir / "d.csv", "--mode", mode, "--tau-max", "2", "--out-dir", out}).code == 0);
        CHECK(read_file(a + "/graph.json") == read_file(b + "/graph.json"));
        CHECK(read_file(a + "/graph.dot") == read_file(b + "/graph.dot"));
        auto ra = nlohmann::json::parse(read_file(a + "/report.json"));
        auto rb = nlohmann::json::parse(read_file(b + "/report.json"));
        ra.erase("timings_ms");
        rb.erase("timings_ms");
        CHECK(ra.dump() == rb.dump());
    }
}

TEST_CASE("degenerate data exits 3, empty CSV exits 2") {
    test::TempDir dir("cli_degen");
    std::string csv = "a,b\n";
    for (int i = 0; i < 100; ++i) csv += std::to_string(i % 7) + ",5\n";
    write_file(dir / "const.csv", csv);
    const auto r = run({"discover", dir / "const.csv", "--out-dir", dir.path().string()});
    CHECK(r.code == cli::kExitEstimation);
    CHECK(r.err.find("zero variance") != std::string::npos);

    write_file(dir / "empty.csv", "\n");
    CHECK(run({"discover", dir / "empty.csv", "--out-dir", dir.path().string()}).code == cli::kExitUsage);
}

TEST_CASE("eval prints the comparison table") {
    test::TempDir dir("cli_eval");
    const LagWindow w{1, 1};
    const CausalGraph truth({"a", "b", "c", "d", "e"},
                            {{"a", 1, "b"}, {"b", 1, "c"}, {"c", 1, "d"}, {"d", 1, "e"}, {"a", 1, "e"}}, w, 1.0);
    const CausalGraph perturbed({"a", "b", "c", "d", "e"},
                                {{"a", 1, "b"}, {"b", 1, "c"}, {"c", 1, "d"}, {"e", 1, "a"}, {"b", 1, "d"}}, w, 1.0);
    write_file(dir / "truth.json", serialize_graph(truth, GraphFormat::json));
    std::filesystem::create_directories(dir.path() / "run");
    write_file(dir / "run/graph.json", serialize_graph(perturbed, GraphFormat::json));
    write_file(dir / "run/report.json", R"({"timings_ms":{"total":2332000.0}})");

    const auto r = run({"eval", "--graph", dir / "truth.json" + ":Truth", "--graph", dir / "run/graph.json" + ":F-PCMCI",
                        "--truth", dir / "truth.json", "--out-dir", dir.path().string()});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, rule, row1, row2;
    std::getline(lines, header);
    std::getline(lines, rule);
    std::getline(lines, row1);
    std::getline(lines, row2);
    CHECK(header == "| Method  | SHD | F1-Score |         Time |");
    CHECK(row1 == "| Truth   |   0 |     1.00 |            - |");
    CHECK(row2 == "| F-PCMCI |   4 |     0.60 |   38'52.000\" |");
    const auto j = nlohmann::json::parse(read_file(dir / "eval.json"));
    CHECK(j["rows"][1]["shd"] == 4);
    CHECK(j["rows"][1]["runtime_ms"] == 2332000.0);
}

TEST_CASE("benchmark row counts and summary") {
    test::TempDir dir("cli_bench");
    const auto small = (dir.path() / "one").string();
    REQUIRE(run({"benchmark", "--system", "s1", "--vars", "3..3", "--repeats", "1", "--samples", "300", "--out-dir",
                 small})
                .code == 0);
    CHECK(read_rows(small + "/benchmark.csv").size() == 3);

    const auto sweep = (dir.path() / "sweep").string();
    REQUIRE(run({"benchmark", "--system", "s2", "--vars", "3..5", "--repeats", "3", "--samples", "400", "--jobs", "3",
                 "--out-dir", sweep})
                .code == 0);
    const auto rows = read_rows(sweep + "/benchmark.csv");
    REQUIRE(rows.size() == 1 + 3 * 3 * 2);
    CHECK(rows[0][0] == "system");

    std::map<std::pair<std::string, std::string>, std::vector<double>> shd, f1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i][10].empty());
        shd[{rows[i][1], rows[i][3]}].push_back(std::stod(rows[i][4]));
        f1[{rows[i][1], rows[i][3]}].push_back(std::stod(rows[i][5]));
    }
    auto mean_sd = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::make_pair(m, std::sqrt(ss / static_cast<double>(v.size() - 1)));
    };
    const auto summary = read_rows(sweep + "/summary.csv");
    REQUIRE(summary.size() == 1 + 3 * 2);
    for (std::size_t i = 1; i < summary.size(); ++i) {
        const auto key = std::make_pair(summary[i][1], summary[i][2]);
        CHECK(summary[i][3] == "3");
        const auto [sm, ss] = mean_sd(shd.at(key));
        const auto [fm, fs] = mean_sd(f1.at(key));
        CHECK(std::stod(summary[i][5]) == doctest::Approx(sm).epsilon(1e-9));
        CHECK(std::stod(summary[i][6]) == doctest::Approx(ss).epsilon(1e-9));
        CHECK(std::stod(summary[i][7]) == doctest::Approx(fm).epsilon(1e-9));
        CHECK(std::stod(summary[i][8]) == doctest::Approx(fs).epsilon(1e-9));
    }
    CHECK(nlohmann::json::parse(read_file(sweep + "/summary.json"))["groups"].size() == 6);
}

TEST_CASE("benchmark results do not depend on --jobs") {
    test::TempDir dir("cli_jobs");
    const auto a = (dir.path() / "a").string();
    const auto b = (dir.path() / "b").string();
    REQUIRE(run({"benchmark", "--vars", "4..5", "--repeats", "2", "--samples", "300", "--jobs", "1", "--out-dir", a})
                .code == 0);
    REQUIRE(run({"benchmark", "--vars", "4..5", "--repeats", "2", "--samples", "300", "--jobs", "4", "--out-dir", b})
                .code == 0);
    const auto ra = read_rows(a + "/benchmark.csv");
    const auto rb = read_rows(b + "/benchmark.csv");
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i)
        for (std::size_t c : {0, 1, 2, 3, 4, 5}) CHECK(ra[i][c] == rb[i][c]);
}
