#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "causa/metrics.hpp"

using namespace causa;

namespace {

CausalGraph graph(std::vector<LaggedEdge> edges, std::vector<std::string> nodes = {"a", "b", "c", "d", "e"}) {
    return CausalGraph(std::move(nodes), std::move(edges), LagWindow{1, 2}, 1.0);
}

const std::vector<LaggedEdge> four{{"a", 1, "b"}, {"b", 1, "c"}, {"c", 2, "d"}, {"d", 1, "e"}};

/// Straightforward recomputation of the normalized errors.
std::pair<double, double> reference_errors(const std::vector<double>& y, const std::vector<double>& p) {
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double var = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        var += (y[i] - mean) * (y[i] - mean);
        abs_sum += std::abs(y[i] - p[i]);
        sq_sum += (y[i] - p[i]) * (y[i] - p[i]);
    }
    const double sd = std::sqrt(var / n);
    return {abs_sum / n / sd, std::sqrt(sq_sum / n) / sd};
}

}  // namespace

TEST_CASE("identical graphs score perfectly") {
    const auto r = score_graph(graph(four), graph(four));
    CHECK(r.shd == 0);
    CHECK(r.f1 == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.tp == 4);
}

TEST_CASE("four spurious edges on top of four true ones") {
    auto est = four;
    for (const LaggedEdge e : {LaggedEdge{"e", 1, "a"}, {"a", 2, "b"}, {"c", 1, "c"}, {"b", 1, "a"}}) est.push_back(e);
    const auto r = score_graph(graph(est), graph(four));
    CHECK(r.shd == 4);
    CHECK(r.fp == 4);
    CHECK(r.fn == 0);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("two deletions and two insertions on a five-node truth") {
    const std::vector<LaggedEdge> truth{{"a", 1, "b"}, {"b", 1, "c"}, {"c", 1, "d"}, {"d", 1, "e"}, {"a", 1, "e"}};
    const std::vector<LaggedEdge> est{{"a", 1, "b"}, {"b", 1, "c"}, {"c", 1, "d"}, {"e", 1, "a"}, {"b", 1, "d"}};
    const auto r = score_graph(graph(est), graph(truth));
    CHECK(r.shd == 4);
    CHECK(r.fp == 2);
    CHECK(r.fn == 2);
    CHECK(r.f1 == doctest::Approx(0.6));
}

TEST_CASE("a wrong lag costs a deletion and an insertion") {
    const auto r = score_graph(graph({{"a", 2, "b"}}), graph({{"a", 1, "b"}}));
    CHECK(r.shd == 2);
}

TEST_CASE("true edges of filtered-away nodes count as missed") {
    const auto est = graph({{"a", 1, "b"}}, {"a", "b"});
    const auto r = score_graph(est, graph(four));
    CHECK(r.tp == 1);
    CHECK(r.fn == 3);
}

TEST_CASE("empty graphs") {
    const auto r = score_graph(graph({}), graph({}));
    CHECK(r.shd == 0);
    CHECK(r.f1 == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(score_graph(graph({}), graph(four)).recall == 0.0);
}

TEST_CASE("SHD is symmetric and f1 bounded") {
    std::mt19937_64 rng(1);
    std::bernoulli_distribution coin(0.3);
    const std::vector<std::string> nodes{"a", "b", "c", "d"};
    auto random_edges = [&] {
        std::vector<LaggedEdge> e;
        for (const auto& s : nodes)
            for (const auto& t : nodes)
                for (int lag = 1; lag <= 2; ++lag)
                    if (coin(rng)) e.push_back({s, lag, t});
        return e;
    };
    for (int i = 0; i < 200; ++i) {
        const auto g1 = graph(random_edges(), nodes);
        const auto g2 = graph(random_edges(), nodes);
        const auto ab = score_graph(g1, g2);
        const auto ba = score_graph(g2, g1);
        CHECK(ab.shd == ba.shd);
        CHECK(ab.fp == ba.fn);
        CHECK(ab.fn == ba.fp);
        CHECK(ab.f1 >= 0.0);
        CHECK(ab.f1 <= 1.0);
        CHECK((ab.shd == 0) == (g1.edges().size() == g2.edges().size() && ab.tp == static_cast<int>(g1.edges().size())));
        if (ab.precision + ab.recall > 0.0)
            CHECK(ab.f1 == doctest::Approx(2 * ab.precision * ab.recall / (ab.precision + ab.recall)));
    }
}

TEST_CASE("normalized errors by hand") {
    const std::vector<double> y{0, 2}, same{0, 2}, flat{1, 1};
    CHECK(nmae(y, same) == 0.0);
    CHECK(nrmse(y, same) == 0.0);
    CHECK(nmae(y, flat) == 1.0);
    CHECK(nrmse(y, flat) == 1.0);
}

TEST_CASE("normalized error preconditions") {
    const std::vector<double> c{3, 3, 3}, p{1, 2, 3}, shortv{1};
    CHECK_THROWS_AS(nmae(c, p), InputError);
    CHECK_THROWS_AS(nrmse(c, p), InputError);
    CHECK_THROWS_AS(nmae(shortv, shortv), InputError);
    CHECK_THROWS_AS(nmae(p, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("normalized errors against an independent recomputation") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> y(37), p(37);
        for (auto& v : y) v = 3.0 * n01(rng) + 1.0;
        for (std::size_t k = 0; k < y.size(); ++k) p[k] = y[k] + n01(rng);
        const auto [mae, rmse] = reference_errors(y, p);
        CHECK(std::abs(nmae(y, p) - mae) <= 1e-12);
        CHECK(std::abs(nrmse(y, p) - rmse) <= 1e-12);
    }
}

TEST_CASE("NRMSE dominates NMAE and both are scale invariant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> y(20), p(20);
        for (auto& v : y) v = u(rng);
        for (auto& v : p) v = u(rng);
        CHECK(nrmse(y, p) >= nmae(y, p));
        std::vector<double> ys(y), ps(p);
        const double k = 0.1 + std::abs(u(rng));
        for (auto& v : ys) v *= k;
        for (auto& v : ps) v *= k;
        CHECK(nmae(ys, ps) == doctest::Approx(nmae(y, p)).epsilon(1e-12));
        CHECK(nrmse(ys, ps) == doctest::Approx(nrmse(y, p)).epsilon(1e-12));
    }
}

TEST_CASE("aggregate") {
    EvaluationReport r;
    r.shd = 2;
    r.f1 = 0.5;
    r.runtime_ms = 10.0;
    const auto one = aggregate(std::vector<EvaluationReport>{r});
    CHECK(one.count == 1);
    CHECK(one.shd.mean == 2.0);
    CHECK(one.shd.sd == 0.0);
    REQUIRE(one.runtime_ms);
    CHECK(one.runtime_ms->mean == 10.0);

    EvaluationReport r2 = r;
    r2.shd = 4;
    r2.runtime_ms.reset();
    const auto two = aggregate(std::vector<EvaluationReport>{r, r2});
    CHECK(two.shd.mean == 3.0);
    CHECK(two.shd.sd == doctest::Approx(std::sqrt(2.0)));
    CHECK_FALSE(two.runtime_ms);

    CHECK_THROWS_AS(aggregate(std::vector<EvaluationReport>{}), InputError);
}

TEST_CASE("aggregate ignores report order") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> shd(0, 20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<EvaluationReport> reports(12);
    for (auto& r : reports) {
        r.shd = shd(rng);
        r.f1 = u(rng);
        r.runtime_ms = 100.0 * u(rng);
    }
    const auto base = aggregate(reports);
    std::shuffle(reports.begin(), reports.end(), rng);
    const auto again = aggregate(reports);
    CHECK(again.shd.mean == doctest::Approx(base.shd.mean).epsilon(1e-15));
    CHECK(again.f1.sd == doctest::Approx(base.f1.sd).epsilon(1e-12));
    CHECK(again.runtime_ms->mean == doctest::Approx(base.runtime_ms->mean).epsilon(1e-12));
}
