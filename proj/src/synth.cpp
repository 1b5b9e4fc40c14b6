#include "causa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace causa {

namespace {

double saturate(double v) { return std::clamp(v, -kSaturation, kSaturation); }

/// Keeps 1 + c*x at least 1e-3 away from zero, preserving its sign.
double guarded(double den) {
    constexpr double floor = 1e-3;
    if (std::abs(den) >= floor) return den;
    return den < 0.0 ? -floor : floor;
}

std::string var_name(std::size_t i) { return "x" + std::to_string(i); }

void check_range(const Range& r, const char* what) {
    if (!(r.lo < r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw InputError(std::string(what) + " range must be a nonempty finite interval");
    }
}

void center_columns(Eigen::MatrixXd& m) { m.rowwise() -= m.colwise().mean(); }

struct EdgeSpec {
    std::size_t source;
    int lag;
    std::size_t target;
    double coefficient;
};

}  // namespace

int max_lag(ToySystem system) noexcept { return system == ToySystem::S1 ? 1 : 2; }

LagWindow default_window(ToySystem system) noexcept { return LagWindow{1, max_lag(system)}; }

std::string to_string(ToySystem system) { return system == ToySystem::S1 ? "s1" : "s2"; }

ToySystem parse_toy_system(std::string_view name) {
    if (name == "s1" || name == "S1") return ToySystem::S1;
    if (name == "s2" || name == "S2") return ToySystem::S2;
    throw InputError("unknown system '" + std::string(name) + "' (expected s1 or s2)");
}

void ToySystemSpec::validate() const {
    if (n_vars < 3 || n_vars > 7) throw InputError("n_vars must lie in [3, 7], got " + std::to_string(n_vars));
    if (n_samples < 50) throw InputError("n_samples must be >= 50, got " + std::to_string(n_samples));
    if (extra_noise_vars < 0) throw InputError("extra_noise_vars must be >= 0");
    check_range(effective_coeff_range(), "coefficient");
    check_range(noise_range, "noise");
}

Range ToySystemSpec::effective_coeff_range() const {
    if (coeff_range) return *coeff_range;
    return system == ToySystem::S1 ? Range{0.0, 1.0} : Range{0.0, 10.0};
}

SyntheticData generate_toy(const ToySystemSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const Range cr = spec.effective_coeff_range();
    std::uniform_real_distribution<double> coeff(cr.lo, cr.hi);
    std::uniform_real_distribution<double> noise(spec.noise_range.lo, spec.noise_range.hi);

    // All coefficients of the full system are drawn in a fixed order so that
    // smaller n_vars configurations share coefficients with larger ones.
    const int n_coeffs = spec.system == ToySystem::S1 ? 11 : 8;
    std::vector<double> c(static_cast<std::size_t>(n_coeffs));
    for (auto& v : c) v = coeff(rng);

    const auto n = static_cast<std::size_t>(spec.n_vars);
    const auto extra = static_cast<std::size_t>(spec.extra_noise_vars);
    const int lag = max_lag(spec.system);
    const Eigen::Index steps = kBurnIn + spec.n_samples;
    Eigen::MatrixXd x(steps, static_cast<Eigen::Index>(n + extra));

    for (Eigen::Index t = 0; t < lag; ++t)
        for (Eigen::Index i = 0; i < x.cols(); ++i) x(t, i) = noise(rng);

    std::vector<EdgeSpec> edges;
    if (spec.system == ToySystem::S1) {
        const double c00 = c[0], c01 = c[1], c02 = c[2], c21 = c[3], c22 = c[4], c33 = c[5], c41 = c[6], c42 = c[7],
                     c43 = c[8], c60 = c[9], c65 = c[10];
        edges = {{0, 1, 0, c00}, {1, 1, 0, c01}, {2, 1, 0, c02}, {1, 1, 2, c21}, {2, 1, 2, c22}, {3, 1, 3, 1.0},
                 {1, 1, 4, c41}, {2, 1, 4, c42}, {3, 1, 4, c43}, {0, 1, 6, c60}, {5, 1, 6, c65}};
        for (Eigen::Index t = 1; t < steps; ++t) {
            auto p = [&](Eigen::Index i) { return x(t - 1, i); };
            std::vector<double> eta(n + extra);
            for (auto& e : eta) e = noise(rng);
            std::vector<double> v(n);
            v[0] = c00 * p(0) - c01 * p(1) * c02 * p(2) + eta[0];
            v[1] = eta[1];
            v[2] = c21 * p(1) / guarded(1.0 + c22 * p(2)) + eta[2];
            if (n > 3) v[3] = c33 + std::sqrt(std::max(p(3), 0.0)) + eta[3];
            if (n > 4) v[4] = c41 * p(1) * c42 * p(2) / guarded(1.0 + c43 * p(3)) + eta[4];
            if (n > 5) v[5] = eta[5];
            if (n > 6) v[6] = c60 * p(0) / guarded(1.0 + c65 * p(5)) + eta[6];
            for (std::size_t i = 0; i < n; ++i) x(t, static_cast<Eigen::Index>(i)) = saturate(v[i]);
            for (std::size_t i = n; i < n + extra; ++i) x(t, static_cast<Eigen::Index>(i)) = eta[i];
        }
    } else {
        const double c01 = c[0], c02 = c[1], c21 = c[2], c33 = c[3], c42 = c[4], c43 = c[5], c50 = c[6], c55 = c[7];
        edges = {{1, 2, 0, c01}, {2, 1, 0, c02}, {1, 2, 2, c21}, {3, 1, 3, 1.0},
                 {2, 2, 4, c42}, {3, 1, 4, c43}, {0, 1, 5, c50}, {5, 2, 5, c55}};
        for (Eigen::Index t = 2; t < steps; ++t) {
            auto p = [&](Eigen::Index i, int back) { return x(t - back, i); };
            std::vector<double> eta(n + extra);
            for (auto& e : eta) e = noise(rng);
            std::vector<double> v(n);
            v[0] = c01 * p(1, 2) * c02 * p(2, 1) + eta[0];
            v[1] = eta[1];
            v[2] = c21 * p(1, 2) * p(1, 2) + eta[2];
            if (n > 3) v[3] = c33 + p(3, 1) + eta[3];
            if (n > 4) v[4] = c42 * p(2, 2) - c43 * p(3, 1) + eta[4];
            if (n > 5) v[5] = c50 * p(0, 1) / guarded(1.0 + c55 * p(5, 2)) + eta[5];
            if (n > 6) v[6] = eta[6];
            for (std::size_t i = 0; i < n; ++i) x(t, static_cast<Eigen::Index>(i)) = saturate(v[i]);
            for (std::size_t i = n; i < n + extra; ++i) x(t, static_cast<Eigen::Index>(i)) = eta[i];
        }
    }
    for (Eigen::Index t = 0; t < steps; ++t) {
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            if (!std::isfinite(x(t, i))) {
                throw EstimationError("numeric overflow at step " + std::to_string(t) + " in " +
                                      var_name(static_cast<std::size_t>(i)));
            }
        }
    }

    Eigen::MatrixXd kept = x.bottomRows(spec.n_samples);
    center_columns(kept);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n + extra; ++i) names.push_back(var_name(i));

    // With n_vars >= 3 every retained equation only references retained
    // variables, so truncating the system drops whole equations.
    GroundTruth truth;
    std::vector<LaggedEdge> gt_edges;
    for (const auto& e : edges) {
        if (e.source >= n || e.target >= n) continue;
        gt_edges.push_back({var_name(e.source), e.lag, var_name(e.target), 0.0, 0.0});
        truth.coefficients[{var_name(e.source), e.lag, var_name(e.target)}] = e.coefficient;
    }
    truth.graph = CausalGraph(names, std::move(gt_edges), default_window(spec.system), 1.0);
    return {TimeSeriesDataset(std::move(names), std::move(kept)), std::move(truth)};
}

double VarModel::spectral_radius() const {
    const auto n = static_cast<Eigen::Index>(names.size());
    const Eigen::Index p = window.tau_max;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * p, n * p);
    for (const auto& term : terms) {
        companion(static_cast<Eigen::Index>(term.target), (term.lag - 1) * n + static_cast<Eigen::Index>(term.source)) +=
            term.coefficient;
    }
    if (p > 1) companion.bottomLeftCorner(n * (p - 1), n * (p - 1)).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

GroundTruth VarModel::ground_truth() const {
    GroundTruth truth;
    std::vector<LaggedEdge> edges;
    for (const auto& t : terms) {
        edges.push_back({names.at(t.source), t.lag, names.at(t.target), 0.0, 0.0});
        truth.coefficients[{names.at(t.source), t.lag, names.at(t.target)}] = t.coefficient;
    }
    truth.graph = CausalGraph(names, std::move(edges), window, 1.0);
    return truth;
}

SyntheticData simulate_var(const VarModel& model, int n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw InputError("n_samples must be >= 2");
    LagWindow::make(model.window.tau_min, model.window.tau_max);
    for (const auto& t : model.terms) {
        if (t.source >= model.names.size() || t.target >= model.names.size() || !model.window.contains(t.lag)) {
            throw InputError("VAR term outside the model's variables or lag window");
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> innovation(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(model.names.size());
    const Eigen::Index steps = kBurnIn + n_samples;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(steps, n);
    for (Eigen::Index t = 0; t < steps; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) x(t, i) = innovation(rng);
        for (const auto& term : model.terms) {
            if (t - term.lag < 0) continue;
            x(t, static_cast<Eigen::Index>(term.target)) +=
                term.coefficient * x(t - term.lag, static_cast<Eigen::Index>(term.source));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(x(t, i))) {
                throw EstimationError("numeric overflow at step " + std::to_string(t) + " in " +
                                      model.names[static_cast<std::size_t>(i)]);
            }
        }
    }
    return {TimeSeriesDataset(model.names, x.bottomRows(n_samples)), model.ground_truth()};
}

SyntheticData generate_var(int n_vars, int n_samples, double density, Range coeff_range, LagWindow window,
                           std::uint64_t seed) {
    if (n_vars < 1) throw InputError("n_vars must be >= 1");
    if (!(density >= 0.0 && density <= 1.0)) throw InputError("density must lie in [0, 1]");
    if (!(coeff_range.lo >= 0.0)) throw InputError("coefficient magnitude range must be nonnegative");
    check_range(coeff_range, "coefficient");
    LagWindow::make(window.tau_min, window.tau_max);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> magnitude(coeff_range.lo, coeff_range.hi);

    VarModel model;
    model.window = window;
    for (int i = 0; i < n_vars; ++i) model.names.push_back(var_name(static_cast<std::size_t>(i)));
    for (int s = 0; s < n_vars; ++s)
        for (int lag = window.tau_min; lag <= window.tau_max; ++lag)
            for (int t = 0; t < n_vars; ++t)
                if (unit(rng) < density)
                    model.terms.push_back({static_cast<std::size_t>(s), lag, static_cast<std::size_t>(t), 0.0});

    constexpr double max_radius = 0.95;
    constexpr int max_retries = 1000;
    for (int attempt = 0;; ++attempt) {
        if (attempt > max_retries) {
            throw InputError("no stable VAR coefficients found after " + std::to_string(max_retries) + " retries");
        }
        for (auto& term : model.terms) {
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            term.coefficient = sign * magnitude(rng);
        }
        if (model.spectral_radius() < max_radius) break;
    }
    return simulate_var(model, n_samples, seed ^ 0x5bd1e995ULL);
}

}  // namespace causa
