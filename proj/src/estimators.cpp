#include "causa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace causa {

void EstimatorConfig::validate() const {
    if (knn_k < 1) throw InputError("knn_k must be >= 1");
    if (surrogates < 0) throw InputError("surrogates must be >= 0");
    if (kind == EstimatorKind::knn && surrogates < 1) {
        throw InputError("the knn estimator has no analytic p-value; set surrogates >= 1");
    }
}

std::size_t CmiQuery::effective_samples() const {
    const auto T = data ? data->num_samples() : 0;
    const auto drop = static_cast<std::size_t>(effective_alignment());
    return T > drop ? T - drop : 0;
}

namespace {

std::string label(const VarLag& v) {
    return v.var + "(t-" + std::to_string(v.lag) + ")";
}

void append_labels(std::string& out, const std::vector<VarLag>& vars) {
    out += '[';
    for (const auto& v : vars) out += v.var + ':' + std::to_string(v.lag) + ';';
    out += ']';
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Design {
    Eigen::MatrixXd columns;
    std::vector<std::string> labels;
    int dx = 0;
    int dy = 0;
};

struct Layout {
    std::vector<const VarLag*> vars;
    std::vector<std::string> labels;
    int dx = 0;
    int dy = 0;
    std::size_t samples = 0;
};

Layout check_query(const CmiQuery& q) {
    if (q.data == nullptr) throw InputError("CMI query has no dataset");
    if (q.x.empty() || q.y.empty()) throw InputError("CMI query needs nonempty x and y");
    const int max_lag = q.effective_alignment();

    Layout out;
    std::set<VarLag> seen;
    for (const auto* group : {&q.x, &q.y, &q.z}) {
        for (const auto& v : *group) {
            if (v.lag < 0 || v.lag > max_lag) {
                throw InputError("lag of " + label(v) + " outside [0, " + std::to_string(max_lag) + "]");
            }
            if (!seen.insert(v).second) throw InputError("CMI query sets overlap at " + label(v));
            if (!q.data->has_var(v.var)) throw InputError("unknown variable '" + v.var + "' in CMI query");
            out.vars.push_back(&v);
            out.labels.push_back(label(v));
        }
    }

    const auto dims = out.vars.size();
    out.samples = q.effective_samples();
    if (out.samples <= dims + 2) {
        throw EstimationError("too few aligned samples (" + std::to_string(out.samples) + ") for a " +
                              std::to_string(dims) + "-dimensional CMI query");
    }
    out.dx = static_cast<int>(q.x.size());
    out.dy = static_cast<int>(q.y.size());
    return out;
}

Design build_design(const CmiQuery& q) {
    Layout layout = check_query(q);
    const int max_lag = q.effective_alignment();
    Design d;
    d.columns.resize(static_cast<Eigen::Index>(layout.samples), static_cast<Eigen::Index>(layout.vars.size()));
    Eigen::Index c = 0;
    for (const auto* v : layout.vars) d.columns.col(c++) = aligned_column(*q.data, q.data->index_of(v->var), v->lag, max_lag);
    d.labels = std::move(layout.labels);
    d.dx = layout.dx;
    d.dy = layout.dy;
    return d;
}

/// Center and scale each column to unit variance; constant columns are an error.
Eigen::MatrixXd standardized(const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
    Eigen::MatrixXd out = m.rowwise() - m.colwise().mean();
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double scale = m.col(j).cwiseAbs().maxCoeff();
        const double sd = std::sqrt(out.col(j).squaredNorm() / (n - 1.0));
        if (!(sd > 1e-12 * std::max(scale, 1e-300))) {
            throw EstimationError("degenerate data: column " + labels[static_cast<std::size_t>(j)] +
                                  " has zero variance");
        }
        out.col(j) /= sd;
    }
    return out;
}

double logdet_block(const Eigen::MatrixXd& corr, const std::vector<Eigen::Index>& idx) {
    if (idx.empty()) return 0.0;
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b)
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = corr(idx[a], idx[b]);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    const Eigen::MatrixXd& L = llt.matrixLLT();
    double ld = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) ld += 2.0 * std::log(L(i, i));
    return ld;
}

}  // namespace

std::string CmiQuery::fingerprint() const {
    std::string s = "x";
    append_labels(s, x);
    s += "y";
    append_labels(s, y);
    s += "z";
    append_labels(s, z);
    s += "a" + std::to_string(effective_alignment());
    return s;
}

namespace detail {

double gaussian_cmi(const Eigen::MatrixXd& columns, int dx, int dy, const std::vector<std::string>& labels) {
    const Eigen::MatrixXd std_cols = standardized(columns, labels);
    const double n = static_cast<double>(columns.rows());
    return gaussian_cmi_from_correlation((std_cols.transpose() * std_cols) / (n - 1.0), dx, dy, labels);
}

double gaussian_cmi_from_correlation(Eigen::MatrixXd corr, int dx, int dy, const std::vector<std::string>& labels) {
    const auto d = corr.rows();

    // Rank check before regularization. Cholesky pivots are the partial
    // variances of each column given the ones before it; strongly dependent
    // but non-degenerate columns (trending series) stay well above the
    // threshold while duplicates and exact linear combinations fall to
    // rounding level.
    constexpr double min_partial_variance = 1e-12;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double s = corr(i, j) - L.row(i).head(j).dot(L.row(j).head(j));
            if (j < i) {
                L(i, j) = s / L(j, j);
                continue;
            }
            if (!(s > min_partial_variance)) {
                std::string names;
                for (Eigen::Index k = 0; k < i; ++k) names += (k ? ", " : "") + labels[static_cast<std::size_t>(k)];
                throw EstimationError("degenerate data: column " + labels[static_cast<std::size_t>(i)] +
                                      " is collinear with {" + names + "} (singular covariance)");
            }
            L(i, i) = std::sqrt(s);
        }
    }

    corr.diagonal().array() += 1e-10 * corr.diagonal().mean();
    std::vector<Eigen::Index> xz, yz, zz, all;
    for (Eigen::Index i = 0; i < d; ++i) {
        const bool is_x = i < dx;
        const bool is_y = i >= dx && i < dx + dy;
        if (!is_y) xz.push_back(i);
        if (!is_x) yz.push_back(i);
        if (!is_x && !is_y) zz.push_back(i);
        all.push_back(i);
    }
    return 0.5 * (logdet_block(corr, xz) + logdet_block(corr, yz) - logdet_block(corr, zz) - logdet_block(corr, all));
}

double knn_cmi(const Eigen::MatrixXd& columns, int dx, int dy, int k) {
    std::vector<std::string> labels;
    for (Eigen::Index j = 0; j < columns.cols(); ++j) labels.push_back("column " + std::to_string(j));
    const Eigen::MatrixXd m = standardized(columns, labels);
    const Eigen::Index n = m.rows();
    const Eigen::Index d = m.cols();
    if (k >= n) throw EstimationError("knn_k must be smaller than the sample count");

    // Row-major copy for cache-friendly pairwise scans.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m;
    std::vector<double> dist_x(static_cast<std::size_t>(n)), dist_y(static_cast<std::size_t>(n)),
        dist_z(static_cast<std::size_t>(n)), joint(static_cast<std::size_t>(n));
    using boost::math::digamma;

    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* ri = rows.row(i).data();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double* rj = rows.row(j).data();
            double mx = 0.0, my = 0.0, mz = 0.0;
            Eigen::Index c = 0;
            for (; c < dx; ++c) mx = std::max(mx, std::abs(ri[c] - rj[c]));
            for (; c < dx + dy; ++c) my = std::max(my, std::abs(ri[c] - rj[c]));
            for (; c < d; ++c) mz = std::max(mz, std::abs(ri[c] - rj[c]));
            const auto sj = static_cast<std::size_t>(j);
            dist_x[sj] = mx;
            dist_y[sj] = my;
            dist_z[sj] = mz;
            joint[sj] = std::max({mx, my, mz});
        }
        joint[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
        std::vector<double> sorted = joint;
        std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
        const double eps = sorted[static_cast<std::size_t>(k - 1)];

        long n_xz = 0, n_yz = 0, n_z = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto sj = static_cast<std::size_t>(j);
            const bool in_z = dist_z[sj] < eps;
            if (in_z) ++n_z;
            if (in_z && dist_x[sj] < eps) ++n_xz;
            if (in_z && dist_y[sj] < eps) ++n_yz;
        }
        acc += digamma(static_cast<double>(n_z + 1)) - digamma(static_cast<double>(n_xz + 1)) -
               digamma(static_cast<double>(n_yz + 1));
    }
    return digamma(static_cast<double>(k)) + acc / static_cast<double>(n);
}

double chi2_sf(double x, double dof) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double surrogate_p_value(double observed, const std::vector<double>& surrogate_values) {
    const auto exceed = std::count_if(surrogate_values.begin(), surrogate_values.end(),
                                      [&](double s) { return s >= observed; });
    return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(surrogate_values.size()));
}

}  // namespace detail

namespace {

double estimate_on(const Design& d, const EstimatorConfig& config, const Eigen::MatrixXd& columns) {
    if (config.kind == EstimatorKind::gaussian) return detail::gaussian_cmi(columns, d.dx, d.dy, d.labels);
    return detail::knn_cmi(columns, d.dx, d.dy, config.knn_k);
}

}  // namespace

namespace {

std::set<VarLag> every_column(const TimeSeriesDataset& data, int max_lag) {
    std::set<VarLag> out;
    for (const auto& v : data.var_names())
        for (int lag = 0; lag <= max_lag; ++lag) out.insert({v, lag});
    return out;
}

}  // namespace

LaggedCorrelation::LaggedCorrelation(const TimeSeriesDataset& data, int max_lag)
    : LaggedCorrelation(data, max_lag, every_column(data, std::max(max_lag, 0))) {}

LaggedCorrelation::LaggedCorrelation(const TimeSeriesDataset& data, int max_lag, const std::set<VarLag>& columns)
    : data_(&data), max_lag_(max_lag) {
    if (max_lag < 0) throw InputError("max_lag must be >= 0");
    const Eigen::Index n = static_cast<Eigen::Index>(data.num_samples()) - max_lag;
    if (n < 2) throw EstimationError("too few samples for lag " + std::to_string(max_lag));
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(columns.size()));
    constant_.assign(columns.size(), false);
    Eigen::Index j = 0;
    for (const auto& col : columns) {
        if (col.lag < 0 || col.lag > max_lag) throw InputError("lag of " + label(col) + " outside the cached range");
        Eigen::VectorXd c = aligned_column(data, data.index_of(col.var), col.lag, max_lag);
        const double scale = c.cwiseAbs().maxCoeff();
        c.array() -= c.mean();
        const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(n - 1));
        if (sd > 1e-12 * std::max(scale, 1e-300)) {
            m.col(j) = c / sd;
        } else {
            constant_[static_cast<std::size_t>(j)] = true;
            m.col(j).setZero();
        }
        index_.emplace(col, j++);
    }
    const auto d = m.cols();
    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(d, d);
    lower.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose(), 1.0 / static_cast<double>(n - 1));
    corr_ = lower.selfadjointView<Eigen::Lower>();
}

bool LaggedCorrelation::serves(const CmiQuery& query) const {
    if (query.data != data_ || query.effective_alignment() != max_lag_) return false;
    for (const auto* group : {&query.x, &query.y, &query.z})
        for (const auto& v : *group)
            if (!index_.contains(v)) return false;
    return true;
}

Eigen::Index LaggedCorrelation::index(const VarLag& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw InputError(label(v) + " is not in the correlation cache");
    return it->second;
}

namespace {

double cached_gaussian(const CmiQuery& q, const Layout& layout) {
    const auto& cache = *q.moments;
    const auto d = static_cast<Eigen::Index>(layout.vars.size());
    std::vector<Eigen::Index> idx;
    for (std::size_t a = 0; a < layout.vars.size(); ++a) {
        idx.push_back(cache.index(*layout.vars[a]));
        if (cache.constant(idx.back())) {
            throw EstimationError("degenerate data: column " + layout.labels[a] + " has zero variance");
        }
    }
    Eigen::MatrixXd corr(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            corr(a, b) = cache.matrix()(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    return detail::gaussian_cmi_from_correlation(std::move(corr), layout.dx, layout.dy, layout.labels);
}

bool use_cache(const CmiQuery& q, const EstimatorConfig& config) {
    return q.moments && config.kind == EstimatorKind::gaussian && q.moments->serves(q);
}

}  // namespace

double estimate_cmi_raw(const CmiQuery& query, const EstimatorConfig& config) {
    if (use_cache(query, config)) return cached_gaussian(query, check_query(query));
    const Design d = build_design(query);
    return estimate_on(d, config, d.columns);
}

double estimate_cmi(const CmiQuery& query, const EstimatorConfig& config) {
    return std::max(0.0, estimate_cmi_raw(query, config));
}

TestResult test_dependence(const CmiQuery& query, const EstimatorConfig& config, double alpha) {
    config.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (config.surrogates == 0 && use_cache(query, config)) {
        const Layout layout = check_query(query);
        TestResult result;
        result.statistic = std::max(0.0, cached_gaussian(query, layout));
        const int dof = layout.dx * layout.dy;
        result.p_value = std::clamp(
            detail::chi2_sf(2.0 * static_cast<double>(layout.samples) * result.statistic, dof), 0.0, 1.0);
        result.dof_or_surrogates = dof;
        return result;
    }
    const Design d = build_design(query);
    const double raw = estimate_on(d, config, d.columns);

    TestResult result;
    result.statistic = std::max(0.0, raw);
    if (config.surrogates == 0) {
        const double n = static_cast<double>(d.columns.rows());
        const int dof = d.dx * d.dy;
        result.p_value = std::clamp(detail::chi2_sf(2.0 * n * result.statistic, dof), 0.0, 1.0);
        result.dof_or_surrogates = dof;
        return result;
    }

    const Eigen::Index n = d.columns.rows();
    const Eigen::Index lo = std::max<Eigen::Index>(1, n / 10);
    const Eigen::Index hi = std::max(lo, 9 * n / 10);
    std::mt19937_64 rng(splitmix64(config.seed ^ fnv1a(query.fingerprint())));

    std::vector<double> surrogate_values;
    surrogate_values.reserve(static_cast<std::size_t>(config.surrogates));
    Eigen::MatrixXd shuffled = d.columns;
    for (int s = 0; s < config.surrogates; ++s) {
        for (Eigen::Index c = 0; c < d.dx; ++c) {
            const auto offset = lo + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
            const auto& src = d.columns.col(c);
            shuffled.col(c).head(n - offset) = src.tail(n - offset);
            shuffled.col(c).tail(offset) = src.head(offset);
        }
        surrogate_values.push_back(estimate_on(d, config, shuffled));
    }
    result.p_value = detail::surrogate_p_value(raw, surrogate_values);
    result.dof_or_surrogates = config.surrogates;
    return result;
}

TestResult te_score(const std::string& source, const std::string& target, const std::set<std::string>& cond_set,
                    const TimeSeriesDataset& data, const LagWindow& window, const EstimatorConfig& config,
                    double alpha, const LaggedCorrelation* moments) {
    if (source == target) throw InputError("te_score: source and target must differ ('" + source + "')");
    if (cond_set.contains(source) || cond_set.contains(target)) {
        throw InputError("te_score: conditioning set must exclude source and target");
    }
    CmiQuery q;
    q.data = &data;
    q.window = window;
    q.moments = moments;
    q.y = {{target, 0}};
    for (int tau = window.tau_min; tau <= window.tau_max; ++tau) {
        q.x.push_back({source, tau});
        q.z.push_back({target, tau});
        for (const auto& c : cond_set) q.z.push_back({c, tau});
    }
    return test_dependence(q, config, alpha);
}

std::vector<VarLag> mci_conditioning_set(const VarLag& source, const ParentSet& parents_of_target,
                                         const ParentSet& parents_of_source, const LagWindow& window) {
    const int extended = 2 * window.tau_max;
    std::vector<VarLag> z;
    std::set<VarLag> seen{source};
    for (const auto& p : parents_of_target.parents) {
        if (seen.insert(p.parent).second) z.push_back(p.parent);
    }
    for (const auto& p : parents_of_source.parents) {
        VarLag shifted{p.parent.var, p.parent.lag + source.lag};
        if (shifted.lag > extended) continue;
        if (seen.insert(shifted).second) z.push_back(std::move(shifted));
    }
    return z;
}

TestResult mci_statistic(const VarLag& source, const std::string& target, const ParentSet& parents_of_target,
                         const ParentSet& parents_of_source, const TimeSeriesDataset& data, const LagWindow& window,
                         const EstimatorConfig& config, double alpha, const LaggedCorrelation* moments) {
    if (!window.contains(source.lag)) {
        throw InputError("mci_statistic: lag " + std::to_string(source.lag) + " outside the lag window");
    }
    CmiQuery q;
    q.data = &data;
    q.window = window;
    q.alignment_lag = 2 * window.tau_max;
    q.moments = moments;
    q.x = {source};
    q.y = {{target, 0}};
    q.z = mci_conditioning_set(source, parents_of_target, parents_of_source, window);
    return test_dependence(q, config, alpha);
}

}  // namespace causa
