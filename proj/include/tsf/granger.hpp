#pragma once

#include "tsf/csv.hpp"
#include "tsf/parallel.hpp"
#include "tsf/special.hpp"
#include "tsf/time_series.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsf {

struct GrangerConfig {
    Index lag = 30;
    double alpha = 0.05;
    double pearson_threshold = 0.95;
    Index sample_len = 1000;
    int max_diff = 2;

    void validate() const {
        if (lag < 1) throw std::invalid_argument("granger lag must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
        if (!(pearson_threshold > 0.0 && pearson_threshold <= 1.0)) {
            throw std::invalid_argument("pearson threshold must lie in (0, 1]");
        }
        if (sample_len <= 3 * lag) {
            throw std::invalid_argument("sample_len (" + std::to_string(sample_len) + ") must exceed 3*lag (" +
                                        std::to_string(3 * lag) + ")");
        }
        if (max_diff < 0) throw std::invalid_argument("max_diff must be non-negative");
    }
};

// ---------------------------------------------------------------------------
// Least squares

struct OlsResult {
    Vector coefficients;
    double ssr = 0.0;
    Index rank = 0;
};

/// Relative singular-value cutoff used by every least-squares fit in this module.
inline constexpr double kSvdTolerance = 1e-10;

/// Minimum-norm least squares through a thin SVD; singular values below
/// kSvdTolerance * sigma_max are treated as zero.
inline OlsResult ols_fit_ssr(const Matrix& design, const Vector& target) {
    if (design.rows() == 0 || design.cols() == 0) throw std::invalid_argument("ols: empty design");
    if (design.rows() != target.size()) throw std::invalid_argument("ols: design/target row mismatch");
    if (design.rows() < design.cols()) throw std::invalid_argument("ols: fewer rows than columns");
    Eigen::BDCSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? kSvdTolerance * s(0) : 0.0;
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff) ++rank;
    OlsResult out;
    out.rank = rank;
    const Vector uty = svd.matrixU().leftCols(rank).transpose() * target;
    out.coefficients = svd.matrixV().leftCols(rank) * (uty.array() / s.head(rank).array()).matrix();
    out.ssr = (target - design * out.coefficients).squaredNorm();
    return out;
}

namespace detail {

/// Orthonormal basis of the numerical column space of `a`.
inline Matrix column_basis(const Matrix& a, double scale) {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    const double cutoff = kSvdTolerance * std::max(scale, s.size() > 0 ? s(0) : 0.0);
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff) ++rank;
    return svd.matrixU().leftCols(rank);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lag designs

struct LagDesign {
    Matrix design;
    Vector target;
};

/// Target y[lag..N) and rows [1, r0(t-1..t-lag), r1(t-1..t-lag), ...].
inline LagDesign build_lag_design(const Vector& y, const std::vector<Vector>& regressors, Index lag) {
    const Index n_raw = y.size();
    if (lag < 1) throw std::invalid_argument("lag must be positive");
    if (lag >= n_raw) {
        throw std::invalid_argument("series of length " + std::to_string(n_raw) + " too short for lag " +
                                    std::to_string(lag));
    }
    for (const auto& r : regressors) {
        if (r.size() != n_raw) throw std::invalid_argument("lag design: regressor length differs from target");
    }
    const Index rows = n_raw - lag;
    LagDesign out{Matrix(rows, 1 + lag * static_cast<Index>(regressors.size())), y.tail(rows)};
    out.design.col(0).setOnes();
    for (std::size_t k = 0; k < regressors.size(); ++k) {
        for (Index i = 1; i <= lag; ++i) {
            out.design.col(1 + static_cast<Index>(k) * lag + (i - 1)) = regressors[k].segment(lag - i, rows);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// F test

struct PairResult {
    Index effect = 0;
    Index cause = 1;
    double ssr_u = 0.0;
    double ssr_mv = 0.0;
    double f_stat = 0.0;
    double p_value = 1.0;
    Index df_num = 0;
    Index df_den = 0;
    bool rejected = false;
};

/// ((ssr_u - ssr_mv) / df_num) / (ssr_mv / df_den); +inf for a perfect
/// multivariate fit, 0 when the extra regressors explain nothing.
inline double f_statistic(double ssr_u, double ssr_mv, Index df_num, Index df_den) {
    const double gain = ssr_u - ssr_mv;
    if (!(gain > 0.0)) return 0.0;
    if (ssr_mv <= 0.0) return std::numeric_limits<double>::infinity();
    return (gain / static_cast<double>(df_num)) / (ssr_mv / static_cast<double>(df_den));
}

/// Tests whether `x` (cause) Granger-causes `y` (effect) at cfg.lag.
///
/// SSR_mv is obtained from the restricted residual by projecting out the part of
/// x's lag block orthogonal to the own-lag design, which is the same fit as the
/// unrestricted regression and keeps SSR_mv <= SSR_u exactly.
inline PairResult granger_pair(const Vector& y, const Vector& x, const GrangerConfig& cfg) {
    if (y.size() != x.size()) throw std::invalid_argument("granger_pair: series lengths differ");
    const Index lag = cfg.lag;
    const Index k_mv = 2 * lag + 1;
    if (y.size() <= lag || y.size() - lag <= k_mv) {
        throw std::invalid_argument("granger_pair: " + std::to_string(y.size()) +
                                    " samples leave no residual degrees of freedom at lag " + std::to_string(lag));
    }
    const LagDesign full = build_lag_design(y, {y, x}, lag);
    const Index N = full.target.size();
    const Matrix own = full.design.leftCols(lag + 1);
    const Matrix other = full.design.rightCols(lag);

    const Matrix u = detail::column_basis(own, 0.0);
    const Vector r_u = full.target - u * (u.transpose() * full.target);
    const Matrix z = other - u * (u.transpose() * other);
    const Matrix v = detail::column_basis(z, other.norm());
    const Vector r_mv = r_u - v * (v.transpose() * r_u);

    PairResult out;
    out.ssr_u = r_u.squaredNorm();
    out.ssr_mv = std::min(r_mv.squaredNorm(), out.ssr_u);
    out.df_num = lag;
    out.df_den = N - k_mv;
    out.f_stat = f_statistic(out.ssr_u, out.ssr_mv, out.df_num, out.df_den);
    out.p_value = f_upper_tail(out.f_stat, static_cast<double>(out.df_num), static_cast<double>(out.df_den));
    out.rejected = out.p_value < cfg.alpha;
    return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Greedy redundancy filter: channel j is dropped when |corr(i, j)| exceeds
/// `threshold` for an already retained i < j.
inline std::vector<Index> pearson_filter(const TimeSeries& series, double threshold) {
    const Index C = series.channels();
    Matrix centered = series.values.colwise() - series.values.rowwise().mean();
    Vector norms = centered.rowwise().norm();
    for (Index c = 0; c < C; ++c) {
        if (!(norms(c) > 0.0)) {
            throw std::invalid_argument("channel '" + series.channel_names[static_cast<std::size_t>(c)] +
                                        "' is constant; correlation undefined");
        }
    }
    std::vector<Index> kept;
    for (Index j = 0; j < C; ++j) {
        bool redundant = false;
        for (Index i : kept) {
            const double corr = centered.row(i).dot(centered.row(j)) / (norms(i) * norms(j));
            if (std::abs(corr) > threshold) {
                redundant = true;
                break;
            }
        }
        if (!redundant) kept.push_back(j);
    }
    return kept;
}

struct AdfResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    Index lags = 0;
    Index nobs = 0;
    bool stationary = false;
};

/// floor(12 * (n / 100)^(1/4)).
inline Index schwert_lags(Index n) {
    return static_cast<Index>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

/// 5% critical value of the constant-only ADF statistic (MacKinnon 2010 response
/// surface) for `nobs` usable observations.
inline double adf_critical_value_5pct(Index nobs) {
    const double n = static_cast<double>(nobs);
    return -2.86154 - 2.8903 / n - 4.234 / (n * n) - 40.040 / (n * n * n);
}

/// Regression dx_t = a + g x_{t-1} + sum_i b_i dx_{t-i} (i = 1..reg_lags);
/// the statistic is the t-ratio of g.
inline AdfResult adf_test(const Vector& x, Index reg_lags) {
    const Index n = x.size();
    if (reg_lags < 0) throw std::invalid_argument("adf: negative lag order");
    if (n <= reg_lags + 10) {
        throw std::invalid_argument("adf: series of length " + std::to_string(n) + " too short for " +
                                    std::to_string(reg_lags) + " lags");
    }
    const Vector dx = x.tail(n - 1) - x.head(n - 1);
    const Index nobs = n - 1 - reg_lags;
    const Index k = 2 + reg_lags;
    Matrix design(nobs, k);
    design.col(0) = x.segment(reg_lags, nobs);
    design.col(1).setOnes();
    for (Index i = 1; i <= reg_lags; ++i) design.col(1 + i) = dx.segment(reg_lags - i, nobs);
    const Vector target = dx.tail(nobs);

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw std::domain_error("adf: singular regression (degenerate or constant series)");
    const Vector beta = qr.solve(target);
    const double ssr = (target - design * beta).squaredNorm();
    const double sigma2 = ssr / static_cast<double>(nobs - k);

    // Var(beta_0) = sigma^2 [(X^T X)^{-1}]_{00} = sigma^2 ||row p(0) of R^{-1}||^2.
    const Matrix r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const Matrix r_inv = r.template triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    Index pos = 0;
    for (Index j = 0; j < k; ++j) {
        if (qr.colsPermutation().indices()(j) == 0) pos = j;
    }
    const double se = std::sqrt(sigma2 * r_inv.row(pos).squaredNorm());
    if (!(se > 0.0)) throw std::domain_error("adf: zero standard error (perfect fit)");

    AdfResult out;
    out.statistic = beta(0) / se;
    out.lags = reg_lags;
    out.nobs = nobs;
    out.critical_value = adf_critical_value_5pct(nobs);
    out.stationary = out.statistic < out.critical_value;
    return out;
}

inline AdfResult adf_test(const Vector& x) { return adf_test(x, schwert_lags(x.size())); }

class NotStationary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StationaryResult {
    Vector series;
    int diff_order = 0;
};

/// First-differences `x` until the ADF test passes; at most cfg.max_diff passes.
/// A singular ADF regression is reported as NotStationary.
inline StationaryResult make_stationary(const Vector& x, const GrangerConfig& cfg) {
    StationaryResult out{x, 0};
    for (;;) {
        AdfResult adf;
        try {
            adf = adf_test(out.series);
        } catch (const std::exception& e) {
            throw NotStationary("ADF test failed after " + std::to_string(out.diff_order) +
                                " differences: " + e.what());
        }
        if (adf.stationary) return out;
        if (out.diff_order >= cfg.max_diff) {
            throw NotStationary("still non-stationary after " + std::to_string(out.diff_order) + " differences");
        }
        const Index n = out.series.size();
        out.series = (out.series.tail(n - 1) - out.series.head(n - 1)).eval();
        ++out.diff_order;
    }
}

// ---------------------------------------------------------------------------
// Dataset analysis

struct GrangerReport {
    Index lag = 0;
    double alpha = 0.0;
    Index sample_len = 0;
    std::vector<Index> retained_channels;
    std::vector<int> diff_orders;  // per retained channel; -1 when not stationarized
    std::vector<PairResult> pairs;
    Index skipped_pairs = 0;
    double avg_f = 0.0;
    double pct_rejected = 0.0;
};

inline GrangerReport granger_analyze(const TimeSeries& series, const GrangerConfig& cfg) {
    cfg.validate();
    if (series.length() < cfg.sample_len) {
        throw std::invalid_argument("series '" + series.name + "' has " + std::to_string(series.length()) +
                                    " steps; granger analysis needs " + std::to_string(cfg.sample_len));
    }
    const TimeSeries window = series.slice(0, cfg.sample_len);

    GrangerReport report;
    report.lag = cfg.lag;
    report.alpha = cfg.alpha;
    report.sample_len = cfg.sample_len;
    report.retained_channels = pearson_filter(window, cfg.pearson_threshold);
    if (report.retained_channels.size() < 2) {
        throw std::invalid_argument("series '" + series.name +
                                    "': fewer than 2 channels survive the correlation filter; no pairs to test");
    }

    const std::size_t m = report.retained_channels.size();
    std::vector<Vector> stationary(m);
    report.diff_orders.assign(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        try {
            auto st = make_stationary(window.values.row(report.retained_channels[i]).transpose(), cfg);
            stationary[i] = std::move(st.series);
            report.diff_orders[i] = st.diff_order;
        } catch (const NotStationary&) {
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            if (report.diff_orders[a] < 0 || report.diff_orders[b] < 0) {
                ++report.skipped_pairs;
                continue;
            }
            todo.emplace_back(a, b);
        }
    }

    std::vector<PairResult> results(todo.size());
    std::vector<char> done(todo.size(), 0);
    parallel_for(todo.size(), [&](std::size_t k) {
        const auto [a, b] = todo[k];
        const Index len = std::min(stationary[a].size(), stationary[b].size());
        try {
            results[k] = granger_pair(stationary[a].tail(len), stationary[b].tail(len), cfg);
        } catch (const std::invalid_argument&) {
            return;
        }
        results[k].effect = report.retained_channels[a];
        results[k].cause = report.retained_channels[b];
        done[k] = 1;
    });

    Index rejected = 0;
    double f_sum = 0.0;
    for (std::size_t k = 0; k < todo.size(); ++k) {
        if (!done[k]) {
            ++report.skipped_pairs;
            continue;
        }
        f_sum += results[k].f_stat;
        rejected += results[k].rejected ? 1 : 0;
        report.pairs.push_back(results[k]);
    }
    if (report.pairs.empty()) {
        throw std::runtime_error("series '" + series.name + "': no channel pair could be tested");
    }
    const auto count = static_cast<double>(report.pairs.size());
    report.avg_f = f_sum / count;
    report.pct_rejected = 100.0 * static_cast<double>(rejected) / count;
    return report;
}

// ---------------------------------------------------------------------------
// Export

/// Non-finite F statistics are written as null.
inline nlohmann::json to_json(const GrangerReport& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"effect", p.effect},
                         {"cause", p.cause},
                         {"ssr_u", p.ssr_u},
                         {"ssr_mv", p.ssr_mv},
                         {"f_stat", p.f_stat},
                         {"p_value", p.p_value},
                         {"df_num", p.df_num},
                         {"df_den", p.df_den},
                         {"rejected", p.rejected}});
    }
    return {{"lag", report.lag},
            {"alpha", report.alpha},
            {"sample_len", report.sample_len},
            {"retained_channels", report.retained_channels},
            {"diff_orders", report.diff_orders},
            {"pairs", pairs},
            {"skipped_pairs", report.skipped_pairs},
            {"avg_f", report.avg_f},
            {"pct_rejected", report.pct_rejected}};
}

inline void write_granger_csv(const GrangerReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "effect,cause,ssr_u,ssr_mv,f_stat,p_value,df_num,df_den,rejected\n";
    for (const auto& p : report.pairs) {
        out << p.effect << ',' << p.cause << ',' << detail::format_exact(p.ssr_u) << ','
            << detail::format_exact(p.ssr_mv) << ',' << detail::format_exact(p.f_stat) << ','
            << detail::format_exact(p.p_value) << ',' << p.df_num << ',' << p.df_den << ','
            << (p.rejected ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("I/O failure writing '" + path.string() + "'");
}

}  // namespace tsf
