#pragma once

#include "tsf/csv.hpp"
#include "tsf/normalizer.hpp"
#include "tsf/time_series.hpp"
#include "tsf/windowing.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsf {

enum class Family { PlainLinear, DLinear };
enum class ChannelMode { CI, CD };

inline std::string_view family_name(Family f) { return f == Family::PlainLinear ? "PlainLinear" : "DLinear"; }
inline std::string_view mode_name(ChannelMode m) { return m == ChannelMode::CI ? "CI" : "CD"; }

inline Family parse_family(std::string_view s) {
    if (s == "PlainLinear") return Family::PlainLinear;
    if (s == "DLinear") return Family::DLinear;
    throw std::invalid_argument("unknown model family '" + std::string(s) + "'");
}

inline ChannelMode parse_mode(std::string_view s) {
    if (s == "CI") return ChannelMode::CI;
    if (s == "CD") return ChannelMode::CD;
    throw std::invalid_argument("unknown channel mode '" + std::string(s) + "'");
}

struct ForecasterSpec {
    Family family = Family::PlainLinear;
    ChannelMode mode = ChannelMode::CI;
    Index lookback = 96;
    Index horizon = 96;
    double ridge_lambda = 0.0;
    Index ma_kernel = 25;  // DLinear only
    bool revin = false;
    bool intercept = false;
    bool individual = false;  // CI only: one weight matrix per channel

    void validate() const {
        if (lookback < 1 || horizon < 1) throw std::invalid_argument("lookback and horizon must be positive");
        if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
            throw std::invalid_argument("ridge lambda must be finite and non-negative");
        }
        if (family == Family::DLinear) {
            if (ma_kernel < 1 || ma_kernel % 2 == 0) throw std::invalid_argument("moving-average kernel must be odd");
            if (ma_kernel > lookback) throw std::invalid_argument("moving-average kernel exceeds the lookback");
        }
    }

    /// Features per channel window.
    [[nodiscard]] Index features() const { return family == Family::DLinear ? 2 * lookback : lookback; }

    bool operator==(const ForecasterSpec&) const = default;
};

/// "<Family>-<Mode>", e.g. "DLinear-CI".
inline std::string model_id(const ForecasterSpec& spec) {
    return std::string(family_name(spec.family)) + "-" + std::string(mode_name(spec.mode));
}

// ---------------------------------------------------------------------------
// Series decomposition

/// L x L operator of the centered moving average with replicate padding of
/// (kernel - 1) / 2 samples at each end: trend = M x.
inline Matrix moving_average_matrix(Index length, Index kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("moving-average kernel must be odd");
    if (kernel > length) throw std::invalid_argument("moving-average kernel exceeds the window length");
    const Index half = (kernel - 1) / 2;
    Matrix m = Matrix::Zero(length, length);
    const double w = 1.0 / static_cast<double>(kernel);
    for (Index j = 0; j < length; ++j) {
        for (Index k = j - half; k <= j + half; ++k) m(j, std::clamp<Index>(k, 0, length - 1)) += w;
    }
    return m;
}

struct Decomposition {
    Matrix trend;
    Matrix seasonal;
};

/// Row-wise trend/seasonal split; seasonal = X - trend.
inline Decomposition moving_average_decompose(const Matrix& x, Index kernel) {
    const Index L = x.cols();
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("moving-average kernel must be odd");
    if (kernel > L) throw std::invalid_argument("moving-average kernel exceeds the window length");
    const Index half = (kernel - 1) / 2;
    Decomposition out{Matrix(x.rows(), L), Matrix()};
    for (Index c = 0; c < x.rows(); ++c) {
        for (Index j = 0; j < L; ++j) {
            double sum = 0.0;
            for (Index k = j - half; k <= j + half; ++k) sum += x(c, std::clamp<Index>(k, 0, L - 1));
            out.trend(c, j) = sum / static_cast<double>(kernel);
        }
    }
    out.seasonal = x - out.trend;
    return out;
}

/// F x L map from a raw channel window to model features:
/// identity for PlainLinear, [M; I - M] (trend then seasonal) for DLinear.
inline Matrix feature_operator(const ForecasterSpec& spec) {
    const Index L = spec.lookback;
    if (spec.family == Family::PlainLinear) return Matrix::Identity(L, L);
    const Matrix m = moving_average_matrix(L, spec.ma_kernel);
    Matrix p(2 * L, L);
    p.topRows(L) = m;
    p.bottomRows(L) = Matrix::Identity(L, L) - m;
    return p;
}

// ---------------------------------------------------------------------------
// RevIN

inline constexpr double kRevinEpsilon = 1e-5;

struct RevinContext {
    Vector mean;
    Vector stdev;
};

struct RevinResult {
    Matrix normalized;
    RevinContext context;
};

/// Per-row z-score with std = sqrt(var + eps); affine parameters fixed to identity.
inline RevinResult revin_forward(const Matrix& x) {
    RevinResult out;
    out.context.mean = x.rowwise().mean();
    const Matrix centered = x.colwise() - out.context.mean;
    out.context.stdev =
        ((centered.array().square().rowwise().sum() / static_cast<double>(x.cols())) + kRevinEpsilon).sqrt().matrix();
    out.normalized = centered.array().colwise() / out.context.stdev.array();
    return out;
}

inline Matrix revin_inverse(const Matrix& y, const std::optional<RevinContext>& context) {
    if (!context) throw std::logic_error("RevIN inverse requires the context of a prior forward pass");
    if (context->mean.size() != y.rows()) throw std::invalid_argument("RevIN context channel count mismatch");
    return ((y.array().colwise() * context->stdev.array()).colwise() + context->mean.array()).matrix();
}

/// Forward stores the statistics in `context`; inverse consumes them.
inline Matrix revin_transform(const Matrix& x, Direction direction, std::optional<RevinContext>& context) {
    if (direction == Direction::Forward) {
        auto r = revin_forward(x);
        context = std::move(r.context);
        return std::move(r.normalized);
    }
    return revin_inverse(x, context);
}

// ---------------------------------------------------------------------------
// Fitted model

/// Immutable linear forecaster.
///
/// weights() are in feature space, one matrix per independent map:
///   CI shared      1 matrix   (F [+1]) x H
///   CI individual  C matrices (F [+1]) x H
///   CD             1 matrix   (C*F [+1]) x (C*H), channel-major blocks
/// where the optional last row is the intercept.
class FittedForecaster {
public:
    FittedForecaster(ForecasterSpec spec, Index channels, std::vector<Matrix> weights)
        : spec_(spec), channels_(channels), weights_(std::move(weights)) {
        spec_.validate();
        const Index F = spec_.features();
        const Index L = spec_.lookback;
        const Index H = spec_.horizon;
        const Index C = channels_;
        const Index bias = spec_.intercept ? 1 : 0;
        const bool cd = spec_.mode == ChannelMode::CD;
        const std::size_t expected = (!cd && spec_.individual) ? static_cast<std::size_t>(C) : 1;
        if (C < 1 || weights_.size() != expected) throw std::invalid_argument("forecaster: wrong number of weight matrices");
        const Index rows = (cd ? C * F : F) + bias;
        const Index cols = cd ? C * H : H;
        for (const auto& w : weights_) {
            if (w.rows() != rows || w.cols() != cols) throw std::invalid_argument("forecaster: weight matrix shape mismatch");
            if (!w.allFinite()) throw std::invalid_argument("forecaster: non-finite weights");
        }
        const Matrix pt = feature_operator(spec_).transpose();
        for (const auto& w : weights_) {
            Matrix e(cd ? C * L : L, cols);
            if (cd) {
                for (Index c = 0; c < C; ++c) e.middleRows(c * L, L).noalias() = pt * w.middleRows(c * F, F);
            } else {
                e.noalias() = pt * w.topRows(F);
            }
            effective_.push_back(std::move(e));
            bias_.push_back(spec_.intercept ? Vector(w.row(rows - 1).transpose()) : Vector::Zero(cols));
        }
    }

    [[nodiscard]] const ForecasterSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] Index channels() const noexcept { return channels_; }
    [[nodiscard]] const std::vector<Matrix>& weights() const noexcept { return weights_; }

    /// Weights folded back onto the raw (normalized) lookback window.
    [[nodiscard]] const std::vector<Matrix>& effective_weights() const noexcept { return effective_; }

    /// C x L window to C x H forecast.
    [[nodiscard]] Matrix predict(const Matrix& x) const {
        if (x.rows() != channels_ || x.cols() != spec_.lookback) {
            throw std::invalid_argument("predict: expected a " + std::to_string(channels_) + "x" +
                                        std::to_string(spec_.lookback) + " window, got " + std::to_string(x.rows()) +
                                        "x" + std::to_string(x.cols()));
        }
        std::optional<RevinContext> ctx;
        const Matrix xn = spec_.revin ? revin_transform(x, Direction::Forward, ctx) : x;
        const Index H = spec_.horizon;
        Matrix y(channels_, H);
        if (spec_.mode == ChannelMode::CI) {
            for (Index c = 0; c < channels_; ++c) {
                const std::size_t k = spec_.individual ? static_cast<std::size_t>(c) : 0;
                y.row(c) = xn.row(c) * effective_[k] + bias_[k].transpose();
            }
        } else {
            const Matrix xt = xn.transpose();
            const Vector v = Eigen::Map<const Vector>(xt.data(), xt.size());
            Vector out = effective_[0].transpose() * v + bias_[0];
            y = Eigen::Map<const Matrix>(out.data(), H, channels_).transpose();
        }
        return spec_.revin ? revin_inverse(y, ctx) : y;
    }

private:
    ForecasterSpec spec_;
    Index channels_;
    std::vector<Matrix> weights_;
    std::vector<Matrix> effective_;
    std::vector<Vector> bias_;
};

// ---------------------------------------------------------------------------
// Normal equations

/// G^T G and G^T T for each independent map (see FittedForecaster::weights).
struct NormalEquations {
    std::vector<Matrix> gram;
    std::vector<Matrix> cross;
    Index samples = 0;  // windows used
};

namespace detail {

inline constexpr Index kWindowChunk = 512;

/// Sum over windows i < n of S[c, i + j] * S[d, i + k] for j, k < W, via the
/// lag-shift recurrence along diagonals.
inline Matrix lagged_cross_gram(const Matrix& s, Index c, Index d, Index w, Index n) {
    Matrix b(w, w);
    for (Index k = 0; k < w; ++k) b(0, k) = s.row(c).segment(0, n).dot(s.row(d).segment(k, n));
    for (Index j = 1; j < w; ++j) b(j, 0) = s.row(c).segment(j, n).dot(s.row(d).segment(0, n));
    for (Index k = 1; k < w; ++k) {
        for (Index j = 1; j < w; ++j) {
            b(j, k) = b(j - 1, k - 1) - s(c, j - 1) * s(d, k - 1) + s(c, n + j - 1) * s(d, n + k - 1);
        }
    }
    return b;
}

/// Sum over windows of S[c, i + j], j < W.
inline Vector lagged_sum(const Matrix& s, Index c, Index w, Index n) {
    Vector m(w);
    m(0) = s.row(c).segment(0, n).sum();
    for (Index j = 1; j < w; ++j) m(j) = m(j - 1) - s(c, j - 1) + s(c, n + j - 1);
    return m;
}

inline NormalEquations gram_fast(const ForecasterSpec& spec, const WindowedDataset& data) {
    const Matrix& s = data.segment();
    const Index C = data.channels();
    const Index L = spec.lookback;
    const Index H = spec.horizon;
    const Index W = L + H;
    const Index n = data.size();
    const Index F = spec.features();
    const Index bias = spec.intercept ? 1 : 0;
    const Matrix p = feature_operator(spec);
    const auto nd = static_cast<double>(n);

    NormalEquations ne;
    ne.samples = n;
    if (spec.mode == ChannelMode::CI) {
        const Index maps = spec.individual ? C : 1;
        for (Index k = 0; k < maps; ++k) {
            Matrix a = Matrix::Zero(W, W);
            Vector m = Vector::Zero(W);
            for (Index c = 0; c < C; ++c) {
                if (spec.individual && c != k) continue;
                a += lagged_cross_gram(s, c, c, W, n);
                if (bias) m += lagged_sum(s, c, W, n);
            }
            Matrix g(F + bias, F + bias);
            Matrix t(F + bias, H);
            g.topLeftCorner(F, F).noalias() = p * a.topLeftCorner(L, L) * p.transpose();
            t.topRows(F).noalias() = p * a.topRightCorner(L, H);
            if (bias) {
                const double count = spec.individual ? nd : nd * static_cast<double>(C);
                g.col(F).head(F).noalias() = p * m.head(L);
                g.row(F).head(F) = g.col(F).head(F).transpose();
                g(F, F) = count;
                t.row(F) = m.tail(H).transpose();
            }
            ne.gram.push_back(std::move(g));
            ne.cross.push_back(std::move(t));
        }
        return ne;
    }

    Matrix g(C * F + bias, C * F + bias);
    Matrix t(C * F + bias, C * H);
    for (Index c = 0; c < C; ++c) {
        for (Index d = c; d < C; ++d) {
            const Matrix b = lagged_cross_gram(s, c, d, W, n);
            g.block(c * F, d * F, F, F).noalias() = p * b.topLeftCorner(L, L) * p.transpose();
            if (d != c) g.block(d * F, c * F, F, F) = g.block(c * F, d * F, F, F).transpose();
            t.block(c * F, d * H, F, H).noalias() = p * b.topRightCorner(L, H);
            if (d != c) t.block(d * F, c * H, F, H).noalias() = p * b.bottomLeftCorner(H, L).transpose();
        }
    }
    if (bias) {
        for (Index c = 0; c < C; ++c) {
            const Vector m = lagged_sum(s, c, W, n);
            g.col(C * F).segment(c * F, F).noalias() = p * m.head(L);
            t.row(C * F).segment(c * H, H) = m.tail(H).transpose();
        }
        g.row(C * F).head(C * F) = g.col(C * F).head(C * F).transpose();
        g(C * F, C * F) = nd;
    }
    ne.gram.push_back(std::move(g));
    ne.cross.push_back(std::move(t));
    return ne;
}

/// Per-row RevIN of a block of rows (each row one channel window); returns the
/// statistics so targets can be normalized identically.
inline void revin_rows(Eigen::Ref<Matrix> x, Eigen::Ref<Matrix> y) {
    const auto L = static_cast<double>(x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double sd = std::sqrt((x.row(r).array() - mean).square().sum() / L + kRevinEpsilon);
        x.row(r) = (x.row(r).array() - mean) / sd;
        y.row(r) = (y.row(r).array() - mean) / sd;
    }
}

/// Raw lookback and answer rows of windows [i0, i0 + count) for channel c.
inline void channel_rows(const WindowedDataset& data, Index c, Index i0, Index count, Matrix& x, Matrix& y) {
    const Index L = data.lookback();
    const Index H = data.horizon();
    x.resize(count, L);
    y.resize(count, H);
    for (Index i = 0; i < count; ++i) {
        const Index start = data.start(i0 + i);
        x.row(i) = data.segment().row(c).segment(start, L);
        y.row(i) = data.segment().row(c).segment(start + L, H);
    }
}

inline NormalEquations gram_explicit(const ForecasterSpec& spec, const WindowedDataset& data) {
    const Index C = data.channels();
    const Index H = spec.horizon;
    const Index F = spec.features();
    const Index bias = spec.intercept ? 1 : 0;
    const Index n = data.size();
    const Matrix pt = feature_operator(spec).transpose();
    const bool cd = spec.mode == ChannelMode::CD;
    const Index maps = (!cd && spec.individual) ? C : 1;
    const Index dim = (cd ? C * F : F) + bias;
    const Index out_dim = cd ? C * H : H;

    NormalEquations ne;
    ne.samples = n;
    for (Index k = 0; k < maps; ++k) {
        ne.gram.push_back(Matrix::Zero(dim, dim));
        ne.cross.push_back(Matrix::Zero(dim, out_dim));
    }
    Matrix x, y;
    for (Index i0 = 0; i0 < n; i0 += kWindowChunk) {
        const Index count = std::min(kWindowChunk, n - i0);
        if (cd) {
            Matrix g(count, dim);
            Matrix t(count, out_dim);
            for (Index c = 0; c < C; ++c) {
                channel_rows(data, c, i0, count, x, y);
                if (spec.revin) revin_rows(x, y);
                g.middleCols(c * F, F).noalias() = x * pt;
                t.middleCols(c * H, H) = y;
            }
            if (bias) g.col(C * F).setOnes();
            ne.gram[0].selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
            ne.cross[0].noalias() += g.transpose() * t;
        } else {
            for (Index c = 0; c < C; ++c) {
                channel_rows(data, c, i0, count, x, y);
                if (spec.revin) revin_rows(x, y);
                Matrix g(count, dim);
                g.leftCols(F).noalias() = x * pt;
                if (bias) g.col(F).setOnes();
                const std::size_t k = spec.individual ? static_cast<std::size_t>(c) : 0;
                ne.gram[k].selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
                ne.cross[k].noalias() += g.transpose() * y;
            }
        }
    }
    for (auto& g : ne.gram) g = g.selfadjointView<Eigen::Lower>();
    return ne;
}

}  // namespace detail

/// Accumulates the ridge normal equations of `spec` over `data`. Uses the exact
/// lag-shift recurrence when stride is 1 and RevIN is off, explicit
/// accumulation otherwise. ridge_lambda is not used here.
inline NormalEquations build_normal_equations(const ForecasterSpec& spec, const WindowedDataset& data) {
    spec.validate();
    if (data.lookback() != spec.lookback || data.horizon() != spec.horizon) {
        throw std::invalid_argument("training windows do not match the forecaster lookback/horizon");
    }
    if (data.empty()) throw std::invalid_argument("empty training set");
    if (data.stride() == 1 && !spec.revin) return detail::gram_fast(spec, data);
    return detail::gram_explicit(spec, data);
}

/// Solves (G^T G + lambda I) W = G^T T per map; the intercept row is not
/// penalized. Cholesky when lambda > 0, minimum-norm orthogonal decomposition
/// when lambda = 0 or the system is not positive definite.
inline FittedForecaster solve_normal_equations(const ForecasterSpec& spec, Index channels, const NormalEquations& ne) {
    spec.validate();
    std::vector<Matrix> weights;
    for (std::size_t k = 0; k < ne.gram.size(); ++k) {
        Matrix a = ne.gram[k];
        const Index penalized = a.rows() - (spec.intercept ? 1 : 0);
        a.diagonal().head(penalized).array() += spec.ridge_lambda;
        Matrix w;
        bool solved = false;
        if (spec.ridge_lambda > 0.0) {
            Eigen::LLT<Matrix> llt(a);
            if (llt.info() == Eigen::Success) {
                w = llt.solve(ne.cross[k]);
                solved = w.allFinite();
            }
        }
        if (!solved) w = Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(ne.cross[k]);
        if (!w.allFinite()) throw std::runtime_error("ridge solve produced a non-finite solution");
        weights.push_back(std::move(w));
    }
    return FittedForecaster(spec, channels, std::move(weights));
}

inline FittedForecaster fit_linear_forecaster(const ForecasterSpec& spec, const WindowedDataset& train) {
    return solve_normal_equations(spec, train.channels(), build_normal_equations(spec, train));
}

/// Mean squared error of `model` over every window of `data` (all C*H entries
/// of every window weighted equally).
inline double evaluate_mse(const FittedForecaster& model, const WindowedDataset& data) {
    const ForecasterSpec& spec = model.spec();
    if (data.lookback() != spec.lookback || data.horizon() != spec.horizon) {
        throw std::invalid_argument("evaluation windows do not match the forecaster lookback/horizon");
    }
    if (data.channels() != model.channels()) throw std::invalid_argument("evaluation data channel count mismatch");
    if (data.empty()) throw std::invalid_argument("no evaluation windows");
    const Index C = data.channels();
    const Index L = spec.lookback;
    const Index H = spec.horizon;
    const Index n = data.size();
    const auto& eff = model.effective_weights();
    const auto& w = model.weights();
    const Index bias_row = w[0].rows() - 1;

    double sse = 0.0;
    Matrix x, y;
    for (Index i0 = 0; i0 < n; i0 += detail::kWindowChunk) {
        const Index count = std::min(detail::kWindowChunk, n - i0);
        if (spec.mode == ChannelMode::CD) {
            Matrix g(count, C * L);
            Matrix t(count, C * H);
            Matrix mean(count, C), sd(count, C);
            for (Index c = 0; c < C; ++c) {
                detail::channel_rows(data, c, i0, count, x, y);
                if (spec.revin) {
                    mean.col(c) = x.rowwise().mean();
                    sd.col(c) = ((x.colwise() - mean.col(c)).array().square().rowwise().sum() / static_cast<double>(L) +
                                 kRevinEpsilon)
                                    .sqrt();
                    x = (x.colwise() - mean.col(c)).array().colwise() / sd.col(c).array();
                }
                g.middleCols(c * L, L) = x;
                t.middleCols(c * H, H) = y;
            }
            Matrix pred = g * eff[0];
            if (spec.intercept) pred.rowwise() += w[0].row(bias_row);
            if (spec.revin) {
                for (Index c = 0; c < C; ++c) {
                    auto block = pred.middleCols(c * H, H);
                    block = (block.array().colwise() * sd.col(c).array()).colwise() + mean.col(c).array();
                }
            }
            sse += (pred - t).squaredNorm();
        } else {
            for (Index c = 0; c < C; ++c) {
                detail::channel_rows(data, c, i0, count, x, y);
                Vector mean, sd;
                if (spec.revin) {
                    mean = x.rowwise().mean();
                    sd = ((x.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(L) +
                          kRevinEpsilon)
                             .sqrt();
                    x = (x.colwise() - mean).array().colwise() / sd.array();
                }
                const std::size_t k = spec.individual ? static_cast<std::size_t>(c) : 0;
                Matrix pred = x * eff[k];
                if (spec.intercept) pred.rowwise() += w[k].row(bias_row);
                if (spec.revin) pred = (pred.array().colwise() * sd.array()).colwise() + mean.array();
                sse += (pred - y).squaredNorm();
            }
        }
    }
    return sse / (static_cast<double>(n) * static_cast<double>(C) * static_cast<double>(H));
}

// ---------------------------------------------------------------------------
// Persistence
//
// Text format, one item per line:
//   tsf-linear-forecaster 1
//   family <PlainLinear|DLinear>
//   mode <CI|CD>
//   lookback <L>    horizon <H>    ridge_lambda <x>    ma_kernel <k>
//   revin <0|1>     intercept <0|1>    individual <0|1>    channels <C>
//   matrices <count>
//   then per matrix: "matrix <rows> <cols>" followed by <rows> lines of
//   space-separated values in shortest round-trip decimal form.

inline void save_forecaster(const FittedForecaster& model, std::ostream& out) {
    const auto& s = model.spec();
    out << "tsf-linear-forecaster 1\n";
    out << "family " << family_name(s.family) << '\n';
    out << "mode " << mode_name(s.mode) << '\n';
    out << "lookback " << s.lookback << '\n';
    out << "horizon " << s.horizon << '\n';
    out << "ridge_lambda " << detail::format_exact(s.ridge_lambda) << '\n';
    out << "ma_kernel " << s.ma_kernel << '\n';
    out << "revin " << int(s.revin) << '\n';
    out << "intercept " << int(s.intercept) << '\n';
    out << "individual " << int(s.individual) << '\n';
    out << "channels " << model.channels() << '\n';
    out << "matrices " << model.weights().size() << '\n';
    for (const auto& w : model.weights()) {
        out << "matrix " << w.rows() << ' ' << w.cols() << '\n';
        for (Index r = 0; r < w.rows(); ++r) {
            for (Index c = 0; c < w.cols(); ++c) out << (c ? " " : "") << detail::format_exact(w(r, c));
            out << '\n';
        }
    }
}

inline FittedForecaster load_forecaster(std::istream& in) {
    auto expect = [&in](const std::string& key) {
        std::string k;
        if (!(in >> k) || k != key) throw std::runtime_error("model file: expected '" + key + "'");
    };
    auto read_index = [&](const std::string& key) {
        expect(key);
        long long v = 0;
        if (!(in >> v)) throw std::runtime_error("model file: bad value for '" + key + "'");
        return static_cast<Index>(v);
    };
    auto read_double = [&](const std::string& key) {
        expect(key);
        std::string text;
        double v = 0.0;
        if (!(in >> text) || !detail::parse_finite(text, v)) {
            throw std::runtime_error("model file: bad value for '" + key + "'");
        }
        return v;
    };
    auto read_word = [&](const std::string& key) {
        expect(key);
        std::string v;
        if (!(in >> v)) throw std::runtime_error("model file: missing value for '" + key + "'");
        return v;
    };
    expect("tsf-linear-forecaster");
    int version = 0;
    if (!(in >> version) || version != 1) throw std::runtime_error("model file: unsupported version");
    ForecasterSpec spec;
    spec.family = parse_family(read_word("family"));
    spec.mode = parse_mode(read_word("mode"));
    spec.lookback = read_index("lookback");
    spec.horizon = read_index("horizon");
    spec.ridge_lambda = read_double("ridge_lambda");
    spec.ma_kernel = read_index("ma_kernel");
    spec.revin = read_index("revin") != 0;
    spec.intercept = read_index("intercept") != 0;
    spec.individual = read_index("individual") != 0;
    const Index channels = read_index("channels");
    const Index count = read_index("matrices");
    if (count < 1 || count > 1'000'000) throw std::runtime_error("model file: bad matrix count");
    std::vector<Matrix> weights;
    for (Index m = 0; m < count; ++m) {
        expect("matrix");
        long long rows = 0, cols = 0;
        if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw std::runtime_error("model file: bad matrix shape");
        Matrix w(rows, cols);
        std::string text;
        for (Index r = 0; r < rows; ++r) {
            for (Index c = 0; c < cols; ++c) {
                if (!(in >> text) || !detail::parse_finite(text, w(r, c))) {
                    throw std::runtime_error("model file: bad weight at matrix " + std::to_string(m) + " (" +
                                             std::to_string(r) + ", " + std::to_string(c) + ")");
                }
            }
        }
        weights.push_back(std::move(w));
    }
    return FittedForecaster(spec, channels, std::move(weights));
}

inline void save_forecaster(const FittedForecaster& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    save_forecaster(model, out);
    if (!out) throw std::runtime_error("I/O failure writing '" + path.string() + "'");
}

inline FittedForecaster load_forecaster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
    return load_forecaster(in);
}

}  // namespace tsf
