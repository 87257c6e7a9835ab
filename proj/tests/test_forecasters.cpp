#include <gtest/gtest.h>

#include "tsf/forecasters.hpp"
#include "tsf/metrics.hpp"
#include "tsf/random.hpp"

#include <cmath>
#include <sstream>

using namespace tsf;

namespace {

Matrix noise(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

/// Independent AR(1) channels with coefficients `phi`.
Matrix ar1_channels(const std::vector<double>& phi, Index n, std::uint64_t seed) {
    const Matrix e = noise(static_cast<Index>(phi.size()), n, seed);
    Matrix x = Matrix::Zero(e.rows(), n);
    for (Index c = 0; c < e.rows(); ++c) {
        x(c, 0) = e(c, 0);
        for (Index t = 1; t < n; ++t) x(c, t) = phi[static_cast<std::size_t>(c)] * x(c, t - 1) + e(c, t);
    }
    return x;
}

ForecasterSpec make_spec(Family f, ChannelMode m, Index L, Index H, double lambda = 0.0) {
    ForecasterSpec s;
    s.family = f;
    s.mode = m;
    s.lookback = L;
    s.horizon = H;
    s.ridge_lambda = lambda;
    s.ma_kernel = 5;
    return s;
}

/// Window-by-window MSE through predict().
double mse_by_predict(const FittedForecaster& model, const WindowedDataset& data) {
    double sum = 0.0;
    for (Index i = 0; i < data.size(); ++i) {
        const auto s = data.sample(i);
        sum += mse(model.predict(s.X), s.Y);
    }
    return sum / static_cast<double>(data.size());
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

}  // namespace

TEST(ForecasterSpec, Validation) {
    ForecasterSpec s = make_spec(Family::DLinear, ChannelMode::CI, 10, 3);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.features(), 20);
    s.ma_kernel = 4;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.ma_kernel = 11;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = make_spec(Family::PlainLinear, ChannelMode::CD, 10, 3, -1.0);
    EXPECT_THROW(s.validate(), std::invalid_argument);
    EXPECT_EQ(model_id(make_spec(Family::DLinear, ChannelMode::CD, 4, 1)), "DLinear-CD");
    EXPECT_EQ(parse_family("PlainLinear"), Family::PlainLinear);
    EXPECT_THROW(parse_mode("XY"), std::invalid_argument);
}

TEST(Decomposition, RampWithReplicatePadding) {
    Matrix x(1, 5);
    x << 0, 1, 2, 3, 4;
    const Decomposition d = moving_average_decompose(x, 3);
    EXPECT_NEAR(d.trend(0, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(d.trend(0, 2), 2.0, 1e-15);
    EXPECT_NEAR(d.trend(0, 4), 11.0 / 3.0, 1e-15);
    EXPECT_LE((d.trend + d.seasonal - x).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(moving_average_decompose(x, 1).trend, x);
    EXPECT_THROW(moving_average_decompose(x, 7), std::invalid_argument);
    EXPECT_THROW(moving_average_decompose(x, 2), std::invalid_argument);
}

TEST(Decomposition, OperatorMatchesDirectComputation) {
    const Matrix x = noise(3, 24, 4);
    const Decomposition d = moving_average_decompose(x, 7);
    const Matrix m = moving_average_matrix(24, 7);
    EXPECT_LT(max_rel_diff((m * x.transpose()).transpose(), d.trend), 1e-14);
    EXPECT_LT((m.rowwise().sum() - Vector::Ones(24)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Revin, RoundTripAndConstantRow) {
    Matrix x = noise(3, 50, 8);
    x.row(1) = x.row(1) * 1e3 + Eigen::RowVectorXd::Constant(50, -40.0);
    x.row(2).setConstant(7.0);
    std::optional<RevinContext> ctx;
    const Matrix z = revin_transform(x, Direction::Forward, ctx);
    ASSERT_TRUE(ctx.has_value());
    EXPECT_LT(std::abs(z.row(0).mean()), 1e-12);
    EXPECT_EQ(z.row(2), Eigen::RowVectorXd::Zero(50));
    EXPECT_NEAR(ctx->stdev(2), std::sqrt(kRevinEpsilon), 1e-18);
    const Matrix back = revin_transform(z, Direction::Inverse, ctx);
    EXPECT_LT(max_rel_diff(back, x), 1e-12);
    std::optional<RevinContext> none;
    EXPECT_THROW(revin_inverse(z, none), std::logic_error);
}

TEST(Revin, ShiftEquivariantForecasts) {
    ForecasterSpec spec = make_spec(Family::PlainLinear, ChannelMode::CI, 12, 4, 1e-3);
    spec.revin = true;
    const Matrix seg = ar1_channels({0.8, 0.5}, 400, 2);
    const FittedForecaster model = fit_linear_forecaster(spec, WindowedDataset(seg, 12, 4));
    const Matrix x = seg.leftCols(12);
    const Matrix shifted = (x.array() + 1000.0).matrix();
    EXPECT_LT((model.predict(shifted) - model.predict(x) - Matrix::Constant(2, 4, 1000.0)).cwiseAbs().maxCoeff(),
              1e-9);
}

TEST(Fit, PlantedRecurrenceIsRecoveredExactly) {
    // Two sinusoids obey an order-4 linear recurrence, so a lookback of 8 fits
    // every horizon exactly.
    Matrix seg(1, 300);
    for (Index t = 0; t < 300; ++t) seg(0, t) = std::sin(0.3 * t) + 0.5 * std::sin(0.71 * t + 1.0);
    for (auto family : {Family::PlainLinear, Family::DLinear}) {
        ForecasterSpec spec = make_spec(family, ChannelMode::CI, 8, 4);
        spec.ma_kernel = 3;
        const WindowedDataset train(seg.leftCols(200), 8, 4);
        const FittedForecaster model = fit_linear_forecaster(spec, train);
        EXPECT_LT(evaluate_mse(model, WindowedDataset(seg.rightCols(100), 8, 4)), 1e-12) << family_name(family);
    }
}

TEST(Fit, HugeRidgeShrinksWeightsToZero) {
    const Matrix seg = ar1_channels({0.9}, 300, 3);
    const auto spec = make_spec(Family::PlainLinear, ChannelMode::CI, 10, 2, 1e12);
    const FittedForecaster model = fit_linear_forecaster(spec, WindowedDataset(seg, 10, 2));
    EXPECT_LT(model.weights()[0].cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Fit, RidgeShrinksMonotonically) {
    const Matrix seg = ar1_channels({0.9, -0.3}, 500, 4);
    const WindowedDataset data(seg, 16, 4);
    double prev_norm = std::numeric_limits<double>::infinity();
    double prev_mse = 0.0;
    for (double lambda : {0.0, 1e-2, 1.0, 1e2, 1e4}) {
        const auto spec = make_spec(Family::PlainLinear, ChannelMode::CI, 16, 4, lambda);
        const FittedForecaster model = fit_linear_forecaster(spec, data);
        const double norm = model.weights()[0].norm();
        const double train_mse = evaluate_mse(model, data);
        EXPECT_LT(norm, prev_norm) << lambda;
        EXPECT_GE(train_mse, prev_mse - 1e-12) << lambda;
        prev_norm = norm;
        prev_mse = train_mse;
    }
}

TEST(Fit, IndependentChannelsGiveSmallCrossBlocks) {
    const Matrix seg = ar1_channels({0.9, 0.2}, 6000, 5);
    const Index L = 8, H = 4;
    const auto spec = make_spec(Family::PlainLinear, ChannelMode::CD, L, H, 1e-3);
    const FittedForecaster model = fit_linear_forecaster(spec, WindowedDataset(seg, L, H));
    const Matrix& e = model.effective_weights()[0];
    ASSERT_EQ(e.rows(), 2 * L);
    ASSERT_EQ(e.cols(), 2 * H);
    const double own = e.block(0, 0, L, H).norm();
    const double cross = e.block(L, 0, L, H).norm();
    EXPECT_LT(cross, 0.1 * own);
}

TEST(Fit, CdTrainingErrorNeverExceedsCi) {
    const Matrix seg = ar1_channels({0.7, 0.4, -0.5}, 800, 6);
    const WindowedDataset data(seg, 10, 3);
    for (auto family : {Family::PlainLinear, Family::DLinear}) {
        const auto ci = fit_linear_forecaster(make_spec(family, ChannelMode::CI, 10, 3), data);
        const auto cd = fit_linear_forecaster(make_spec(family, ChannelMode::CD, 10, 3), data);
        EXPECT_LE(evaluate_mse(cd, data), evaluate_mse(ci, data) * (1.0 + 1e-10));
    }
}

TEST(Predict, CiChannelsDoNotInteract) {
    const Matrix seg = ar1_channels({0.7, 0.4}, 300, 7);
    const auto model = fit_linear_forecaster(make_spec(Family::DLinear, ChannelMode::CI, 10, 3, 0.1),
                                             WindowedDataset(seg, 10, 3));
    Matrix x = seg.leftCols(10);
    x.row(1) = x.row(0);
    const Matrix y = model.predict(x);
    EXPECT_EQ(y.row(0), y.row(1));
    Matrix x2 = x;
    x2.row(1) = noise(1, 10, 99);
    EXPECT_EQ(model.predict(x2).row(0), y.row(0));
}

TEST(Predict, ZeroWindowGivesZeroForecast) {
    const Matrix seg = ar1_channels({0.7, 0.4}, 300, 8);
    for (auto mode : {ChannelMode::CI, ChannelMode::CD}) {
        for (bool revin : {false, true}) {
            ForecasterSpec spec = make_spec(Family::DLinear, mode, 10, 3, 0.1);
            spec.revin = revin;
            const auto model = fit_linear_forecaster(spec, WindowedDataset(seg, 10, 3));
            EXPECT_EQ(model.predict(Matrix::Zero(2, 10)), Matrix::Zero(2, 3));
        }
    }
}

TEST(Predict, MatchesExplicitDecompositionProduct) {
    const Matrix seg = ar1_channels({0.7, 0.4}, 300, 9);
    const Index L = 12, H = 5;
    ForecasterSpec spec = make_spec(Family::DLinear, ChannelMode::CD, L, H, 0.5);
    spec.intercept = true;
    const auto model = fit_linear_forecaster(spec, WindowedDataset(seg, L, H));
    const Matrix& w = model.weights()[0];
    const Matrix x = seg.middleCols(50, L);
    const Decomposition d = moving_average_decompose(x, spec.ma_kernel);
    Eigen::RowVectorXd g(2 * 2 * L + 1);
    g << d.trend.row(0), d.seasonal.row(0), d.trend.row(1), d.seasonal.row(1), 1.0;
    const Eigen::RowVectorXd flat = g * w;
    const Matrix y = model.predict(x);
    for (Index c = 0; c < 2; ++c) {
        for (Index h = 0; h < H; ++h) EXPECT_NEAR(y(c, h), flat(c * H + h), 1e-12);
    }
}

TEST(Predict, RejectsWrongShape) {
    const Matrix seg = ar1_channels({0.7}, 100, 1);
    const auto model = fit_linear_forecaster(make_spec(Family::PlainLinear, ChannelMode::CI, 5, 2),
                                             WindowedDataset(seg, 5, 2));
    EXPECT_THROW(model.predict(Matrix::Zero(1, 6)), std::invalid_argument);
    EXPECT_THROW(model.predict(Matrix::Zero(2, 5)), std::invalid_argument);
}

TEST(NormalEquations, FastAndExplicitAccumulationAgree) {
    const Matrix seg = ar1_channels({0.9, 0.3, -0.6}, 700, 10);
    const WindowedDataset data(seg, 20, 6);
    for (auto family : {Family::PlainLinear, Family::DLinear}) {
        for (auto mode : {ChannelMode::CI, ChannelMode::CD}) {
            for (bool intercept : {false, true}) {
                for (bool individual : {false, true}) {
                    if (mode == ChannelMode::CD && individual) continue;
                    ForecasterSpec spec = make_spec(family, mode, 20, 6);
                    spec.intercept = intercept;
                    spec.individual = individual;
                    const NormalEquations fast = detail::gram_fast(spec, data);
                    const NormalEquations slow = detail::gram_explicit(spec, data);
                    ASSERT_EQ(fast.gram.size(), slow.gram.size());
                    EXPECT_EQ(fast.samples, slow.samples);
                    for (std::size_t k = 0; k < fast.gram.size(); ++k) {
                        EXPECT_LT(max_rel_diff(fast.gram[k], slow.gram[k]), 1e-12);
                        EXPECT_LT(max_rel_diff(fast.cross[k], slow.cross[k]), 1e-12);
                    }
                }
            }
        }
    }
}

TEST(EvaluateMse, MatchesPerWindowPredictions) {
    const Matrix seg = ar1_channels({0.9, 0.3}, 400, 11);
    for (auto mode : {ChannelMode::CI, ChannelMode::CD}) {
        for (bool revin : {false, true}) {
            ForecasterSpec spec = make_spec(Family::DLinear, mode, 16, 4, 0.01);
            spec.revin = revin;
            spec.intercept = true;
            const auto model = fit_linear_forecaster(spec, WindowedDataset(seg.leftCols(300), 16, 4));
            const WindowedDataset test(seg.rightCols(100), 16, 4);
            const double fast = evaluate_mse(model, test);
            EXPECT_NEAR(fast, mse_by_predict(model, test), 1e-12 * fast);
        }
    }
    const auto model = fit_linear_forecaster(make_spec(Family::PlainLinear, ChannelMode::CI, 16, 4),
                                             WindowedDataset(seg, 16, 4));
    EXPECT_THROW(evaluate_mse(model, WindowedDataset(seg, 16, 5)), std::invalid_argument);
    EXPECT_THROW(evaluate_mse(model, WindowedDataset(seg.leftCols(10), 16, 4)), std::invalid_argument);
}

TEST(Fit, IndividualWeightsPerChannel) {
    const Matrix seg = ar1_channels({0.9, -0.6}, 2000, 12);
    ForecasterSpec spec = make_spec(Family::PlainLinear, ChannelMode::CI, 4, 1, 1e-6);
    spec.individual = true;
    const auto model = fit_linear_forecaster(spec, WindowedDataset(seg, 4, 1));
    ASSERT_EQ(model.weights().size(), 2u);
    EXPECT_NEAR(model.weights()[0](3, 0), 0.9, 0.05);
    EXPECT_NEAR(model.weights()[1](3, 0), -0.6, 0.05);

    Matrix twin(2, 600);
    twin.row(0) = seg.row(0).head(600);
    twin.row(1) = twin.row(0);
    spec.ridge_lambda = 0.0;
    const auto ind = fit_linear_forecaster(spec, WindowedDataset(twin, 4, 1));
    spec.individual = false;
    const auto shared = fit_linear_forecaster(spec, WindowedDataset(twin, 4, 1));
    EXPECT_LT(max_rel_diff(ind.weights()[0], shared.weights()[0]), 1e-9);
    EXPECT_LT(max_rel_diff(ind.weights()[1], shared.weights()[0]), 1e-9);
}

TEST(Fit, InterceptIsNotPenalized) {
    Matrix seg = noise(1, 1000, 13);
    seg.array() += 5.0;
    ForecasterSpec spec = make_spec(Family::PlainLinear, ChannelMode::CI, 6, 2, 1e12);
    spec.intercept = true;
    const WindowedDataset data(seg, 6, 2);
    const auto model = fit_linear_forecaster(spec, data);
    const Matrix& w = model.weights()[0];
    ASSERT_EQ(w.rows(), 7);
    Eigen::RowVectorXd target_mean = Eigen::RowVectorXd::Zero(2);
    for (Index i = 0; i < data.size(); ++i) target_mean += data.sample(i).Y;
    target_mean /= static_cast<double>(data.size());
    EXPECT_NEAR(w(6, 0), target_mean(0), 1e-6);
    EXPECT_NEAR(w(6, 1), target_mean(1), 1e-6);
    EXPECT_LT(w.topRows(6).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Persistence, RoundTripIsExact) {
    const Matrix seg = ar1_channels({0.9, 0.3}, 400, 14);
    ForecasterSpec spec = make_spec(Family::DLinear, ChannelMode::CI, 16, 4, 0.0123456789);
    spec.revin = true;
    spec.intercept = true;
    spec.individual = true;
    const auto model = fit_linear_forecaster(spec, WindowedDataset(seg, 16, 4));
    std::stringstream buf;
    save_forecaster(model, buf);
    const auto back = load_forecaster(buf);
    EXPECT_EQ(back.spec(), model.spec());
    EXPECT_EQ(back.channels(), 2);
    ASSERT_EQ(back.weights().size(), model.weights().size());
    for (std::size_t k = 0; k < model.weights().size(); ++k) EXPECT_EQ(back.weights()[k], model.weights()[k]);
    EXPECT_EQ(back.predict(seg.leftCols(16)), model.predict(seg.leftCols(16)));
}

TEST(Persistence, MalformedFilesAreRejected) {
    std::stringstream bad_header("linear-model 1\n");
    EXPECT_THROW(load_forecaster(bad_header), std::runtime_error);
    std::stringstream bad_version("tsf-linear-forecaster 2\n");
    EXPECT_THROW(load_forecaster(bad_version), std::runtime_error);

    const auto model = fit_linear_forecaster(make_spec(Family::PlainLinear, ChannelMode::CD, 3, 1),
                                             WindowedDataset(ar1_channels({0.5, 0.1}, 50, 15), 3, 1));
    std::stringstream buf;
    save_forecaster(model, buf);
    std::string text = buf.str();
    text.erase(text.size() / 2);
    std::stringstream truncated(text);
    EXPECT_THROW(load_forecaster(truncated), std::runtime_error);
}
