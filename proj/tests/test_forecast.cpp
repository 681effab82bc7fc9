#include "sarma/forecast.hpp"
#include "sarma/simulate.hpp"
#include "sarma/varma.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace sarma;
using sarma::testing::max_abs;

namespace {

SarmaModel var1_model(const Matrix& a) {
    SarmaModel m = SarmaModel::zero(a.rows(), OmegaParams{1, {}, {}});
    m.g.slice(0) = a;
    return m;
}

// y_t = G y_{t-1} with G a decaying rotation; no noise.
Matrix rotation_path(Index T) {
    const double c = 0.95 * std::cos(0.4), s = 0.95 * std::sin(0.4);
    Matrix g(2, 2);
    g << c, -s, s, c;
    Matrix y(T, 2);
    y.row(0) << 1.0, 0.5;
    for (Index t = 1; t < T; ++t)
        y.row(t) = (g * y.row(t - 1).transpose()).transpose();
    return y;
}

} // namespace

TEST(OneStep, ZeroModelForecastsZero) {
    Rng rng(1);
    const Matrix h = standard_normal(20, 3, rng);
    EXPECT_EQ(one_step_forecast(SarmaModel::zero(3, OmegaParams{0, {0.5}, {}}), h).norm(), 0);
}

TEST(OneStep, Var1UsesLastObservation) {
    Rng rng(2);
    const Matrix a = 0.3 * standard_normal(3, 3, rng);
    const Matrix h = standard_normal(15, 3, rng);
    EXPECT_LT(max_abs(one_step_forecast(var1_model(a), h) - a * h.row(14).transpose()), 1e-14);
}

// For y_t = eps_t - Theta eps_{t-1} with zero pre-sample noise the innovations
// are recovered recursively, eps_t = y_t + Theta eps_{t-1}, and the one-step
// forecast is -Theta eps_t.
TEST(OneStep, Vma1MatchesInnovationsRecursion) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        DgpConfig dc;
        dc.n = 4;
        dc.lambdas = {-0.6, 0.4};
        dc.pairs = {{0.5, 1.0}};
        const Dgp dgp = build_dgp(dc, rng);
        const Matrix theta = dgp.spec.theta[0];
        const Matrix y = simulate(dgp.spec, 60, 0, seed + 100);
        const SarmaModel m = varma_to_model(dgp.spec);
        Vector eps = Vector::Zero(4);
        for (Index t = 0; t < y.rows(); ++t) {
            eps = y.row(t).transpose() + theta * eps;
            const Vector oracle = -theta * eps;
            const Vector f = one_step_forecast(m, y.topRows(t + 1));
            EXPECT_LT(max_abs(f - oracle), 1e-10) << "t = " << t;
        }
    }
}

TEST(OneStep, LinearInHistory) {
    Rng rng(3);
    SarmaModel m = SarmaModel::zero(3, OmegaParams{1, {-0.5}, {{0.6, 2.0}}});
    m.g = sarma::testing::random_tensor(3, 3, 4, rng);
    const Matrix h1 = standard_normal(25, 3, rng), h2 = standard_normal(25, 3, rng);
    const Vector lhs = one_step_forecast(m, 2 * h1 - 0.5 * h2);
    const Vector rhs = 2 * one_step_forecast(m, h1) - 0.5 * one_step_forecast(m, h2);
    EXPECT_LT(max_abs(lhs - rhs), 1e-12);
}

TEST(OneStep, AgreesWithInSampleForecasts) {
    Rng rng(4);
    SarmaModel m = SarmaModel::zero(2, OmegaParams{0, {0.7}, {{0.5, 1.3}}});
    m.g = sarma::testing::random_tensor(2, 2, 3, rng);
    const Matrix y = standard_normal(30, 2, rng);
    const Matrix all = in_sample_forecasts(m, y);
    for (Index t : {1, 10, 29})
        EXPECT_LT(max_abs(all.row(t).transpose() - one_step_forecast(m, y.topRows(t))), 1e-12);
}

TEST(OneStep, RejectsBadHistory) {
    const SarmaModel m = SarmaModel::zero(3, OmegaParams{0, {0.5}, {}});
    EXPECT_THROW(one_step_forecast(m, Matrix(0, 3)), InvalidArgument);
    EXPECT_THROW(one_step_forecast(m, Matrix::Ones(4, 2)), DimensionError);
}

TEST(Standardize, ExampleAndRoundTrip) {
    Matrix x(3, 2);
    x << 1, 10, 2, 10.5, 3, 12;
    const Standardization s = standardize(x);
    EXPECT_NEAR(s.means(0), 2, 1e-15);
    EXPECT_NEAR(s.scales(0), std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(s.data(0, 0), -1 / std::sqrt(2.0 / 3.0), 1e-14);
    for (Index j = 0; j < 2; ++j) {
        EXPECT_NEAR(s.data.col(j).mean(), 0, 1e-14);
        EXPECT_NEAR(s.data.col(j).squaredNorm() / 3, 1, 1e-14);
    }
    EXPECT_LT(max_abs(s.inverse(s.data) - x), 1e-13);
    Matrix c = x;
    c.col(1).setConstant(4);
    EXPECT_THROW(standardize(c), DataError);
}

TEST(Metrics, StreamingMatchesBatch) {
    Rng rng(5);
    const Matrix actual = standard_normal(40, 3, rng), pred = standard_normal(40, 3, rng);
    std::vector<Index> origins(40);
    const ForecastReport r = make_forecast_report(origins, actual, pred);
    EXPECT_NEAR(r.msfe, msfe(actual - pred), 1e-13);
    EXPECT_NEAR(r.mafe, mafe(actual - pred), 1e-13);
    EXPECT_NEAR(r.msfe, (actual - pred).array().square().mean(), 1e-13);
}

TEST(Evaluate, WhiteNoiseWithZeroModel) {
    // Per-element MSFE of the zero forecast is the noise variance.
    Rng rng(6);
    const double sigma = 2.0;
    const Matrix y = sigma * standard_normal(20000, 3, rng);
    const ForecastReport r = evaluate_model(SarmaModel::zero(3, OmegaParams{0, {0.5}, {}}), y, 10000);
    EXPECT_NEAR(r.msfe, sigma * sigma, 0.03 * sigma * sigma);
    EXPECT_EQ(r.origins.front(), 10000);
    EXPECT_EQ(r.refit, Refit::never);
}

TEST(Rolling, NeedsFiveOrigins) {
    Rng rng(7);
    const Matrix y = standard_normal(40, 2, rng);
    RollingOptions opt;
    opt.ranks = Ranks{1, 1};
    opt.orders = Orders{0, 1, 0};
    EXPECT_THROW(rolling_evaluate(y, FitConfig{}, opt), InvalidArgument);
    opt.holdout_fraction = 0.8;
    EXPECT_THROW(rolling_evaluate(y, FitConfig{}, opt), InvalidArgument);
}

TEST(Rolling, RefitPoliciesAgreeOnExactModel) {
    const Matrix y = rotation_path(100);
    RollingOptions opt;
    opt.ranks = Ranks{2, 2};
    opt.orders = Orders{1, 0, 0};
    opt.refit = Refit::never;
    const ForecastReport never = rolling_evaluate(y, FitConfig{}, opt);
    opt.refit = Refit::each_origin;
    const ForecastReport each = rolling_evaluate(y, FitConfig{}, opt);
    ASSERT_EQ(never.forecasts.rows(), 10);
    EXPECT_LT(max_abs(never.forecasts - each.forecasts), 1e-8);
    EXPECT_LT(never.msfe, 1e-12);
    EXPECT_EQ(never.origins.front(), 90);
}

TEST(Rolling, ParallelRefitMatchesSerial) {
    Rng rng(8);
    DgpConfig dc;
    dc.n = 3;
    dc.lambdas = {0.6};
    const Matrix y = simulate(build_dgp(dc, rng).spec, 200, 200, 9);
    RollingOptions opt;
    opt.ranks = Ranks{1, 1};
    opt.orders = Orders{0, 1, 0};
    opt.holdout_fraction = 0.05;
    const ForecastReport a = rolling_evaluate(y, FitConfig{}, opt);
    opt.threads = 3;
    const ForecastReport b = rolling_evaluate(y, FitConfig{}, opt);
    EXPECT_EQ(a.forecasts, b.forecasts);
    EXPECT_EQ(a.msfe, b.msfe);
}
