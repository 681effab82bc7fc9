#pragma once

#include "sarma/error.hpp"
#include "sarma/features.hpp"
#include "sarma/fit.hpp"
#include "sarma/model.hpp"
#include "sarma/parallel.hpp"
#include "sarma/selection.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sarma {

/// y_{t+1} = sum_{j=1}^{t} A_j y_{t+1-j} from a t x N history with zero
/// pre-sample values. The lag sum is carried exactly by the basis recursions.
inline Vector one_step_forecast(const SarmaModel& m, const Matrix& history) {
    if (history.rows() < 1)
        throw InvalidArgument("one_step_forecast: empty history");
    if (history.cols() != m.dim())
        throw DimensionError("one_step_forecast: history has " + std::to_string(history.cols()) +
                             " series, model has " + std::to_string(m.dim()));
    const Matrix series = history.transpose();
    const Index h = history.rows() + 1;
    const auto z = feature_series(series, m.omega, h);
    Vector out = Vector::Zero(m.dim());
    for (std::size_t k = 0; k < z.size(); ++k)
        out.noalias() += m.g.slice(static_cast<Index>(k)) * z[k].col(h - 1);
    return out;
}

/// Forecasts of every row of `data` from the rows before it (T x N).
inline Matrix in_sample_forecasts(const SarmaModel& m, const Matrix& data) {
    const Matrix series = data.transpose();
    return predict_series(m.g, feature_series(series, m.omega)).transpose();
}

struct Standardization {
    Matrix data;
    Vector means;
    Vector scales;

    Matrix inverse(const Matrix& z) const {
        return (z.array().rowwise() * scales.transpose().array()).rowwise() + means.transpose().array();
    }
};

/// Column-wise z-scores with the population (divisor T) standard deviation.
inline Standardization standardize(const Matrix& data) {
    if (data.rows() < 2)
        throw DataError("standardize: need at least two observations");
    Standardization s;
    s.means = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - s.means.transpose();
    s.scales = (centered.colwise().squaredNorm() / static_cast<double>(data.rows())).cwiseSqrt().transpose();
    for (Index j = 0; j < data.cols(); ++j)
        if (!(s.scales(j) > 0))
            throw DataError("standardize: series " + std::to_string(j + 1) + " has zero variance");
    s.data = centered.array().rowwise() / s.scales.transpose().array();
    return s;
}

enum class Refit { never, each_origin };

inline std::string to_string(Refit r) { return r == Refit::never ? "never" : "each_origin"; }

inline double msfe(const Matrix& errors) { return errors.size() ? errors.squaredNorm() / static_cast<double>(errors.size()) : 0.0; }
inline double mafe(const Matrix& errors) {
    return errors.size() ? errors.cwiseAbs().sum() / static_cast<double>(errors.size()) : 0.0;
}

struct ForecastReport {
    std::vector<Index> origins; ///< 0-based row index of each forecast target
    Matrix forecasts;           ///< T_eval x N
    Matrix actual;              ///< T_eval x N
    Matrix errors;              ///< actual - forecasts
    double msfe = 0;
    double mafe = 0;
    Refit refit = Refit::each_origin;
    Ranks ranks{1, 1};
    Orders orders;
    Estimator estimator = Estimator::rank;
    int nonconverged_fits = 0;
};

/// Builds a report from targets and forecasts; the metrics are accumulated
/// origin by origin.
inline ForecastReport make_forecast_report(std::vector<Index> origins, Matrix actual, Matrix forecasts) {
    ForecastReport r;
    r.origins = std::move(origins);
    r.actual = std::move(actual);
    r.forecasts = std::move(forecasts);
    r.errors = r.actual - r.forecasts;
    double sq = 0, ab = 0;
    for (Index i = 0; i < r.errors.rows(); ++i) {
        sq += r.errors.row(i).squaredNorm();
        ab += r.errors.row(i).cwiseAbs().sum();
    }
    const double count = static_cast<double>(r.errors.size());
    r.msfe = count > 0 ? sq / count : 0.0;
    r.mafe = count > 0 ? ab / count : 0.0;
    return r;
}

struct RollingOptions {
    double holdout_fraction = 0.1;
    Refit refit = Refit::each_origin;
    Estimator estimator = Estimator::rank;
    InitialKind initial = InitialKind::nuclear;
    /// Fixed structure; when absent, ranks and orders are selected once on
    /// the initial training window.
    std::optional<Ranks> ranks;
    std::optional<Orders> orders;
    SelectionOptions selection;
    unsigned threads = 1;
};

/// Rolling one-step evaluation over the last `holdout_fraction` of the rows.
/// Structure is chosen once on the first training window; with refit =
/// each_origin the parameters are re-estimated on all rows before every
/// origin, starting from the first-window fit.
inline ForecastReport rolling_evaluate(const Matrix& data, const FitConfig& cfg, const RollingOptions& opt) {
    if (!(opt.holdout_fraction > 0 && opt.holdout_fraction <= 0.5))
        throw InvalidArgument("rolling_evaluate: holdout fraction must lie in (0, 0.5]");
    const Index T = data.rows();
    const Index n_eval = static_cast<Index>(std::floor(opt.holdout_fraction * static_cast<double>(T)));
    if (n_eval < 5)
        throw InvalidArgument("rolling_evaluate: holdout has " + std::to_string(n_eval) + " origins, need at least 5");
    const Index t0 = T - n_eval;
    const Matrix train = data.topRows(t0);

    FitConfig fc = cfg;
    if (opt.ranks && opt.orders) {
        fc.ranks = *opt.ranks;
        fc.orders = *opt.orders;
    } else {
        SelectionOptions so = opt.selection;
        so.estimator = opt.estimator;
        const SelectionReport sel = select_model(train, so, cfg);
        fc.ranks = opt.ranks.value_or(sel.ranks);
        fc.orders = opt.orders.value_or(sel.orders);
    }
    auto fit = [&](const Matrix& d, const SarmaModel& init) {
        return opt.estimator == Estimator::rank ? fit_rank_constrained(d, fc, init) : fit_sltr(d, fc, init);
    };
    const SarmaModel init = initialize(train, fc.ranks, fc.orders, opt.initial);
    const FitReport base = fit(train, init);

    std::vector<Index> origins(static_cast<std::size_t>(n_eval));
    for (Index i = 0; i < n_eval; ++i)
        origins[static_cast<std::size_t>(i)] = t0 + i;
    Matrix forecasts(n_eval, data.cols());
    int nonconverged = base.converged ? 0 : 1;
    if (opt.refit == Refit::never) {
        forecasts = in_sample_forecasts(base.model, data).bottomRows(n_eval);
    } else {
        std::vector<int> flags(static_cast<std::size_t>(n_eval), 0);
        parallel_for(static_cast<std::size_t>(n_eval), opt.threads, [&](std::size_t i) {
            const Index o = origins[i];
            const Matrix hist = data.topRows(o);
            const FitReport fr = o == t0 ? base : fit(hist, base.model);
            flags[i] = fr.converged ? 0 : 1;
            forecasts.row(static_cast<Index>(i)) = one_step_forecast(fr.model, hist).transpose();
        });
        for (std::size_t i = 1; i < flags.size(); ++i)
            nonconverged += flags[i];
    }
    ForecastReport rep = make_forecast_report(origins, data.bottomRows(n_eval), forecasts);
    rep.refit = opt.refit;
    rep.ranks = fc.ranks;
    rep.orders = fc.orders;
    rep.estimator = opt.estimator;
    rep.nonconverged_fits = nonconverged;
    return rep;
}

/// Forecasts from a fixed model at the last `n_eval` rows (no refitting).
inline ForecastReport evaluate_model(const SarmaModel& m, const Matrix& data, Index n_eval) {
    if (n_eval < 1 || n_eval >= data.rows())
        throw InvalidArgument("evaluate_model: need 1 <= n_eval < T");
    if (data.cols() != m.dim())
        throw DimensionError("evaluate_model: data and model dimensions differ");
    std::vector<Index> origins;
    for (Index o = data.rows() - n_eval; o < data.rows(); ++o)
        origins.push_back(o);
    ForecastReport r =
        make_forecast_report(std::move(origins), data.bottomRows(n_eval), in_sample_forecasts(m, data).bottomRows(n_eval));
    r.refit = Refit::never;
    r.orders = {m.omega.p, m.omega.r(), m.omega.s()};
    if (m.factors)
        r.ranks = {m.factors->u1.cols(), m.factors->u2.cols()};
    return r;
}

} // namespace sarma
