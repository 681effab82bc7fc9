#pragma once

#include "sarma/error.hpp"
#include "sarma/fit.hpp"
#include "sarma/initial.hpp"
#include "sarma/parallel.hpp"
#include "sarma/tensor.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sarma {

enum class Estimator { rank, sltr };

inline std::string to_string(Estimator e) { return e == Estimator::rank ? "rank" : "sltr"; }

inline constexpr double kDefaultTauConstant = 0.5;
inline constexpr double kDefaultBicConstant = 0.1;

struct RatioTable {
    Vector sigma;  ///< singular values of the unfolding
    Vector ratios; ///< (sigma_{j+1} + tau) / (sigma_j + tau), j = 1..N-1
    Index selected = 1;
};

struct BicEntry {
    Orders orders;
    bool ok = false;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double dof = 0;
    double bic = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::string error;
};

struct OrderGrid {
    int p_max = 2;
    int r_max = 2;
    int s_max = 1;

    std::vector<Orders> points() const {
        std::vector<Orders> out;
        for (int p = 0; p <= p_max; ++p)
            for (int r = 0; r <= r_max; ++r)
                for (int s = 0; s <= s_max; ++s)
                    if (p + r + s > 0)
                        out.push_back({p, r, s});
        return out;
    }
};

struct SelectionReport {
    Ranks ranks{1, 1};
    Orders orders;
    std::array<RatioTable, 2> ratio_tables;
    std::vector<BicEntry> bic_table;
    double tau = 0;
    double c = kDefaultBicConstant;
    Estimator estimator = Estimator::rank;
};

/// Ridge-type ratio table of the mode-`mode` unfolding.
inline RatioTable ratio_table(const Tensor3& a, int mode, double tau) {
    if (!(tau > 0))
        throw InvalidArgument("ratio_table: tau must be positive");
    if (mode != 1 && mode != 2)
        throw InvalidArgument("ratio_table: mode must be 1 or 2");
    RatioTable t;
    t.sigma = unfolding_singular_values(a, mode);
    const Index n = a.dim(mode);
    if (n < 2)
        throw InvalidArgument("ratio_table: need N >= 2");
    if (t.sigma.size() == 0 || t.sigma(0) < 1e-14)
        throw NumericalError("select_ranks: degenerate initial estimate (all singular values below 1e-14)");
    Vector s = Vector::Zero(n);
    s.head(std::min<Index>(n, t.sigma.size())) = t.sigma.head(std::min<Index>(n, t.sigma.size()));
    t.ratios.resize(n - 1);
    for (Index j = 0; j + 1 < n; ++j)
        t.ratios(j) = (s(j + 1) + tau) / (s(j) + tau);
    Index best = 0;
    for (Index j = 1; j < t.ratios.size(); ++j)
        if (t.ratios(j) < t.ratios(best))
            best = j;
    t.selected = best + 1;
    return t;
}

/// argmin_{1 <= j <= N-1} (sigma_{j+1} + tau) / (sigma_j + tau) for the first
/// two unfoldings; ties go to the smaller rank.
inline Ranks select_ranks(const Tensor3& a, double tau, std::array<RatioTable, 2>* tables = nullptr) {
    RatioTable t1 = ratio_table(a, 1, tau), t2 = ratio_table(a, 2, tau);
    const Ranks r{t1.selected, t2.selected};
    if (tables)
        *tables = {std::move(t1), std::move(t2)};
    return r;
}

/// tau = c_tau sqrt(N P / T) with P = ceil(T^{1/3}), the error rate order of
/// the initial estimators. Both initial kinds share the same rule.
inline double default_tau(Index T, Index N, InitialKind kind = InitialKind::nuclear,
                          double c_tau = kDefaultTauConstant) {
    (void)kind;
    if (T <= N)
        throw InvalidArgument("default_tau: need T > N");
    const double P = static_cast<double>(default_truncation(T));
    return c_tau * std::sqrt(static_cast<double>(N) * P / static_cast<double>(T));
}

/// Effective parameter count used in the BIC.
inline double bic_dof(Ranks ranks, const Orders& orders, Index n, Estimator est) {
    const double r1 = static_cast<double>(ranks.first), r2 = static_cast<double>(ranks.second);
    const double dn = static_cast<double>(n);
    const double core = r1 * r2 * orders.d();
    if (est == Estimator::rank)
        return core + (r1 + r2) * dn;
    return core + r1 * std::log(dn * r1) + r2 * std::log(dn * r2);
}

inline double bic_value(double loss, Index T, double dof, double c) {
    const double t = static_cast<double>(T);
    return std::log(loss / t) + c * dof * std::log(t) / t;
}

/// Fits every grid point from a shared initial VAR(P) estimate and returns
/// the BIC argmin; ties go to the smallest d. `cfg` supplies everything but
/// ranks and orders.
inline SelectionReport select_orders(const Matrix& data, Ranks ranks, const OrderGrid& grid, double c,
                                     Estimator est, const Tensor3& a0, const FitConfig& cfg = {},
                                     unsigned threads = 1) {
    const auto points = grid.points();
    if (points.empty())
        throw InvalidArgument("select_orders: empty order grid");
    if (c < 0)
        throw InvalidArgument("select_orders: c must be >= 0");
    SelectionReport rep;
    rep.ranks = ranks;
    rep.c = c;
    rep.estimator = est;
    rep.bic_table.resize(points.size());
    const Index T = data.rows(), n = data.cols();
    parallel_for(points.size(), threads, [&](std::size_t i) {
        BicEntry& e = rep.bic_table[i];
        e.orders = points[i];
        try {
            FitConfig fc = cfg;
            fc.ranks = ranks;
            fc.orders = points[i];
            validate_config(fc);
            const SarmaModel init = initialize(data, ranks, points[i], a0);
            const FitReport fr = est == Estimator::rank ? fit_rank_constrained(data, fc, init) : fit_sltr(data, fc, init);
            e.loss = fr.final_loss();
            e.converged = fr.converged;
            e.dof = bic_dof(ranks, points[i], n, est);
            e.bic = bic_value(e.loss, T, e.dof, c);
            e.ok = std::isfinite(e.bic);
            if (!e.ok)
                e.error = "non-finite BIC";
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
    });
    std::size_t best = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& e = rep.bic_table[i];
        if (!e.ok)
            continue;
        if (best == points.size() || e.bic < rep.bic_table[best].bic ||
            (e.bic == rep.bic_table[best].bic && e.orders.d() < rep.bic_table[best].orders.d()))
            best = i;
    }
    if (best == points.size()) {
        std::string msg = "select_orders: every grid point failed:";
        for (const auto& e : rep.bic_table)
            msg += "\n  (" + std::to_string(e.orders.p) + "," + std::to_string(e.orders.r) + "," +
                   std::to_string(e.orders.s) + "): " + e.error;
        throw Error(msg);
    }
    rep.orders = rep.bic_table[best].orders;
    return rep;
}

struct SelectionOptions {
    OrderGrid grid;
    double c = kDefaultBicConstant;
    double tau = -1; ///< negative: default_tau
    double c_tau = kDefaultTauConstant;
    Estimator estimator = Estimator::rank;
    /// Initial estimator; by default nuclear for rank, group lasso for SLTR.
    std::optional<InitialKind> initial;
    double initial_reg = -1;
    unsigned threads = 1;
};

/// Ranks by the ridge ratio on the initial VAR(P) estimate, then orders by BIC.
inline SelectionReport select_model(const Matrix& data, const SelectionOptions& opt, const FitConfig& cfg = {}) {
    const InitialKind kind =
        opt.initial.value_or(opt.estimator == Estimator::rank ? InitialKind::nuclear : InitialKind::group_lasso);
    const Index T = data.rows(), n = data.cols();
    const Index lags = std::min<Index>(default_truncation(T), T - 1);
    const Tensor3 a0 = initial_var_estimator(data, kind, lags, opt.initial_reg);
    const double tau = opt.tau > 0 ? opt.tau : default_tau(T, n, kind, opt.c_tau);
    std::array<RatioTable, 2> tables;
    const Ranks ranks = select_ranks(a0, tau, &tables);
    SelectionReport rep = select_orders(data, ranks, opt.grid, opt.c, opt.estimator, a0, cfg, opt.threads);
    rep.ratio_tables = std::move(tables);
    rep.tau = tau;
    return rep;
}

} // namespace sarma
