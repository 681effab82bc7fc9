#pragma once

#include "sarma/basis.hpp"
#include "sarma/error.hpp"
#include "sarma/features.hpp"
#include "sarma/initial.hpp"
#include "sarma/model.hpp"
#include "sarma/omega_search.hpp"
#include "sarma/prox.hpp"
#include "sarma/tensor.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace sarma {

/// Model orders (p, r, s).
struct Orders {
    int p = 0;
    int r = 1;
    int s = 0;

    int d() const { return p + r + 2 * s; }
    bool operator==(const Orders&) const = default;
};

using Ranks = std::pair<Index, Index>;

struct FitConfig {
    Ranks ranks{1, 1};
    Orders orders;
    int max_outer_iters = 200;
    double tol_rel_loss = 1e-6;
    /// l1 weight on the loadings, in units of the per-observation loss
    /// (the objective is loss / T + lambda_l1 sum_i ||U_i||_1).
    double lambda_l1 = 0;
    /// Penalties of the core splitting and the loading subproblem, relative to
    /// the data scale sum_t ||y_t||^2 / N.
    std::array<double, 2> admm_rhos{1.0, 1.0};
    double admm_kappa = 1.0;
    int admm_max_iters = 500;
    double admm_tol = 1e-6;
    NewtonOptions newton;
    OmegaBox omega_box;
    /// Global grid starts for the omega blocks in the first sweep; later
    /// sweeps refine locally from the current value.
    bool omega_multistart = true;
    std::uint64_t seed = 0;
};

inline void validate_config(const FitConfig& cfg) {
    if (cfg.ranks.first < 1 || cfg.ranks.second < 1)
        throw InvalidArgument("config: ranks must be >= 1");
    if (cfg.orders.p < 0 || cfg.orders.r < 0 || cfg.orders.s < 0 || cfg.orders.d() == 0)
        throw InvalidArgument("config: orders must be non-negative with p + r + s > 0");
    if (!(cfg.tol_rel_loss > 0) || !(cfg.admm_tol > 0) || !(cfg.newton.step_tol > 0))
        throw InvalidArgument("config: tolerances must be positive");
    if (cfg.max_outer_iters < 1 || cfg.admm_max_iters < 1 || cfg.newton.max_steps < 1)
        throw InvalidArgument("config: iteration limits must be positive");
    if (cfg.lambda_l1 < 0)
        throw InvalidArgument("config: lambda_l1 must be >= 0");
    if (!(cfg.admm_rhos[0] > 0) || !(cfg.admm_rhos[1] > 0) || !(cfg.admm_kappa > 0))
        throw InvalidArgument("config: ADMM penalties must be positive");
    if (!(cfg.omega_box.rho_bar > 0 && cfg.omega_box.rho_bar < 1) || !(cfg.omega_box.eps > 0))
        throw InvalidArgument("config: omega box must satisfy 0 < eps, 0 < rho_bar < 1");
    const Index d = cfg.orders.d();
    if (cfg.ranks.first > cfg.ranks.second * d || cfg.ranks.second > cfg.ranks.first * d)
        throw InvalidArgument("config: ranks violate R1 <= R2 d and R2 <= R1 d");
}

struct FitReport {
    SarmaModel model;
    std::vector<double> loss_trajectory; ///< entry 0 is the loss at the initial value
    bool converged = false;
    int iters = 0;
    std::string method;
    double lambda_l1 = 0;
    std::array<double, 2> admm_rhos{1.0, 1.0};
    double admm_kappa = 1.0;
    double wall_time_s = 0;
    int ridge_events = 0;       ///< least-squares solves that needed a ridge
    int omega_clamp_events = 0; ///< initial omega values moved into the box
    std::vector<std::string> warnings;

    double final_loss() const { return loss_trajectory.empty() ? 0.0 : loss_trajectory.back(); }
};

namespace detail {

inline std::string g3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline void check_data(const Matrix& data, const Orders& orders) {
    if (data.rows() < 2 || data.cols() < 1)
        throw DataError("fit: need at least two observations");
    if (!data.allFinite())
        throw DataError("fit: data contain non-finite values");
    if (data.rows() <= orders.d())
        throw DataError("fit: T = " + std::to_string(data.rows()) + " does not exceed d = " +
                        std::to_string(orders.d()));
    for (Index j = 0; j < data.cols(); ++j) {
        const auto col = data.col(j);
        if ((col.array() - col.mean()).abs().maxCoeff() == 0)
            throw DataError("fit: series " + std::to_string(j + 1) + " is constant");
    }
}

/// Solve x A = b for symmetric positive semi-definite A, adding a small ridge
/// when A is numerically singular.
inline Matrix right_solve_spd(const Matrix& b, const Matrix& a, int* ridge_events) {
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12)
        return ldlt.solve(b.transpose()).transpose();
    if (ridge_events)
        ++*ridge_events;
    Matrix ar = a;
    ar.diagonal().array() += 1e-10 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Matrix> l2(ar);
    return l2.solve(b.transpose()).transpose();
}

inline Vector solve_spd(const Matrix& a, const Vector& b, int* ridge_events) {
    return right_solve_spd(b.transpose(), a, ridge_events).transpose();
}

/// Xi = blocks U2' C_kl U2 (R2 d x R2 d) and M = blocks D_k U2 (N x R2 d).
inline std::pair<Matrix, Matrix> core_moments(const FeatureStats& st, const Matrix& u2) {
    const Index d = st.d, r2 = u2.cols(), n = u2.rows();
    Matrix xi(r2 * d, r2 * d), m(n, r2 * d);
    for (Index k = 0; k < d; ++k) {
        m.middleCols(k * r2, r2) = st.resp[static_cast<std::size_t>(k)] * u2;
        for (Index l = 0; l < d; ++l)
            xi.block(k * r2, l * r2, r2, r2) = u2.transpose() * st.c(k, l) * u2;
    }
    return {xi, m};
}

struct Factors {
    Matrix u1, u2;
    Tensor3 s; ///< R1 x R2 x d
    Tensor3 g() const { return mode_product(mode_product(s, u1, 1), u2, 2); }
};

/// argmin over S with U1, U2 fixed: S_(1) = (U1'U1)^{-1} U1' M Xi^{-1}.
inline Tensor3 update_core(const FeatureStats& st, const Matrix& u1, const Matrix& u2, int* ridge) {
    const auto [xi, m] = core_moments(st, u2);
    const Matrix q = u1.transpose() * u1;
    const Matrix left = right_solve_spd((u1.transpose() * m).transpose(), q, ridge).transpose();
    const Matrix s1 = right_solve_spd(left, xi, ridge);
    return fold(s1, 1, {u1.cols(), u2.cols(), st.d});
}

/// argmin over U1: (sum y v')(sum v v')^{-1} with v_t = S_(1) (I (x) U2') z_t.
inline Matrix update_u1(const FeatureStats& st, const Matrix& u2, const Tensor3& s, int* ridge) {
    const auto [xi, m] = core_moments(st, u2);
    const Matrix s1 = matricize(s, 1);
    return right_solve_spd(m * s1.transpose(), s1 * xi * s1.transpose(), ridge);
}

/// Normal equations of the loss in vec(U2) (N R2): H = sum_kl (S_k'QS_l) (x) C_kl,
/// b = vec(sum_k D_k' U1 S_k).
inline std::pair<Matrix, Vector> u2_normal_equations(const FeatureStats& st, const Matrix& u1, const Tensor3& s) {
    const Index n = u1.rows(), r2 = s.dim(2), d = st.d;
    const Matrix q = u1.transpose() * u1;
    Matrix h = Matrix::Zero(n * r2, n * r2);
    Matrix b = Matrix::Zero(n, r2);
    for (Index k = 0; k < d; ++k) {
        const auto sk = s.slice(k);
        b += st.resp[static_cast<std::size_t>(k)].transpose() * u1 * sk;
        const Matrix skq = sk.transpose() * q;
        for (Index l = 0; l < d; ++l) {
            const Matrix w = skq * s.slice(l);
            const Matrix& c = st.c(k, l);
            for (Index a = 0; a < r2; ++a)
                for (Index bb = 0; bb < r2; ++bb)
                    if (w(a, bb) != 0)
                        h.block(a * n, bb * n, n, n) += w(a, bb) * c;
        }
    }
    h = 0.5 * (h + h.transpose()).eval();
    return {h, b.reshaped()};
}

inline Matrix update_u2(const FeatureStats& st, const Matrix& u1, const Tensor3& s, int* ridge) {
    const auto [h, b] = u2_normal_equations(st, u1, s);
    return solve_spd(h, b, ridge).reshaped(u1.rows(), s.dim(2));
}

inline double direct_loss(const Matrix& series, const OmegaParams& om, const Tensor3& g) {
    return (series - predict_series(g, feature_series(series, om))).squaredNorm();
}

inline OmegaParams clamp_into_box(const OmegaParams& om, const OmegaBox& box, int* events) {
    OmegaParams out = om;
    const double top = box.max_rate();
    for (double& l : out.lambdas) {
        const double c = std::copysign(std::clamp(std::abs(l), box.eps, top), l == 0 ? 1.0 : l);
        if (c != l)
            ++*events, l = c;
    }
    for (auto& pr : out.pairs) {
        const ComplexPair c{std::clamp(pr.gamma, box.eps, top), std::clamp(pr.theta, box.eps, std::numbers::pi - box.eps)};
        if (!(c == pr))
            ++*events, pr = c;
    }
    return out;
}

inline Factors factors_from_model(const SarmaModel& init, Ranks ranks) {
    if (init.factors && init.factors->u1.cols() == ranks.first && init.factors->u2.cols() == ranks.second)
        return {init.factors->u1, init.factors->u2, init.factors->core};
    const TuckerFactors f = hosvd(init.g, ranks);
    return {f.u1, f.u2, f.core};
}

inline SarmaModel finish_model(const OmegaParams& om, const Tensor3& g, Ranks ranks, const Matrix& noise_cov) {
    auto [co, cg] = canonicalize(om, g);
    SarmaModel m;
    m.omega = std::move(co);
    m.g = std::move(cg);
    m.noise_cov = noise_cov;
    m.factors = hosvd(m.g, ranks);
    return m;
}

/// Residual covariance (1/T) sum e_t e_t', floored to stay positive definite.
inline Matrix residual_covariance(const Matrix& series, const OmegaParams& om, const Tensor3& g) {
    const Matrix e = series - predict_series(g, feature_series(series, om));
    Matrix cov = e * e.transpose() / static_cast<double>(series.cols());
    const double floor = 1e-12 * std::max(1.0, cov.diagonal().maxCoeff());
    cov.diagonal().array() += floor;
    return cov;
}

inline void check_init(const SarmaModel& init, const FitConfig& cfg, Index n) {
    if (init.g.dim(1) != n || init.g.dim(2) != n)
        throw DimensionError("fit: initial model dimension does not match the data");
    if (init.omega.p != cfg.orders.p || init.omega.r() != cfg.orders.r || init.omega.s() != cfg.orders.s)
        throw InvalidArgument("fit: initial model orders differ from the configuration");
    if (init.g.dim(3) != cfg.orders.d())
        throw DimensionError("fit: initial tensor has the wrong number of slices");
    if (cfg.ranks.first > n || cfg.ranks.second > n)
        throw InvalidArgument("fit: ranks exceed N");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Initialization

/// Candidate omega values for the initial grid: distinct lambdas from
/// {-0.75, -0.5, -0.25, 0.25, 0.5, 0.75}, distinct pairs from
/// {0.25, 0.5, 0.75} x {pi/4, 3pi/4}, each combination listed once.
inline std::vector<OmegaParams> initial_omega_grid(const Orders& orders) {
    static const std::vector<double> lam{-0.75, -0.5, -0.25, 0.25, 0.5, 0.75};
    std::vector<ComplexPair> pairs;
    for (double g : {0.25, 0.5, 0.75})
        for (double t : {std::numbers::pi / 4, 3 * std::numbers::pi / 4})
            pairs.push_back({g, t});

    auto combos = [](int n, int k) {
        std::vector<std::vector<int>> out;
        if (k > n)
            return out;
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            idx[static_cast<std::size_t>(i)] = i;
        while (true) {
            out.push_back(idx);
            int i = k - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i)
                --i;
            if (i < 0)
                break;
            ++idx[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
        return out;
    };
    std::vector<OmegaParams> grid;
    for (const auto& lc : combos(static_cast<int>(lam.size()), orders.r))
        for (const auto& pc : combos(static_cast<int>(pairs.size()), orders.s)) {
            OmegaParams om;
            om.p = orders.p;
            for (int i : lc)
                om.lambdas.push_back(lam[static_cast<std::size_t>(i)]);
            for (int i : pc)
                om.pairs.push_back(pairs[static_cast<std::size_t>(i)]);
            grid.push_back(std::move(om));
        }
    return grid;
}

struct InitializeResult {
    SarmaModel model;
    std::vector<double> candidate_losses;
};

/// Starting value from an initial VAR(P) estimate a0 (N x N x P): HOSVD on the
/// first two modes gives H, U1, U2; for every grid omega the core is
/// S = H x_3 L(omega)^dagger with H padded by zero slices; the candidate with
/// the smallest loss wins.
inline InitializeResult initialize_detailed(const Matrix& data, Ranks ranks, const Orders& orders,
                                            const Tensor3& a0) {
    if (orders.d() == 0)
        throw InvalidArgument("initialize: orders give d = 0");
    const Index n = data.cols();
    if (a0.dim(1) != n || a0.dim(2) != n)
        throw DimensionError("initialize: initial estimate does not match the data dimension");
    const TuckerFactors hf = hosvd(a0, ranks);
    const Index lags = a0.dim(3);
    const Index rows = std::max<Index>(lags, 200);
    Matrix h3 = Matrix::Zero(rows, ranks.first * ranks.second);
    h3.topRows(lags) = matricize(hf.core, 3);
    const Matrix series = data.transpose();

    InitializeResult best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (const auto& om : initial_omega_grid(orders)) {
        const Matrix L = build_L(om, rows);
        const Matrix s3 = L.colPivHouseholderQr().solve(h3);
        const Tensor3 s = fold(s3, 3, {ranks.first, ranks.second, om.d()});
        const Tensor3 g = mode_product(mode_product(s, hf.u1, 1), hf.u2, 2);
        const double l = detail::direct_loss(series, om, g);
        best.candidate_losses.push_back(l);
        if (l < best_loss) {
            best_loss = l;
            best.model.omega = om;
            best.model.g = g;
            best.model.factors = TuckerFactors{s, hf.u1, hf.u2};
        }
    }
    best.model.noise_cov = detail::residual_covariance(series, best.model.omega, best.model.g);
    return best;
}

inline SarmaModel initialize(const Matrix& data, Ranks ranks, const Orders& orders, const Tensor3& a0) {
    return initialize_detailed(data, ranks, orders, a0).model;
}

inline SarmaModel initialize(const Matrix& data, Ranks ranks, const Orders& orders, InitialKind kind,
                             double reg = -1) {
    const Index lags = std::min<Index>(default_truncation(data.rows()), data.rows() - 1);
    return initialize(data, ranks, orders, initial_var_estimator(data, kind, lags, reg));
}

// ---------------------------------------------------------------------------
// Rank-constrained estimator

/// Alternating minimization: a sweep over the omega blocks, then closed-form
/// least squares for U1, U2 and S. The factors are re-balanced through the
/// HOSVD of G after each sweep, which leaves G and the loss unchanged. A
/// sweep that would raise the loss (round-off at a fixed point) is discarded
/// and ends the run.
inline FitReport fit_rank_constrained(const Matrix& data, const FitConfig& cfg, const SarmaModel& init) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_config(cfg);
    detail::check_data(data, cfg.orders);
    detail::check_init(init, cfg, data.cols());
    const Matrix series = data.transpose();

    FitReport rep;
    rep.method = "rank";
    OmegaParams om = detail::clamp_into_box(init.omega, cfg.omega_box, &rep.omega_clamp_events);
    detail::Factors f = detail::factors_from_model(init, cfg.ranks);
    Tensor3 g = f.g();
    double cur = detail::direct_loss(series, om, g);
    rep.loss_trajectory.push_back(cur);
    const OmegaSearchOptions search{cfg.newton, cfg.omega_box, cfg.omega_multistart};

    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        OmegaSearchOptions sweep = search;
        sweep.multistart = search.multistart && it == 1;
        OmegaParams om_new = update_omega(series, om, g, sweep);
        const auto st = feature_stats(series, feature_series(series, om_new));
        detail::Factors fn = f;
        fn.u1 = detail::update_u1(st, fn.u2, fn.s, &rep.ridge_events);
        fn.u2 = detail::update_u2(st, fn.u1, fn.s, &rep.ridge_events);
        fn.s = detail::update_core(st, fn.u1, fn.u2, &rep.ridge_events);
        const Tensor3 g_new = fn.g();
        const double next = detail::direct_loss(series, om_new, g_new);
        rep.iters = it;
        if (!(next <= cur)) {
            rep.converged = std::isfinite(next);
            if (!rep.converged)
                rep.warnings.push_back("non-finite loss; stopped at previous iterate");
            break;
        }
        const TuckerFactors hb = hosvd(g_new, cfg.ranks);
        f = {hb.u1, hb.u2, hb.core};
        om = std::move(om_new);
        g = g_new;
        const double rel = (cur - next) / std::max(cur, std::numeric_limits<double>::min());
        cur = next;
        rep.loss_trajectory.push_back(cur);
        if (rel < cfg.tol_rel_loss) {
            rep.converged = true;
            break;
        }
    }
    rep.model = detail::finish_model(om, g, cfg.ranks, detail::residual_covariance(series, om, g));
    rep.wall_time_s = detail::seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------------------
// SLTR estimator

namespace detail {

struct SparseOrthoResult {
    Matrix b; ///< orthonormal iterate
    Matrix w; ///< sparse iterate
    int iters = 0;
    bool converged = false;
};

/// ADMM for min q(B) + lam ||B||_1 s.t. B'B = I, with the splitting B = W:
/// an orthogonality-constrained B-step, soft-thresholding for W and a scaled
/// dual update. `b_step(target)` must return argmin q(B) + kappa ||B - target||^2
/// over orthonormal B.
template <typename BStep>
SparseOrthoResult sparse_orthogonal_admm(BStep&& b_step, const Matrix& start, double lam, double kappa,
                                         int max_iters, double tol) {
    SparseOrthoResult res;
    res.b = start;
    res.w = start;
    Matrix m = Matrix::Zero(start.rows(), start.cols());
    const double scale = std::sqrt(static_cast<double>(start.size()));
    std::vector<double> history;
    for (res.iters = 1; res.iters <= max_iters; ++res.iters) {
        res.b = b_step(res.w - m);
        const Matrix w_old = res.w;
        res.w = soft_threshold(res.b + m, lam / (2 * kappa));
        m += res.b - res.w;
        const double primal = (res.b - res.w).norm(), dual = (res.w - w_old).norm();
        history.push_back(primal);
        if (primal < tol * scale && dual < tol * scale) {
            res.converged = true;
            break;
        }
        if (history.size() > 50) {
            const double before = history[history.size() - 51];
            if (primal > 10 * before && primal > 10 * tol * scale)
                throw NumericalError("SLTR loading ADMM diverged: primal residual grew from " + g3(before) +
                                     " to " + g3(primal) + " over 50 iterations");
        }
    }
    res.iters = std::min(res.iters, max_iters);
    return res;
}

struct RowOrthoSplit {
    Matrix d; ///< R_j x R_j diagonal
    Matrix v; ///< columns orthonormal
    Matrix c; ///< scaled dual, same shape as S_(j)
};

inline RowOrthoSplit init_split(const Matrix& sj) {
    RowOrthoSplit sp;
    sp.v = procrustes(sj.transpose());
    sp.d = Matrix::Zero(sj.rows(), sj.rows());
    for (Index i = 0; i < sj.rows(); ++i)
        sp.d(i, i) = sj.row(i).dot(sp.v.col(i));
    sp.c = Matrix::Zero(sj.rows(), sj.cols());
    return sp;
}

inline void update_split(RowOrthoSplit& sp, const Matrix& sj) {
    const Matrix a = sj + sp.c;
    for (Index i = 0; i < a.rows(); ++i)
        sp.d(i, i) = a.row(i).dot(sp.v.col(i));
    sp.v = procrustes(a.transpose() * sp.d);
    sp.c += sj - sp.d * sp.v.transpose();
}

inline Matrix hard_threshold(Matrix u, double t) {
    u = u.unaryExpr([t](double v) { return std::abs(v) < t ? 0.0 : v; });
    return u;
}

/// Loadings for reporting: the sparse ADMM copy, hard-thresholded, with
/// columns orthonormalized by right multiplication (row support preserved).
/// Falls back to the orthonormal copy if the sparse one lost rank.
inline Matrix finalize_loading(const Matrix& w, const Matrix& b) {
    for (const Matrix* cand : {&w, &b}) {
        const Matrix u = hard_threshold(*cand, 1e-6);
        try {
            return orthonormalize_columns(u);
        } catch (const NumericalError&) {
        }
    }
    return procrustes(b);
}

} // namespace detail

/// l1-penalized estimator with orthonormal loadings and a row-orthogonal core.
/// Each sweep: omega blocks; U1 and U2 by the sparse-orthogonal ADMM
/// subroutine; S by least squares augmented with the splitting S_(j) = D_j V_j';
/// D_j, V_j and the duals C_j. The reported model uses the hard-thresholded
/// sparse loadings, a least-squares core, and a rotation that makes the core
/// matricizations exactly row-orthogonal.
inline FitReport fit_sltr(const Matrix& data, const FitConfig& cfg, const SarmaModel& init) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_config(cfg);
    detail::check_data(data, cfg.orders);
    detail::check_init(init, cfg, data.cols());
    const Matrix series = data.transpose();
    const Index n = data.cols(), T = data.rows();
    const auto [r1, r2] = cfg.ranks;
    const Index d = cfg.orders.d();

    FitReport rep;
    rep.method = "sltr";
    rep.lambda_l1 = cfg.lambda_l1;
    rep.admm_rhos = cfg.admm_rhos;
    rep.admm_kappa = cfg.admm_kappa;

    const double scale = std::max(series.squaredNorm() / static_cast<double>(n), 1e-300);
    const double lam = cfg.lambda_l1 * static_cast<double>(T);
    const double kappa = cfg.admm_kappa * scale;
    const double rho1 = cfg.admm_rhos[0] * scale, rho2 = cfg.admm_rhos[1] * scale;

    OmegaParams om = detail::clamp_into_box(init.omega, cfg.omega_box, &rep.omega_clamp_events);
    const TuckerFactors h0 = hosvd(init.g, cfg.ranks);
    Matrix u1 = h0.u1, u2 = h0.u2, w1 = u1, w2 = u2;
    Tensor3 s = h0.core;
    detail::RowOrthoSplit sp1 = detail::init_split(matricize(s, 1));
    detail::RowOrthoSplit sp2 = detail::init_split(matricize(s, 2));
    Tensor3 g = mode_product(mode_product(s, u1, 1), u2, 2);
    double cur = detail::direct_loss(series, om, g);
    rep.loss_trajectory.push_back(cur);
    const OmegaSearchOptions search{cfg.newton, cfg.omega_box, cfg.omega_multistart};
    std::vector<double> residuals;

    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        OmegaSearchOptions sweep = search;
        sweep.multistart = search.multistart && it == 1;
        om = update_omega(series, om, g, sweep);
        const auto st = feature_stats(series, feature_series(series, om));

        // U1: with orthonormal U1 the quadratic part of the loss is constant,
        // so the B-step is a Procrustes problem.
        {
            const auto [xi, m] = detail::core_moments(st, u2);
            const Matrix s1 = matricize(s, 1);
            const Matrix syv = m * s1.transpose();
            auto b_step = [&](const Matrix& target) { return procrustes(syv + kappa * target); };
            const auto res = detail::sparse_orthogonal_admm(b_step, u1, lam, kappa, cfg.admm_max_iters, cfg.admm_tol);
            u1 = res.b;
            w1 = res.w;
        }
        // U2: general quadratic, B-step by SOC.
        {
            const auto [h, b] = detail::u2_normal_equations(st, u1, s);
            const double soc_pen = std::max(kappa, h.diagonal().mean());
            Matrix hk = h;
            hk.diagonal().array() += kappa;
            auto b_step = [&](const Matrix& target) {
                const Vector bb = b + kappa * target.reshaped();
                return soc_solve(hk, bb, n, r2, u2, SocOptions{soc_pen, 500, 1e-10}).x;
            };
            const auto res = detail::sparse_orthogonal_admm(b_step, u2, lam, kappa, cfg.admm_max_iters, cfg.admm_tol);
            u2 = res.b;
            w2 = res.w;
        }
        // S: least squares with the two splitting penalties.
        {
            const auto [xi, m] = detail::core_moments(st, u2);
            const Matrix q = u1.transpose() * u1;
            const std::array<Index, 3> dims{r1, r2, d};
            const Matrix rhs = u1.transpose() * m + rho1 * (sp1.d * sp1.v.transpose() - sp1.c) +
                               rho2 * matricize(fold(sp2.d * sp2.v.transpose() - sp2.c, 2, dims), 1);
            const Index rq = q.rows();
            Matrix sys(xi.rows() * rq, xi.cols() * rq);
            for (Index a = 0; a < xi.rows(); ++a)
                for (Index b = 0; b < xi.cols(); ++b)
                    sys.block(a * rq, b * rq, rq, rq) = xi(a, b) * q;
            sys.diagonal().array() += rho1 + rho2;
            const Vector sv = detail::solve_spd(sys, rhs.reshaped(), &rep.ridge_events);
            s = fold(sv.reshaped(r1, r2 * d), 1, dims);
        }
        detail::update_split(sp1, matricize(s, 1));
        detail::update_split(sp2, matricize(s, 2));
        g = mode_product(mode_product(s, u1, 1), u2, 2);
        const double next = detail::direct_loss(series, om, g);
        rep.iters = it;
        rep.loss_trajectory.push_back(next);

        const double primal = (matricize(s, 1) - sp1.d * sp1.v.transpose()).norm() +
                              (matricize(s, 2) - sp2.d * sp2.v.transpose()).norm();
        residuals.push_back(primal);
        if (residuals.size() > 50) {
            const double before = residuals[residuals.size() - 51];
            if (primal > 10 * before && primal > 10 * cfg.admm_tol * std::max(1.0, s.norm()))
                throw NumericalError("SLTR ADMM diverged: core splitting residual grew from " + detail::g3(before) +
                                     " to " + detail::g3(primal) + " over 50 iterations (lambda_l1=" +
                                     detail::g3(cfg.lambda_l1) + ")");
        }
        const double rel = std::abs(cur - next) / std::max(cur, std::numeric_limits<double>::min());
        cur = next;
        if (!std::isfinite(cur))
            throw NumericalError("SLTR: loss became non-finite");
        if (rel < cfg.tol_rel_loss && primal < cfg.admm_tol * std::max(1.0, s.norm())) {
            rep.converged = true;
            break;
        }
    }

    // Reported model.
    u1 = detail::finalize_loading(w1, u1);
    u2 = detail::finalize_loading(w2, u2);
    const auto st = feature_stats(series, feature_series(series, om));
    s = detail::update_core(st, u1, u2, &rep.ridge_events);
    const TuckerFactors rot = hosvd(s, cfg.ranks);
    u1 = u1 * rot.u1;
    u2 = u2 * rot.u2;
    s = rot.core;
    g = mode_product(mode_product(s, u1, 1), u2, 2);
    rep.loss_trajectory.push_back(detail::direct_loss(series, om, g));

    auto [co, cg] = canonicalize(om, g);
    // Canonicalization permutes slices only; loadings are unaffected.
    rep.model.omega = co;
    rep.model.g = cg;
    rep.model.factors = TuckerFactors{mode_product(mode_product(cg, u1.transpose(), 1), u2.transpose(), 2), u1, u2};
    rep.model.noise_cov = detail::residual_covariance(series, co, cg);
    rep.wall_time_s = detail::seconds_since(t0);
    return rep;
}

/// l1 weight used when none is given: 2 sigma^2 sqrt(log N / T), the order
/// of the largest noise entry of the loading gradient, with sigma^2 the mean
/// squared value of the data.
inline double default_lambda_l1(const Matrix& data) {
    const double n = static_cast<double>(std::max<Index>(data.cols(), 2));
    const double s2 = data.squaredNorm() / static_cast<double>(data.size());
    return 2 * s2 * std::sqrt(std::log(n) / static_cast<double>(data.rows()));
}

// ---------------------------------------------------------------------------
// Cross-validation of the l1 weight

struct CrossValidationResult {
    double lambda = 0;
    std::vector<double> grid;
    std::vector<double> scores; ///< mean one-step validation MSFE per grid value
};

/// Rolling-origin validation: for each fold k the model is initialized and
/// fitted on observations [0, e_k) and scored by one-step MSFE on
/// [e_k, e_k + block); e_k = T (1 - (folds - k) * block_fraction). Ties go to
/// the larger lambda.
inline CrossValidationResult cross_validate_lambda(const Matrix& data, const FitConfig& cfg,
                                                   const std::vector<double>& grid,
                                                   InitialKind init_kind = InitialKind::group_lasso, int folds = 3,
                                                   double block_fraction = 0.1) {
    if (grid.empty())
        throw InvalidArgument("cross_validate_lambda: empty grid");
    CrossValidationResult out;
    out.grid = grid;
    if (grid.size() == 1) {
        out.lambda = grid.front();
        out.scores.assign(1, std::numeric_limits<double>::quiet_NaN());
        return out;
    }
    const Index T = data.rows(), n = data.cols();
    const Index block = std::max<Index>(1, static_cast<Index>(std::floor(block_fraction * static_cast<double>(T))));
    std::vector<std::pair<Index, Index>> splits;
    for (int k = 0; k < folds; ++k) {
        const Index end = T - static_cast<Index>(folds - k) * block;
        if (end <= cfg.orders.d() + 2)
            continue;
        splits.push_back({end, std::min(T, end + block)});
    }
    if (splits.empty())
        throw DataError("cross_validate_lambda: series too short for the requested folds");
    out.scores.assign(grid.size(), 0.0);
    for (const auto& [end, stop] : splits) {
        const Matrix train = data.topRows(end);
        const SarmaModel init = initialize(train, cfg.ranks, cfg.orders, init_kind);
        const Matrix upto = data.topRows(stop).transpose();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            FitConfig c = cfg;
            c.lambda_l1 = grid[i];
            const FitReport rep = fit_sltr(train, c, init);
            const Matrix pred = predict_series(rep.model.g, feature_series(upto, rep.model.omega));
            const Matrix err = upto.middleCols(end, stop - end) - pred.middleCols(end, stop - end);
            out.scores[i] += err.squaredNorm() / static_cast<double>(err.size()) / static_cast<double>(splits.size());
        }
    }
    (void)n;
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = out.scores[i], b = out.scores[best];
        if (a < b - 1e-12 * std::abs(b) || (std::abs(a - b) <= 1e-12 * std::abs(b) && grid[i] > grid[best]))
            best = i;
    }
    out.lambda = grid[best];
    return out;
}

} // namespace sarma
