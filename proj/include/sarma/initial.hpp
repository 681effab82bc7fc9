#pragma once

#include "sarma/error.hpp"
#include "sarma/prox.hpp"
#include "sarma/tensor.hpp"

#include <cmath>
#include <string>

namespace sarma {

enum class InitialKind { nuclear, group_lasso };

/// Default VAR(P) truncation ceil(T^{1/3}).
inline Index default_truncation(Index T) {
    if (T < 1)
        throw InvalidArgument("default_truncation: T must be positive");
    Index p = static_cast<Index>(std::ceil(std::cbrt(static_cast<double>(T)) - 1e-12));
    return std::max<Index>(p, 1);
}

/// Stacked regression of a VAR(P): y_t on x_t = (y_{t-1}', ..., y_{t-P}')'
/// for t = P+1..T. `data` is T x N.
struct VarDesign {
    Matrix y; ///< N x n
    Matrix x; ///< NP x n
    Index lags = 0;
};

inline VarDesign var_design(const Matrix& data, Index lags) {
    const Index T = data.rows(), n = data.cols();
    if (lags < 1 || lags >= T)
        throw InvalidArgument("var_design: need 1 <= P < T");
    VarDesign d;
    d.lags = lags;
    const Index m = T - lags;
    d.y = data.bottomRows(m).transpose();
    d.x.resize(n * lags, m);
    for (Index j = 1; j <= lags; ++j)
        d.x.middleRows((j - 1) * n, n) = data.middleRows(lags - j, m).transpose();
    return d;
}

/// (A_1, ..., A_P) as an N x N x P tensor from its mode-1 unfolding.
inline Tensor3 lag_tensor(const Matrix& a1, Index n, Index lags) { return fold(a1, 1, {n, n, lags}); }

/// Least-squares VAR(P).
inline Tensor3 var_ols(const Matrix& data, Index lags) {
    const VarDesign d = var_design(data, lags);
    const Matrix xx = d.x * d.x.transpose();
    Eigen::LDLT<Matrix> ldlt(xx);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13))
        throw NumericalError("var_ols: design is singular (T too small for P?)");
    const Matrix a = ldlt.solve(d.x * d.y.transpose()).transpose();
    return lag_tensor(a, data.cols(), lags);
}

struct InitialOptions {
    int max_iters = 2000;
    double tol = 1e-7;
    double admm_rho = 1.0; ///< relative to the scale of (2/n) X X'
};

namespace detail {

inline double design_scale(const Matrix& xx) { return std::max(xx.diagonal().mean(), 1e-300); }

} // namespace detail

/// min (1/n) ||Y - A X||^2 + reg (||A_(1)||_* + ||A_(2)||_*) by consensus ADMM:
/// one copy of A per unfolding, each updated by singular value thresholding.
inline Tensor3 var_nuclear(const Matrix& data, Index lags, double reg, const InitialOptions& opt = {}) {
    if (reg < 0)
        throw InvalidArgument("var_nuclear: reg must be >= 0");
    if (reg == 0)
        return var_ols(data, lags);
    const Index n = data.cols();
    const VarDesign d = var_design(data, lags);
    const double m = static_cast<double>(d.y.cols());
    const Matrix xx = (2 / m) * d.x * d.x.transpose();
    const Matrix yx = (2 / m) * d.y * d.x.transpose();
    const double rho = opt.admm_rho * detail::design_scale(xx);
    Matrix sys = xx;
    sys.diagonal().array() += 2 * rho;
    Eigen::LLT<Matrix> llt(sys);
    if (llt.info() != Eigen::Success)
        throw NumericalError("var_nuclear: system not positive definite");

    const std::array<Index, 3> dims{n, n, lags};
    Matrix a = Matrix::Zero(n, n * lags), z1 = a, z2 = a, u1 = a, u2 = a;
    for (int it = 0; it < opt.max_iters; ++it) {
        a = llt.solve((yx + rho * (z1 - u1 + z2 - u2)).transpose()).transpose();
        const Matrix z1_old = z1, z2_old = z2;
        z1 = svt(a + u1, reg / rho);
        const Matrix a2 = matricize(fold(a + u2, 1, dims), 2);
        z2 = matricize(fold(svt(a2, reg / rho), 2, dims), 1);
        u1 += a - z1;
        u2 += a - z2;
        const double scale = std::max(1.0, a.norm());
        const double primal = std::sqrt((a - z1).squaredNorm() + (a - z2).squaredNorm());
        const double dual = rho * std::sqrt((z1 - z1_old).squaredNorm() + (z2 - z2_old).squaredNorm());
        if (primal < opt.tol * scale && dual < opt.tol * scale * rho)
            break;
    }
    return lag_tensor(0.5 * (z1 + z2), n, lags);
}

/// min (1/n) ||Y - sum_j A_j X_j||^2 + reg sum_j ||A_j||_F by accelerated
/// proximal gradient with step 1 / Lipschitz constant.
inline Tensor3 var_group_lasso(const Matrix& data, Index lags, double reg, const InitialOptions& opt = {}) {
    if (reg < 0)
        throw InvalidArgument("var_group_lasso: reg must be >= 0");
    if (reg == 0)
        return var_ols(data, lags);
    const Index n = data.cols();
    const VarDesign d = var_design(data, lags);
    const double m = static_cast<double>(d.y.cols());
    const Matrix xx = (2 / m) * d.x * d.x.transpose();
    const Matrix yx = (2 / m) * d.y * d.x.transpose();
    const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(xx, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    if (!(lip > 0) || !std::isfinite(lip))
        throw NumericalError("var_group_lasso: step size undefined (zero or non-finite design)");
    const double step = 1 / lip;
    Matrix a = Matrix::Zero(n, n * lags), v = a;
    double t = 1;
    for (int it = 0; it < opt.max_iters; ++it) {
        const Matrix grad = v * xx - yx;
        Matrix next = v - step * grad;
        for (Index j = 0; j < lags; ++j)
            next.middleCols(j * n, n) = group_soft_threshold(next.middleCols(j * n, n), step * reg);
        const double t_next = (1 + std::sqrt(1 + 4 * t * t)) / 2;
        v = next + ((t - 1) / t_next) * (next - a);
        const double change = (next - a).norm();
        a = std::move(next);
        t = t_next;
        if (change < opt.tol * std::max(1.0, a.norm()))
            break;
    }
    return lag_tensor(a, n, lags);
}

/// Regularization weight used when none is given: the order of the noise
/// level of the score, 0.3 sigma^2 (sqrt(N) + sqrt(N P)) / sqrt(n) for the
/// nuclear penalty and sigma^2 sqrt(N^2 log P) / sqrt(n) for the group penalty.
inline double default_initial_reg(const Matrix& data, Index lags, InitialKind kind) {
    const double n = static_cast<double>(data.cols());
    const double m = static_cast<double>(data.rows() - lags);
    const double s2 = data.squaredNorm() / static_cast<double>(data.size());
    if (kind == InitialKind::nuclear)
        return 0.3 * s2 * (std::sqrt(n) + std::sqrt(n * static_cast<double>(lags))) / std::sqrt(m);
    return s2 * n * std::sqrt(std::log(std::max<double>(2.0, static_cast<double>(lags)))) / std::sqrt(m);
}

/// Initial VAR(P) estimate of kind `kind` with weight `reg` (negative: default).
inline Tensor3 initial_var_estimator(const Matrix& data, InitialKind kind, Index lags, double reg = -1,
                                     const InitialOptions& opt = {}) {
    if (lags >= data.rows())
        throw InvalidArgument("initial_var_estimator: P must be smaller than T");
    if (reg < 0)
        reg = default_initial_reg(data, lags, kind);
    return kind == InitialKind::nuclear ? var_nuclear(data, lags, reg, opt) : var_group_lasso(data, lags, reg, opt);
}

inline std::string to_string(InitialKind k) { return k == InitialKind::nuclear ? "nuclear" : "group_lasso"; }

} // namespace sarma
