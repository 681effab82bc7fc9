#pragma once

#include "sarma/basis.hpp"
#include "sarma/tensor.hpp"

#include <complex>
#include <vector>

namespace sarma {

using CMatrix = Eigen::MatrixXcd;

/// Lagged regressors z_{t,k} = sum_{j=1}^{t-1} l_{j,k}(omega) y_{t-j} for every
/// basis column, with pre-sample values set to zero.
///
/// `series` is N x T with y_t in column t-1. The result holds d matrices of
/// shape N x horizon; column t-1 of entry k is z_{t,k}. A horizon of T + 1
/// also yields the regressors for the first out-of-sample point.
///
/// The geometric and sinusoidal columns are produced by the recursion
/// c_t = mu (y_{t-p-1} + c_{t-1}), mu = lambda or gamma e^{i theta}, so the
/// cost is O(N T d) and no lag truncation happens.
namespace detail {

/// c_t and optionally its first two derivatives in mu.
template <typename Scalar>
struct GeometricSeries {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat value, d1, d2;
};

template <typename Scalar, typename Derived>
GeometricSeries<Scalar> geometric_series(const Eigen::MatrixBase<Derived>& series, int p, Scalar mu, Index horizon,
                                         int order) {
    using Mat = typename GeometricSeries<Scalar>::Mat;
    const Index n = series.rows(), T = series.cols();
    GeometricSeries<Scalar> out;
    out.value = Mat::Zero(n, horizon);
    if (order >= 1)
        out.d1 = Mat::Zero(n, horizon);
    if (order >= 2)
        out.d2 = Mat::Zero(n, horizon);
    for (Index t = 2; t <= horizon; ++t) {
        const Index src = t - p - 1;
        auto prev = out.value.col(t - 2);
        if (src >= 1 && src <= T) {
            const auto x = series.col(src - 1).template cast<Scalar>();
            out.value.col(t - 1) = mu * (x + prev);
            if (order >= 1)
                out.d1.col(t - 1) = x + prev + mu * out.d1.col(t - 2);
        } else {
            out.value.col(t - 1) = mu * prev;
            if (order >= 1)
                out.d1.col(t - 1) = prev + mu * out.d1.col(t - 2);
        }
        if (order >= 2)
            out.d2.col(t - 1) = Scalar(2) * out.d1.col(t - 2) + mu * out.d2.col(t - 2);
    }
    return out;
}

} // namespace detail

inline std::vector<Matrix> feature_series(const Matrix& series, const OmegaParams& omega, Index horizon) {
    const Index n = series.rows();
    std::vector<Matrix> z;
    z.reserve(static_cast<std::size_t>(omega.d()));
    for (int k = 0; k < omega.p; ++k) {
        Matrix zk = Matrix::Zero(n, horizon);
        for (Index t = k + 2; t <= horizon && t - k - 1 <= series.cols(); ++t)
            zk.col(t - 1) = series.col(t - k - 2);
        z.push_back(std::move(zk));
    }
    for (double lam : omega.lambdas)
        z.push_back(detail::geometric_series<double>(series, omega.p, lam, horizon, 0).value);
    for (const auto& pr : omega.pairs) {
        const auto c = detail::geometric_series<std::complex<double>>(series, omega.p, std::polar(pr.gamma, pr.theta),
                                                                       horizon, 0)
                           .value;
        z.push_back(c.real());
        z.push_back(c.imag());
    }
    return z;
}

inline std::vector<Matrix> feature_series(const Matrix& series, const OmegaParams& omega) {
    return feature_series(series, omega, series.cols());
}

/// Z_t = (z_{t,1}, ..., z_{t,d}) for a single 1-based time index t. `data`
/// is T x N (one row per time point).
inline Matrix z_features(const Matrix& data, const OmegaParams& omega, Index t) {
    if (t < 1 || t > data.rows())
        throw DimensionError("z_features: t out of range");
    const Matrix series = data.topRows(t).transpose();
    const auto z = feature_series(series, omega, t);
    Matrix out(data.cols(), omega.d());
    for (int k = 0; k < omega.d(); ++k)
        out.col(k) = z[static_cast<std::size_t>(k)].col(t - 1);
    return out;
}

/// sum_k G_k z_{t,k} for every t, as an N x horizon matrix.
inline Matrix predict_series(const Tensor3& g, const std::vector<Matrix>& z) {
    if (z.empty())
        throw DimensionError("predict_series: no features");
    Matrix out = Matrix::Zero(g.dim(1), z.front().cols());
    for (std::size_t k = 0; k < z.size(); ++k)
        out.noalias() += g.slice(static_cast<Index>(k)) * z[k];
    return out;
}

/// Feasible squared loss sum_t || y_t - sum_{j<t} A_j y_{t-j} ||^2 with zero
/// pre-sample values. `data` is T x N.
inline double loss(const Matrix& data, const OmegaParams& omega, const Tensor3& g) {
    if (g.dim(1) != data.cols() || g.dim(2) != data.cols() || g.dim(3) != omega.d())
        throw DimensionError("loss: tensor shape inconsistent with data or omega");
    const Matrix series = data.transpose();
    return (series - predict_series(g, feature_series(series, omega))).squaredNorm();
}

/// Second-moment statistics of the features; enough to evaluate the loss
/// and every least-squares update of the loadings and core.
struct FeatureStats {
    Index d = 0;
    std::vector<Matrix> cross; ///< d*d blocks; cross[k*d + l] = sum_t z_{t,k} z_{t,l}'
    std::vector<Matrix> resp;  ///< d blocks; resp[k] = sum_t y_t z_{t,k}'
    double yy = 0;             ///< sum_t ||y_t||^2

    const Matrix& c(Index k, Index l) const { return cross[static_cast<std::size_t>(k * d + l)]; }
};

inline FeatureStats feature_stats(const Matrix& series, const std::vector<Matrix>& z) {
    FeatureStats st;
    st.d = static_cast<Index>(z.size());
    st.cross.resize(static_cast<std::size_t>(st.d * st.d));
    st.resp.resize(static_cast<std::size_t>(st.d));
    for (Index k = 0; k < st.d; ++k) {
        for (Index l = k; l < st.d; ++l) {
            st.cross[static_cast<std::size_t>(k * st.d + l)] = z[k] * z[l].transpose();
            if (l != k)
                st.cross[static_cast<std::size_t>(l * st.d + k)] = st.cross[static_cast<std::size_t>(k * st.d + l)].transpose();
        }
        st.resp[static_cast<std::size_t>(k)] = series * z[k].transpose();
    }
    st.yy = series.squaredNorm();
    return st;
}

/// Loss evaluated through the statistics:
/// sum ||y||^2 - 2 sum_k tr(G_k' D_k) + sum_{k,l} tr(G_k' G_l C_{lk}).
inline double loss_from_stats(const FeatureStats& st, const Tensor3& g) {
    double val = st.yy;
    for (Index k = 0; k < st.d; ++k) {
        const auto gk = g.slice(k);
        val -= 2 * (gk.array() * st.resp[static_cast<std::size_t>(k)].array()).sum();
        for (Index l = 0; l < st.d; ++l)
            val += ((gk.transpose() * g.slice(l)).array() * st.c(l, k).transpose().array()).sum();
    }
    return val;
}

} // namespace sarma
