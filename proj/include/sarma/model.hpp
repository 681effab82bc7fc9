#pragma once

#include "sarma/basis.hpp"
#include "sarma/error.hpp"
#include "sarma/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sarma {

/// A SARMA model: temporal parameters, coefficient slices G_1..G_d and the
/// innovation covariance. `factors` optionally carries the Tucker form of g.
struct SarmaModel {
    OmegaParams omega;
    Tensor3 g; ///< N x N x d
    std::optional<TuckerFactors> factors;
    Matrix noise_cov; ///< N x N, symmetric positive definite

    Index dim() const { return g.dim(1); }

    /// Zero model of dimension n with identity noise covariance.
    static SarmaModel zero(Index n, OmegaParams omega) {
        SarmaModel m;
        m.g = Tensor3(n, n, omega.d());
        m.omega = std::move(omega);
        m.noise_cov = Matrix::Identity(n, n);
        return m;
    }
};

/// Throws if shapes disagree, the factors do not reproduce g, or the noise
/// covariance is not positive definite.
inline void validate_model(const SarmaModel& m) {
    const Index n = m.g.dim(1);
    if (m.g.dim(2) != n || m.g.dim(3) != m.omega.d())
        throw DimensionError("model: g must be N x N x d");
    if (m.noise_cov.rows() != n || m.noise_cov.cols() != n)
        throw DimensionError("model: noise covariance must be N x N");
    if ((m.noise_cov - m.noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + m.noise_cov.cwiseAbs().maxCoeff()))
        throw InvalidArgument("model: noise covariance not symmetric");
    if (Eigen::LLT<Matrix>(m.noise_cov).info() != Eigen::Success)
        throw InvalidArgument("model: noise covariance not positive definite");
    if (m.factors) {
        const double err = (m.factors->reconstruct() - m.g).norm();
        if (err > 1e-8 * std::max(1.0, m.g.norm()))
            throw InvalidArgument("model: factors do not reproduce g");
    }
}

/// A_j = sum_k l_{j,k}(omega) G_k for lag j >= 1.
inline Matrix ar_coefficient(const OmegaParams& omega, const Tensor3& g, Index lag) {
    if (lag < 1)
        throw InvalidArgument("ar_coefficient: lag must be >= 1");
    const SarmaBasis basis(omega);
    Matrix a = Matrix::Zero(g.dim(1), g.dim(2));
    for (Index k = 0; k < omega.d(); ++k) {
        const double w = basis.value(lag, k);
        if (w != 0.0)
            a += w * g.slice(k);
    }
    return a;
}

inline Matrix ar_coefficient(const SarmaModel& m, Index lag) { return ar_coefficient(m.omega, m.g, lag); }

/// A_1..A_J stacked as an N x N x J tensor (g x_3 L).
inline Tensor3 ar_tensor(const OmegaParams& omega, const Tensor3& g, Index max_lag) {
    return mode_product(g, build_L(omega, max_lag), 3);
}

inline std::vector<Matrix> ar_coefficients(const SarmaModel& m, Index max_lag) {
    return ar_tensor(m.omega, m.g, max_lag).slices();
}

inline double operator_norm(const Matrix& a) {
    if (a.size() == 0)
        return 0;
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

/// (1/rho - 1) - sum_k ||G_k||_op. Positive means the sufficient condition
/// for a unique stationary solution holds. rho is the largest decay rate
/// when p = 0; with p > 0 the indicator columns only start decaying after lag
/// p, so the conservative rho_bar is used.
inline double stationarity_margin(const SarmaModel& m, double rho_bar = kDefaultRhoBar) {
    double rho = m.omega.p > 0 ? rho_bar : max_decay_rate(m.omega);
    if (rho <= 0)
        rho = rho_bar;
    double total = 0;
    for (Index k = 0; k < m.g.dim(3); ++k)
        total += operator_norm(m.g.slice(k));
    return (1.0 / rho - 1.0) - total;
}

/// MA(infinity) weights Psi_0 = I, Psi_j = sum_{i=1}^{j} A_i Psi_{j-i}.
inline std::vector<Matrix> psi_weights(const SarmaModel& m, Index max_lag) {
    const Index n = m.dim();
    std::vector<Matrix> a = max_lag > 0 ? ar_coefficients(m, max_lag) : std::vector<Matrix>{};
    std::vector<Matrix> psi;
    psi.reserve(static_cast<std::size_t>(max_lag + 1));
    psi.push_back(Matrix::Identity(n, n));
    for (Index j = 1; j <= max_lag; ++j) {
        Matrix acc = Matrix::Zero(n, n);
        for (Index i = 1; i <= j; ++i)
            acc.noalias() += a[static_cast<std::size_t>(i - 1)] * psi[static_cast<std::size_t>(j - i)];
        psi.push_back(std::move(acc));
    }
    return psi;
}

/// Attach the HOSVD of g at the given ranks.
inline void attach_factors(SarmaModel& m, std::pair<Index, Index> ranks) {
    m.factors = hosvd(m.g, ranks);
}

} // namespace sarma
