#pragma once

#include "sarma/error.hpp"
#include "sarma/model.hpp"
#include "sarma/random.hpp"
#include "sarma/varma.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace sarma {

inline constexpr Index kDefaultBurnIn = 500;

namespace detail {

inline Matrix noise_factor(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument("simulate: noise covariance not positive definite");
    return llt.matrixL();
}

} // namespace detail

/// T x N sample of a VARMA process started from zeros, with the first
/// `burn_in` draws discarded.
inline Matrix simulate(const VarmaSpec& spec, Index T, Index burn_in, std::uint64_t seed) {
    if (T < 1)
        throw InvalidArgument("simulate: T must be >= 1");
    if (burn_in < 0)
        throw InvalidArgument("simulate: burn_in must be >= 0");
    validate_varma(spec);
    const Index n = spec.dim();
    const int p = spec.p(), q = spec.q();
    const Matrix chol = detail::noise_factor(spec.covariance());
    Rng rng(seed);
    const Index total = T + burn_in;
    const Matrix eps = chol * standard_normal(n, total, rng);
    Matrix y = Matrix::Zero(n, total);
    for (Index t = 0; t < total; ++t) {
        Vector v = eps.col(t);
        for (int i = 1; i <= p && i <= t; ++i)
            v.noalias() += spec.phi[static_cast<std::size_t>(i - 1)] * y.col(t - i);
        for (int j = 1; j <= q && j <= t; ++j)
            v.noalias() -= spec.theta[static_cast<std::size_t>(j - 1)] * eps.col(t - j);
        y.col(t) = v;
    }
    return y.rightCols(T).transpose();
}

/// T x N sample of y_t = sum_{j >= 1} A_j(omega, G) y_{t-j} + eps_t started
/// from zeros. The infinite lag sum is carried by the geometric recursions of
/// the basis, so no truncation is involved.
inline Matrix simulate(const SarmaModel& m, Index T, Index burn_in, std::uint64_t seed,
                       double rho_bar = kDefaultRhoBar) {
    if (T < 1)
        throw InvalidArgument("simulate: T must be >= 1");
    if (burn_in < 0)
        throw InvalidArgument("simulate: burn_in must be >= 0");
    validate_model(m);
    const double margin = stationarity_margin(m, rho_bar);
    if (!(margin > 0))
        throw StationarityError("simulate: stationarity margin " + std::to_string(margin) + " is not positive");
    const Index n = m.dim();
    const auto& om = m.omega;
    const int p = om.p, r = om.r(), s = om.s();
    const Matrix chol = detail::noise_factor(m.noise_cov);
    Rng rng(seed);
    const Index total = T + burn_in;
    const Matrix eps = chol * standard_normal(n, total, rng);

    Matrix y = Matrix::Zero(n, total);
    std::vector<Vector> real_state(static_cast<std::size_t>(r), Vector::Zero(n));
    std::vector<Eigen::VectorXcd> cplx_state(static_cast<std::size_t>(s), Eigen::VectorXcd::Zero(n));
    std::vector<std::complex<double>> mus;
    for (const auto& pr : om.pairs)
        mus.push_back(std::polar(pr.gamma, pr.theta));

    for (Index t = 0; t < total; ++t) {
        // Advance the geometric states to time t: c_t = mu (y_{t-p-1} + c_{t-1}).
        if (t >= 1) {
            const Index src = t - p - 1;
            for (int k = 0; k < r; ++k) {
                auto& c = real_state[static_cast<std::size_t>(k)];
                if (src >= 0)
                    c += y.col(src);
                c *= om.lambdas[static_cast<std::size_t>(k)];
            }
            for (int h = 0; h < s; ++h) {
                auto& c = cplx_state[static_cast<std::size_t>(h)];
                if (src >= 0)
                    c += y.col(src).cast<std::complex<double>>();
                c *= mus[static_cast<std::size_t>(h)];
            }
        }
        Vector v = eps.col(t);
        for (int k = 0; k < p && k < t; ++k)
            v.noalias() += m.g.slice(k) * y.col(t - k - 1);
        for (int k = 0; k < r; ++k)
            v.noalias() += m.g.slice(p + k) * real_state[static_cast<std::size_t>(k)];
        for (int h = 0; h < s; ++h) {
            const auto& c = cplx_state[static_cast<std::size_t>(h)];
            v.noalias() += m.g.slice(p + r + 2 * h) * c.real();
            v.noalias() += m.g.slice(p + r + 2 * h + 1) * c.imag();
        }
        y.col(t) = v;
    }
    return y.rightCols(T).transpose();
}

} // namespace sarma
