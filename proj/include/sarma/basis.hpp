#pragma once

#include "sarma/error.hpp"
#include "sarma/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace sarma {

/// Upper bound on every decay rate |lambda|, gamma. Library-wide default.
inline constexpr double kDefaultRhoBar = 0.98;

/// Two decay parameters closer than this are treated as equal.
inline constexpr double kIdentifiabilityTol = 1e-8;

/// Bounds of the admissible temporal parameter region.
struct OmegaBox {
    double rho_bar = kDefaultRhoBar;
    /// Smallest admissible |lambda|, gamma and distance of theta from {0, pi}.
    double eps = 1e-4;

    double max_rate() const { return rho_bar - 1e-8; }
};

/// Damped-sinusoid decay parameters gamma^j cos(j theta), gamma^j sin(j theta).
struct ComplexPair {
    double gamma = 0.5;
    double theta = std::numbers::pi / 4;

    bool operator==(const ComplexPair&) const = default;
};

/// Temporal parameters: p pure lags, r geometric decays, s damped sinusoids.
struct OmegaParams {
    int p = 0;
    std::vector<double> lambdas;
    std::vector<ComplexPair> pairs;

    int r() const { return static_cast<int>(lambdas.size()); }
    int s() const { return static_cast<int>(pairs.size()); }
    /// Number of basis columns p + r + 2s.
    int d() const { return p + r() + 2 * s(); }

    /// Flattened (lambda_1..lambda_r, gamma_1, theta_1, ..., gamma_s, theta_s).
    Vector as_vector() const {
        Vector v(r() + 2 * s());
        for (int k = 0; k < r(); ++k)
            v[k] = lambdas[k];
        for (int h = 0; h < s(); ++h) {
            v[r() + 2 * h] = pairs[h].gamma;
            v[r() + 2 * h + 1] = pairs[h].theta;
        }
        return v;
    }

    bool operator==(const OmegaParams&) const = default;
};

/// Largest decay rate max(|lambda_k|, gamma_h); 0 when r = s = 0.
inline double max_decay_rate(const OmegaParams& omega) {
    double rho = 0;
    for (double l : omega.lambdas)
        rho = std::max(rho, std::abs(l));
    for (const auto& pr : omega.pairs)
        rho = std::max(rho, pr.gamma);
    return rho;
}

/// Throws InvalidArgument unless omega lies inside the box and is ordered.
inline void validate_omega(const OmegaParams& omega, const OmegaBox& box = {}) {
    if (omega.p < 0)
        throw InvalidArgument("omega: p must be non-negative");
    for (double l : omega.lambdas)
        if (!(std::abs(l) > 0 && std::abs(l) < box.rho_bar))
            throw InvalidArgument("omega: |lambda| = " + std::to_string(std::abs(l)) + " outside (0, rho_bar)");
    for (const auto& pr : omega.pairs) {
        if (!(pr.gamma > 0 && pr.gamma < box.rho_bar))
            throw InvalidArgument("omega: gamma outside (0, rho_bar)");
        if (!(pr.theta > 0 && pr.theta < std::numbers::pi))
            throw InvalidArgument("omega: theta outside (0, pi)");
    }
}

/// True if lambdas ascend strictly and pairs ascend lexicographically by (gamma, theta).
inline bool is_canonical(const OmegaParams& omega) {
    for (int k = 1; k < omega.r(); ++k)
        if (!(omega.lambdas[k - 1] < omega.lambdas[k]))
            return false;
    for (int h = 1; h < omega.s(); ++h) {
        const auto& a = omega.pairs[h - 1];
        const auto& b = omega.pairs[h];
        if (!(a.gamma < b.gamma || (a.gamma == b.gamma && a.theta < b.theta)))
            return false;
    }
    return true;
}

/// A family of lag-loading functions l_{j,k}, j >= 1.
class TemporalBasis {
public:
    virtual ~TemporalBasis() = default;
    virtual Index columns() const = 0;
    /// l_{lag, column}; lag is 1-based, column 0-based.
    virtual double value(Index lag, Index column) const = 0;
};

/// Indicator, geometric and damped-sinusoid columns.
class SarmaBasis final : public TemporalBasis {
public:
    explicit SarmaBasis(OmegaParams omega) : omega_(std::move(omega)) {}

    Index columns() const override { return omega_.d(); }

    double value(Index lag, Index column) const override {
        if (lag < 1)
            throw DimensionError("basis: lag must be >= 1");
        if (column < 0 || column >= omega_.d())
            throw DimensionError("basis: column " + std::to_string(column) + " out of range");
        const int p = omega_.p;
        if (column < p)
            return lag == column + 1 ? 1.0 : 0.0;
        if (lag <= p)
            return 0.0;
        const double m = static_cast<double>(lag - p);
        const Index c = column - p;
        if (c < omega_.r())
            return std::pow(omega_.lambdas[static_cast<std::size_t>(c)], m);
        const Index h = (c - omega_.r()) / 2;
        const auto& pr = omega_.pairs[static_cast<std::size_t>(h)];
        const double amp = std::pow(pr.gamma, m);
        return (c - omega_.r()) % 2 == 0 ? amp * std::cos(m * pr.theta) : amp * std::sin(m * pr.theta);
    }

    const OmegaParams& omega() const { return omega_; }

private:
    OmegaParams omega_;
};

/// l_{lag, column}(omega). lag is 1-based, column 0-based in [0, d).
inline double ell(const OmegaParams& omega, Index lag, Index column) {
    return SarmaBasis(omega).value(lag, column);
}

/// Rows 1..max_lag of the loading matrix.
inline Matrix build_L(const TemporalBasis& basis, Index max_lag) {
    if (max_lag < 1)
        throw InvalidArgument("build_L: max_lag must be >= 1");
    Matrix L(max_lag, basis.columns());
    for (Index j = 0; j < max_lag; ++j)
        for (Index k = 0; k < basis.columns(); ++k)
            L(j, k) = basis.value(j + 1, k);
    return L;
}

inline Matrix build_L(const OmegaParams& omega, Index max_lag) { return build_L(SarmaBasis(omega), max_lag); }

/// First derivatives of the loading columns with respect to omega.
struct BasisDerivatives {
    Matrix d_lambda; ///< max_lag x r: d l^I(lambda_k) / d lambda_k
    Matrix d_gamma;  ///< max_lag x 2s: (cos, sin) columns of pair h differentiated in gamma_h
    Matrix d_theta;  ///< max_lag x 2s: same, in theta_h
};

inline BasisDerivatives basis_derivatives(const OmegaParams& omega, Index max_lag) {
    if (max_lag < 1)
        throw InvalidArgument("basis_derivatives: max_lag must be >= 1");
    BasisDerivatives d{Matrix::Zero(max_lag, omega.r()), Matrix::Zero(max_lag, 2 * omega.s()),
                       Matrix::Zero(max_lag, 2 * omega.s())};
    for (Index j = omega.p + 1; j <= max_lag; ++j) {
        const double m = static_cast<double>(j - omega.p);
        for (int k = 0; k < omega.r(); ++k)
            d.d_lambda(j - 1, k) = m * std::pow(omega.lambdas[k], m - 1);
        for (int h = 0; h < omega.s(); ++h) {
            const auto& pr = omega.pairs[h];
            const double c = std::cos(m * pr.theta), s = std::sin(m * pr.theta);
            const double gm = std::pow(pr.gamma, m);
            const double gm1 = m * std::pow(pr.gamma, m - 1);
            d.d_gamma(j - 1, 2 * h) = gm1 * c;
            d.d_gamma(j - 1, 2 * h + 1) = gm1 * s;
            d.d_theta(j - 1, 2 * h) = -m * gm * s;
            d.d_theta(j - 1, 2 * h + 1) = m * gm * c;
        }
    }
    return d;
}

/// L augmented with the lambda- and theta-derivative columns:
/// [I_p | L^I | L^II | dL^I | d_theta L^II], max_lag x (d + r + 2s).
inline Matrix build_L_stack(const OmegaParams& omega, Index max_lag) {
    const Matrix L = build_L(omega, max_lag);
    const BasisDerivatives der = basis_derivatives(omega, max_lag);
    Matrix out(max_lag, omega.d() + omega.r() + 2 * omega.s());
    out << L, der.d_lambda, der.d_theta;
    return out;
}

/// Sort lambdas ascending and pairs lexicographically, permuting the frontal
/// slices of g the same way. A pair's cos/sin slices move together.
inline std::pair<OmegaParams, Tensor3> canonicalize(const OmegaParams& omega, const Tensor3& g) {
    if (g.dim(3) != omega.d())
        throw DimensionError("canonicalize: tensor has " + std::to_string(g.dim(3)) + " slices, omega needs " +
                             std::to_string(omega.d()));
    const int p = omega.p, r = omega.r(), s = omega.s();

    std::vector<int> lam_order(static_cast<std::size_t>(r));
    std::iota(lam_order.begin(), lam_order.end(), 0);
    std::stable_sort(lam_order.begin(), lam_order.end(),
                     [&](int a, int b) { return omega.lambdas[a] < omega.lambdas[b]; });
    std::vector<int> pair_order(static_cast<std::size_t>(s));
    std::iota(pair_order.begin(), pair_order.end(), 0);
    std::stable_sort(pair_order.begin(), pair_order.end(), [&](int a, int b) {
        const auto& x = omega.pairs[a];
        const auto& y = omega.pairs[b];
        return x.gamma < y.gamma || (x.gamma == y.gamma && x.theta < y.theta);
    });

    OmegaParams out = omega;
    for (int k = 0; k < r; ++k)
        out.lambdas[k] = omega.lambdas[lam_order[k]];
    for (int h = 0; h < s; ++h)
        out.pairs[h] = omega.pairs[pair_order[h]];

    for (int k = 1; k < r; ++k)
        if (std::abs(out.lambdas[k] - out.lambdas[k - 1]) < kIdentifiabilityTol)
            throw IdentifiabilityError("canonicalize: duplicate lambda " + std::to_string(out.lambdas[k]));
    for (int h = 1; h < s; ++h)
        if (std::abs(out.pairs[h].gamma - out.pairs[h - 1].gamma) < kIdentifiabilityTol &&
            std::abs(out.pairs[h].theta - out.pairs[h - 1].theta) < kIdentifiabilityTol)
            throw IdentifiabilityError("canonicalize: duplicate (gamma, theta) pair");

    Tensor3 g_out = g;
    for (int k = 0; k < r; ++k)
        g_out.slice(p + k) = g.slice(p + lam_order[k]);
    for (int h = 0; h < s; ++h) {
        g_out.slice(p + r + 2 * h) = g.slice(p + r + 2 * pair_order[h]);
        g_out.slice(p + r + 2 * h + 1) = g.slice(p + r + 2 * pair_order[h] + 1);
    }
    return {std::move(out), std::move(g_out)};
}

/// Smallest J with rate^J / (1 - rate) * scale < tol; used to truncate
/// infinite lag sums.
inline Index truncation_lag(double rate, double scale = 1.0, double tol = 1e-10) {
    if (rate <= 0 || scale <= 0)
        return 1;
    if (rate >= 1)
        throw InvalidArgument("truncation_lag: rate must be < 1");
    const double j = std::log(tol * (1 - rate) / scale) / std::log(rate);
    return std::max<Index>(1, static_cast<Index>(std::ceil(j)));
}

} // namespace sarma
