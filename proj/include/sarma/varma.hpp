#pragma once

#include "sarma/basis.hpp"
#include "sarma/error.hpp"
#include "sarma/model.hpp"
#include "sarma/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sarma {

/// y_t = sum_i Phi_i y_{t-i} + eps_t - sum_j Theta_j eps_{t-j}.
struct VarmaSpec {
    std::vector<Matrix> phi;
    std::vector<Matrix> theta;
    Matrix noise_cov; ///< empty means identity

    Index dim() const {
        if (!phi.empty())
            return phi.front().rows();
        if (!theta.empty())
            return theta.front().rows();
        return noise_cov.rows();
    }
    int p() const { return static_cast<int>(phi.size()); }
    int q() const { return static_cast<int>(theta.size()); }
    Matrix covariance() const {
        return noise_cov.size() ? noise_cov : Matrix::Identity(dim(), dim());
    }
};

/// MA companion matrix (Nq x Nq) with Theta_1..Theta_q in the top block row.
inline Matrix ma_companion(const VarmaSpec& spec) {
    const Index n = spec.dim();
    const Index q = spec.q();
    Matrix c = Matrix::Zero(n * q, n * q);
    for (Index j = 0; j < q; ++j)
        c.block(0, j * n, n, n) = spec.theta[static_cast<std::size_t>(j)];
    if (q > 1)
        c.bottomLeftCorner(n * (q - 1), n * (q - 1)).setIdentity();
    return c;
}

inline Eigen::VectorXcd companion_eigenvalues(const Matrix& companion) {
    if (companion.size() == 0)
        return {};
    Eigen::EigenSolver<Matrix> es(companion, false);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigenvalue computation did not converge");
    return es.eigenvalues();
}

inline void validate_varma(const VarmaSpec& spec) {
    const Index n = spec.dim();
    if (n < 1)
        throw DimensionError("varma: empty specification");
    for (const auto& m : spec.phi)
        if (m.rows() != n || m.cols() != n)
            throw DimensionError("varma: Phi matrices must be N x N");
    for (const auto& m : spec.theta)
        if (m.rows() != n || m.cols() != n)
            throw DimensionError("varma: Theta matrices must be N x N");
    const auto ev = companion_eigenvalues(ma_companion(spec));
    for (Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i]) >= 1.0)
            throw StationarityError("varma: MA polynomial not invertible (companion eigenvalue modulus " +
                                    std::to_string(std::abs(ev[i])) + ")");
}

/// A_1..A_J of the VAR(infinity) form through powers of the MA companion:
/// A_k = sum_{i=0}^{min(p,k)} P Theta^{k-i} P' Phi_i with Phi_0 = -I.
inline std::vector<Matrix> var_inf_coefficients(const VarmaSpec& spec, Index max_lag) {
    validate_varma(spec);
    const Index n = spec.dim();
    const int p = spec.p(), q = spec.q();
    // head[m] = P Theta^m P'; equals I for m = 0 and vanishes for m > 0 when q = 0.
    std::vector<Matrix> head;
    head.reserve(static_cast<std::size_t>(max_lag + 1));
    head.push_back(Matrix::Identity(n, n));
    if (q > 0) {
        const Matrix comp = ma_companion(spec);
        Matrix row = Matrix::Zero(n, n * q); // P Theta^m
        row.leftCols(n).setIdentity();
        for (Index m = 1; m <= max_lag; ++m) {
            row = row * comp;
            head.push_back(row.leftCols(n));
        }
    } else {
        for (Index m = 1; m <= max_lag; ++m)
            head.push_back(Matrix::Zero(n, n));
    }
    std::vector<Matrix> a;
    a.reserve(static_cast<std::size_t>(max_lag));
    for (Index k = 1; k <= max_lag; ++k) {
        Matrix ak = -head[static_cast<std::size_t>(k)];
        for (Index i = 1; i <= std::min<Index>(p, k); ++i)
            ak.noalias() += head[static_cast<std::size_t>(k - i)] * spec.phi[static_cast<std::size_t>(i - 1)];
        a.push_back(std::move(ak));
    }
    return a;
}

/// Temporal parameters and slices of a SARMA representation.
struct SarmaParts {
    OmegaParams omega;
    Tensor3 g;
};

/// Structured SARMA form of a VARMA model whose nonzero MA companion
/// eigenvalues are simple. The decay parameters are read off the companion
/// spectrum; the slices are the least-squares fit of the exact A_j on the
/// basis rows.
inline SarmaParts varma_to_sarma(const VarmaSpec& spec) {
    validate_varma(spec);
    const Index n = spec.dim();
    OmegaParams omega;
    omega.p = spec.p();

    const auto ev = companion_eigenvalues(ma_companion(spec));
    const double zero_tol = 1e-9;
    std::vector<double> reals;
    std::vector<std::complex<double>> complexes;
    for (Index i = 0; i < ev.size(); ++i) {
        const auto mu = ev[i];
        if (std::abs(mu) < zero_tol)
            continue;
        if (std::abs(mu.imag()) <= 1e-9 * std::max(1.0, std::abs(mu)))
            reals.push_back(mu.real());
        else if (mu.imag() > 0)
            complexes.push_back(mu);
    }
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 1; i < reals.size(); ++i)
        if (std::abs(reals[i] - reals[i - 1]) < kIdentifiabilityTol)
            throw IdentifiabilityError("varma_to_sarma: repeated real eigenvalue " + std::to_string(reals[i]));
    for (std::size_t i = 0; i < complexes.size(); ++i)
        for (std::size_t j = i + 1; j < complexes.size(); ++j)
            if (std::abs(complexes[i] - complexes[j]) < kIdentifiabilityTol)
                throw IdentifiabilityError("varma_to_sarma: repeated complex eigenvalue pair");
    omega.lambdas = reals;
    for (const auto& mu : complexes)
        omega.pairs.push_back({std::abs(mu), std::arg(mu)});
    std::sort(omega.pairs.begin(), omega.pairs.end(), [](const ComplexPair& a, const ComplexPair& b) {
        return a.gamma < b.gamma || (a.gamma == b.gamma && a.theta < b.theta);
    });

    const Index d = omega.d();
    if (d == 0)
        throw InvalidArgument("varma_to_sarma: model has no lag structure");
    const Index rows = std::max<Index>(4 * d, omega.p + 64);
    const auto a = var_inf_coefficients(spec, rows);
    const Matrix L = build_L(omega, rows);
    Matrix a3(rows, n * n); // mode-3 unfolding of the AR tensor
    for (Index j = 0; j < rows; ++j)
        a3.row(j) = a[static_cast<std::size_t>(j)].reshaped().transpose();
    const Matrix g3 = L.colPivHouseholderQr().solve(a3);
    const double resid = (L * g3 - a3).norm();
    if (!(resid <= 1e-7 * std::max(1.0, a3.norm())))
        throw NumericalError("varma_to_sarma: basis does not reproduce the AR coefficients (residual " +
                             std::to_string(resid) + "); eigenvalues may be defective");
    return {omega, fold(g3, 3, {n, n, d})};
}

/// Both representations: raw A_1..A_J and, when requested, the structured form.
struct VarInfResult {
    std::vector<Matrix> a;
    std::optional<SarmaParts> structured;
};

inline VarInfResult varma_to_var_inf(const VarmaSpec& spec, Index max_lag, bool structured = true) {
    VarInfResult out{var_inf_coefficients(spec, max_lag), std::nullopt};
    if (structured)
        out.structured = varma_to_sarma(spec);
    return out;
}

/// SarmaModel equivalent of a VARMA specification.
inline SarmaModel varma_to_model(const VarmaSpec& spec) {
    auto parts = varma_to_sarma(spec);
    SarmaModel m;
    m.omega = std::move(parts.omega);
    m.g = std::move(parts.g);
    m.noise_cov = spec.covariance();
    return m;
}

enum class DgpKind { vma1 = 1, varma11 = 2 };

/// Simulation designs: Theta = B J B^{-1} with J the real Jordan form
/// diag(lambda_1..lambda_r, C(gamma_1, theta_1).., 0), and for the VARMA(1,1)
/// design also Phi = B diag(delta, 0, ..) B^{-1}.
struct DgpConfig {
    DgpKind kind = DgpKind::vma1;
    Index n = 10;
    std::vector<double> lambdas{-0.7};
    std::vector<ComplexPair> pairs;
    double delta = 0.5;
    /// Number of nonzero rows in B; 0 means dense.
    Index sparsity = 0;
};

struct Dgp {
    VarmaSpec spec;
    Matrix b;                  ///< N x N mixing matrix
    std::vector<Index> support; ///< rows of B that may be nonzero
};

inline Dgp build_dgp(const DgpConfig& cfg, Rng& rng) {
    const Index n = cfg.n;
    const Index k = static_cast<Index>(cfg.lambdas.size() + 2 * cfg.pairs.size());
    if (n < 1)
        throw InvalidArgument("build_dgp: n must be positive");
    if (cfg.sparsity < 0 || cfg.sparsity > n)
        throw InvalidArgument("build_dgp: sparsity must lie in [0, N]");
    const Index active = cfg.sparsity > 0 ? cfg.sparsity : n;
    if (k > active)
        throw InvalidArgument("build_dgp: r + 2s exceeds the number of active rows");
    if (k == 0)
        throw InvalidArgument("build_dgp: need at least one MA eigenvalue");
    for (double l : cfg.lambdas)
        if (!(std::abs(l) > 0 && std::abs(l) < 1))
            throw InvalidArgument("build_dgp: |lambda| must lie in (0, 1)");
    for (const auto& pr : cfg.pairs)
        if (!(pr.gamma > 0 && pr.gamma < 1 && pr.theta > 0 && pr.theta < std::numbers::pi))
            throw InvalidArgument("build_dgp: (gamma, theta) outside (0,1) x (0,pi)");

    Matrix jordan = Matrix::Zero(n, n);
    Index pos = 0;
    for (double l : cfg.lambdas)
        jordan(pos, pos) = l, ++pos;
    for (const auto& pr : cfg.pairs) {
        const double c = pr.gamma * std::cos(pr.theta), s = pr.gamma * std::sin(pr.theta);
        jordan(pos, pos) = c;
        jordan(pos, pos + 1) = s;
        jordan(pos + 1, pos) = -s;
        jordan(pos + 1, pos + 1) = c;
        pos += 2;
    }

    Dgp out;
    if (cfg.sparsity == 0) {
        out.b = random_orthogonal(n, rng);
        out.support.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i)
            out.support[static_cast<std::size_t>(i)] = i;
    } else {
        const Matrix bs = random_orthogonal(active, rng);
        std::vector<Index> rows(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i)
            rows[static_cast<std::size_t>(i)] = i;
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(static_cast<std::size_t>(active));
        std::sort(rows.begin(), rows.end());
        out.b = Matrix::Zero(n, n);
        for (Index i = 0; i < active; ++i)
            out.b.row(rows[static_cast<std::size_t>(i)]).head(active) = bs.row(i);
        out.support = rows;
    }
    // B has orthonormal (or zero) columns, so B' acts as its (pseudo-)inverse.
    out.spec.theta.push_back(out.b * jordan * out.b.transpose());
    if (cfg.kind == DgpKind::varma11) {
        Matrix kmat = Matrix::Zero(n, n);
        kmat(0, 0) = cfg.delta;
        out.spec.phi.push_back(out.b * kmat * out.b.transpose());
    }
    out.spec.noise_cov = Matrix::Identity(n, n);
    return out;
}

} // namespace sarma
