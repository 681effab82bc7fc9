#pragma once

#include "sarma/error.hpp"
#include "sarma/tensor.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace sarma {

/// Elementwise sign(x) max(|x| - t, 0); the prox of t ||.||_1.
inline Matrix soft_threshold(const Matrix& x, double t) {
    if (t < 0)
        throw InvalidArgument("soft_threshold: negative threshold");
    return x.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

/// Prox of t ||.||_F: shrink the whole block towards zero.
inline Matrix group_soft_threshold(const Matrix& x, double t) {
    const double n = x.norm();
    if (n <= t)
        return Matrix::Zero(x.rows(), x.cols());
    return (1 - t / n) * x;
}

/// Singular value soft-thresholding, the prox of t ||.||_*.
inline Matrix svt(const Matrix& x, double t, Index* rank = nullptr) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("svt: SVD did not converge");
    const Vector s = (svd.singularValues().array() - t).max(0.0).matrix();
    if (rank)
        *rank = (s.array() > 0).count();
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// Orthonormal polar factor of a (m x n, m >= n): argmax tr(Q' a) over Q'Q = I.
/// Equivalently the nearest matrix with orthonormal columns in Frobenius norm.
inline Matrix procrustes(const Matrix& a) {
    if (a.rows() < a.cols())
        throw DimensionError("procrustes: need rows >= cols");
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// u (u'u)^{-1/2}: orthonormalize columns without mixing rows, so zero rows
/// of u stay zero. Requires full column rank.
inline Matrix orthonormalize_columns(const Matrix& u) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(u.transpose() * u);
    const Vector ev = es.eigenvalues();
    if (ev.size() == 0 || ev.minCoeff() <= 1e-14 * std::max(1.0, ev.maxCoeff()))
        throw NumericalError("orthonormalize_columns: rank deficient");
    return u * es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

struct SocOptions {
    double penalty = 1.0; ///< splitting penalty; scaled by the caller to the problem
    int max_iters = 500;
    double tol = 1e-9;
};

struct SocResult {
    Matrix x; ///< orthonormal solution
    int iters = 0;
    bool converged = false;
};

/// min_X vec(X)' H vec(X) - 2 b' vec(X) subject to X'X = I (X is rows x cols),
/// by splitting the orthogonality constraint: an unconstrained quadratic step,
/// a projection onto the Stiefel manifold and a scaled dual update.
inline SocResult soc_solve(const Matrix& h, const Vector& b, Index rows, Index cols, const Matrix& x0,
                           const SocOptions& opt = {}) {
    const Index n = rows * cols;
    if (h.rows() != n || h.cols() != n || b.size() != n)
        throw DimensionError("soc_solve: shape mismatch");
    Matrix sys = h;
    sys.diagonal().array() += opt.penalty;
    Eigen::LLT<Matrix> llt(sys);
    if (llt.info() != Eigen::Success)
        throw NumericalError("soc_solve: system not positive definite");
    SocResult res;
    Matrix p = procrustes(x0);
    Matrix lam = Matrix::Zero(rows, cols);
    for (res.iters = 1; res.iters <= opt.max_iters; ++res.iters) {
        const Vector rhs = b + opt.penalty * (p - lam).reshaped();
        const Matrix x = llt.solve(rhs).reshaped(rows, cols);
        const Matrix p_new = procrustes(x + lam);
        lam += x - p_new;
        const double primal = (x - p_new).norm(), dual = (p_new - p).norm();
        p = p_new;
        if (primal < opt.tol * std::sqrt(static_cast<double>(n)) && dual < opt.tol * std::sqrt(static_cast<double>(n))) {
            res.converged = true;
            break;
        }
    }
    res.iters = std::min(res.iters, opt.max_iters);
    res.x = p;
    return res;
}

} // namespace sarma
