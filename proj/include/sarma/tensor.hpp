#pragma once

#include "sarma/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace sarma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense third-order array d1 x d2 x d3.
///
/// Storage is mode-1 fastest: element (i, j, k) lives at i + d1 * (j + d2 * k),
/// so every frontal slice X_k is a contiguous column-major d1 x d2 block and
/// the mode-1 unfolding (X_1, ..., X_d3) is a plain reshape.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(Index d1, Index d2, Index d3) : dims_{d1, d2, d3} {
        if (d1 < 0 || d2 < 0 || d3 < 0)
            throw DimensionError("Tensor3: negative dimension");
        data_ = Vector::Zero(d1 * d2 * d3);
    }

    Tensor3(Index d1, Index d2, Index d3, Vector data) : dims_{d1, d2, d3}, data_(std::move(data)) {
        if (data_.size() != d1 * d2 * d3)
            throw DimensionError("Tensor3: data length does not match dimensions");
    }

    /// Stack N1 x N2 matrices as frontal slices.
    static Tensor3 from_slices(const std::vector<Matrix>& slices) {
        if (slices.empty())
            throw DimensionError("Tensor3::from_slices: no slices");
        const Index d1 = slices.front().rows(), d2 = slices.front().cols();
        Tensor3 t(d1, d2, static_cast<Index>(slices.size()));
        for (std::size_t k = 0; k < slices.size(); ++k) {
            if (slices[k].rows() != d1 || slices[k].cols() != d2)
                throw DimensionError("Tensor3::from_slices: slices differ in shape");
            t.slice(static_cast<Index>(k)) = slices[k];
        }
        return t;
    }

    Index dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode - 1)); }
    const std::array<Index, 3>& dims() const { return dims_; }
    Index size() const { return data_.size(); }

    double& operator()(Index i, Index j, Index k) { return data_[i + dims_[0] * (j + dims_[1] * k)]; }
    double operator()(Index i, Index j, Index k) const { return data_[i + dims_[0] * (j + dims_[1] * k)]; }

    Eigen::Map<Matrix> slice(Index k) {
        return {data_.data() + k * dims_[0] * dims_[1], dims_[0], dims_[1]};
    }
    Eigen::Map<const Matrix> slice(Index k) const {
        return {data_.data() + k * dims_[0] * dims_[1], dims_[0], dims_[1]};
    }

    std::vector<Matrix> slices() const {
        std::vector<Matrix> out;
        out.reserve(static_cast<std::size_t>(dims_[2]));
        for (Index k = 0; k < dims_[2]; ++k)
            out.emplace_back(slice(k));
        return out;
    }

    const Vector& data() const { return data_; }
    Vector& data() { return data_; }

    double norm() const { return data_.norm(); }
    double squaredNorm() const { return data_.squaredNorm(); }

    Tensor3& operator+=(const Tensor3& o) {
        require_same_shape(o);
        data_ += o.data_;
        return *this;
    }
    Tensor3& operator-=(const Tensor3& o) {
        require_same_shape(o);
        data_ -= o.data_;
        return *this;
    }
    Tensor3& operator*=(double s) {
        data_ *= s;
        return *this;
    }
    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

    bool operator==(const Tensor3& o) const { return dims_ == o.dims_ && data_ == o.data_; }

private:
    void require_same_shape(const Tensor3& o) const {
        if (dims_ != o.dims_)
            throw DimensionError("Tensor3: shape mismatch");
    }

    std::array<Index, 3> dims_{0, 0, 0};
    Vector data_;
};

inline void check_mode(int mode) {
    if (mode < 1 || mode > 3)
        throw DimensionError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

/// Mode-i unfolding.
///
/// X_(1) = (X_1, ..., X_d3), X_(2) = (X_1', ..., X_d3'), and row k of X_(3)
/// is vec(X_k)'.
inline Matrix matricize(const Tensor3& t, int mode) {
    check_mode(mode);
    const Index d1 = t.dim(1), d2 = t.dim(2), d3 = t.dim(3);
    switch (mode) {
    case 1:
        return Eigen::Map<const Matrix>(t.data().data(), d1, d2 * d3);
    case 2: {
        Matrix m(d2, d1 * d3);
        for (Index k = 0; k < d3; ++k)
            m.middleCols(k * d1, d1) = t.slice(k).transpose();
        return m;
    }
    default:
        return Eigen::Map<const Matrix>(t.data().data(), d1 * d2, d3).transpose();
    }
}

/// Inverse of matricize for a target shape.
inline Tensor3 fold(const Matrix& m, int mode, const std::array<Index, 3>& dims) {
    check_mode(mode);
    const Index d1 = dims[0], d2 = dims[1], d3 = dims[2];
    const Index rows = dims[static_cast<std::size_t>(mode - 1)];
    if (m.rows() != rows || m.size() != d1 * d2 * d3)
        throw DimensionError("fold: matrix shape does not match target tensor");
    Tensor3 t(d1, d2, d3);
    switch (mode) {
    case 1:
        t.data() = m.reshaped();
        break;
    case 2:
        for (Index k = 0; k < d3; ++k)
            t.slice(k) = m.middleCols(k * d1, d1).transpose();
        break;
    default: {
        const Matrix mt = m.transpose();
        t.data() = mt.reshaped();
        break;
    }
    }
    return t;
}

/// t x_mode m, i.e. (t x_mode m)_(mode) = m * t_(mode).
inline Tensor3 mode_product(const Tensor3& t, const Matrix& m, int mode) {
    check_mode(mode);
    if (m.cols() != t.dim(mode))
        throw DimensionError("mode_product: matrix has " + std::to_string(m.cols()) +
                             " columns but mode " + std::to_string(mode) + " has dimension " +
                             std::to_string(t.dim(mode)));
    std::array<Index, 3> out = t.dims();
    out[static_cast<std::size_t>(mode - 1)] = m.rows();
    if (mode == 3) {
        // Slice-wise linear combination; avoids the transpose in matricize(t, 3).
        Tensor3 r(out[0], out[1], out[2]);
        const Eigen::Map<const Matrix> flat(t.data().data(), t.dim(1) * t.dim(2), t.dim(3));
        Eigen::Map<Matrix>(r.data().data(), out[0] * out[1], out[2]).noalias() = flat * m.transpose();
        return r;
    }
    return fold(m * matricize(t, mode), mode, out);
}

/// Orthonormal loadings and core of a two-mode Tucker decomposition.
struct TuckerFactors {
    Tensor3 core; ///< R1 x R2 x d
    Matrix u1;    ///< N1 x R1
    Matrix u2;    ///< N2 x R2

    /// core x1 u1 x2 u2
    Tensor3 reconstruct() const { return mode_product(mode_product(core, u1, 1), u2, 2); }
};

/// Flip columns so the first entry of each is positive. If the first entry is
/// numerically zero the largest-magnitude entry decides instead.
inline void canonicalize_signs(Matrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        double pivot = u(0, c);
        if (std::abs(pivot) < 1e-12) {
            Index arg = 0;
            u.col(c).cwiseAbs().maxCoeff(&arg);
            pivot = u(arg, c);
        }
        if (pivot < 0)
            u.col(c) = -u.col(c);
    }
}

/// Leading left singular vectors of m, sign-canonicalized.
inline Matrix leading_left_singular_vectors(const Matrix& m, Index rank, Vector* singular_values = nullptr) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success)
        throw NumericalError("SVD did not converge");
    if (singular_values)
        *singular_values = svd.singularValues();
    Matrix u = svd.matrixU().leftCols(rank);
    canonicalize_signs(u);
    return u;
}

/// HOSVD along the first two modes with the given ranks.
inline TuckerFactors hosvd(const Tensor3& g, std::pair<Index, Index> ranks) {
    const auto [r1, r2] = ranks;
    if (r1 < 1 || r2 < 1)
        throw InvalidArgument("hosvd: ranks must be positive");
    if (r1 > std::min(g.dim(1), g.dim(2) * g.dim(3)) || r2 > std::min(g.dim(2), g.dim(1) * g.dim(3)))
        throw InvalidArgument("hosvd: rank exceeds dimension");
    TuckerFactors f;
    f.u1 = leading_left_singular_vectors(matricize(g, 1), r1);
    f.u2 = leading_left_singular_vectors(matricize(g, 2), r2);
    f.core = mode_product(mode_product(g, f.u1.transpose(), 1), f.u2.transpose(), 2);
    return f;
}

/// Singular values of the mode-i unfolding.
inline Vector unfolding_singular_values(const Tensor3& t, int mode) {
    Eigen::BDCSVD<Matrix> svd(matricize(t, mode));
    if (svd.info() != Eigen::Success)
        throw NumericalError("SVD did not converge");
    return svd.singularValues();
}

} // namespace sarma
