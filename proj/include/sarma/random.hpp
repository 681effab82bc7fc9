#pragma once

#include "sarma/tensor.hpp"

#include <cstdint>
#include <random>

namespace sarma {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent seed for stream `index` derived from a root seed. Replication i
/// of an experiment uses derive_seed(root, i), so results do not depend on
/// which worker ran it.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return mix64(mix64(root) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = z(rng);
    return m;
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal of R made positive.
inline Matrix random_orthogonal(Index n, Rng& rng) {
    const Matrix a = standard_normal(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i)
        if (r(i, i) < 0)
            q.col(i) = -q.col(i);
    return q;
}

} // namespace sarma
