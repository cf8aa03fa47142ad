#pragma once

#include <random>

#include "demix/matrix_core.hpp"
#include "demix/random.hpp"

namespace demix::test {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

template <typename T>
LowRankFactor<T> random_factor(std::mt19937_64& g, Eigen::Index n1, Eigen::Index n2, Eigen::Index r) {
    return truncated_svd<T>(gaussian_matrix<T>(g, n1, r) * gaussian_matrix<T>(g, n2, r).adjoint(), r);
}

template <typename T>
HermitianFactor<T> random_state(std::mt19937_64& g, Eigen::Index n, Eigen::Index r) {
    HermitianFactor<T> f;
    f.U = random_orthonormal<T>(g, n, r);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    f.L.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) f.L(i) = u(g);
    std::sort(f.L.data(), f.L.data() + r, std::greater<>());
    f.L /= f.L.sum();
    return f;
}

template <typename T>
Matrix<T> random_hermitian(std::mt19937_64& g, Eigen::Index n) {
    const Matrix<T> a = gaussian_matrix<T>(g, n, n);
    return (a + a.adjoint()) / 2.0;
}

template <typename T>
double orthonormality_error(const Matrix<T>& q) {
    const Matrix<T> d = q.adjoint() * q - Matrix<T>::Identity(q.cols(), q.cols());
    return d.size() ? d.template lpNorm<Eigen::Infinity>() : 0.0;
}

template <typename T>
double relative_diff(const Matrix<T>& a, const Matrix<T>& b) {
    const double scale = std::max(1.0, b.norm());
    return (a - b).norm() / scale;
}

}  // namespace demix::test
