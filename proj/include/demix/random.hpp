#pragma once

// Seeded random streams. Every consumer of randomness derives its own
// std::mt19937_64 from (seed, tags...) so results never depend on the order
// in which streams are drawn, which keeps parallel and serial runs identical.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "demix/common.hpp"

namespace demix {

// Stream tags keep unrelated consumers of the same seed apart.
enum class StreamTag : std::uint64_t {
    GaussianOperator = 1,
    PauliOperator = 2,
    Encoder = 3,
    SignDiagonal = 4,
    Truth = 5,
    Noise = 6,
    AripTrial = 7,
    Trial = 8,
    AripEnsemble = 9,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(4 + 2 * keys.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    push(static_cast<std::uint64_t>(tag));
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

/// Derives a child seed, e.g. a per-trial seed from (master, cell, trial).
inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys) {
    auto rng = make_stream(seed, tag, keys);
    return rng();
}

/// Standard normal for double; CN(0, 1) (independent parts of variance 1/2) for complex.
template <typename T>
class NormalSampler {
public:
    T operator()(std::mt19937_64& rng) {
        if constexpr (is_complex_v<T>) {
            const double re = dist_(rng);
            const double im = dist_(rng);
            return T(re, im) * std::sqrt(0.5);
        } else {
            return dist_(rng);
        }
    }

private:
    std::normal_distribution<double> dist_{0.0, 1.0};
};

template <typename T>
Matrix<T> gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    NormalSampler<T> normal;
    Matrix<T> out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
    return out;
}

/// Orthonormal n x r basis from the QR of a Gaussian matrix.
template <typename T>
Matrix<T> random_orthonormal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index r) {
    const Matrix<T> g = gaussian_matrix<T>(rng, n, r);
    Eigen::HouseholderQR<Matrix<T>> qr(g);
    return qr.householderQ() * Matrix<T>::Identity(n, r);
}

}  // namespace demix
