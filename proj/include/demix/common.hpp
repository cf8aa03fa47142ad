#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

namespace demix {

using cplx = std::complex<double>;

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;

template <typename T>
inline constexpr bool is_complex_v = !std::is_same_v<T, double>;

// Errors. The CLI maps SpecError to exit 1 and everything else to exit 2.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// The measurement null space meets the tangent space: A_k(D) = 0 for D != 0.
struct DegenerateEnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Invalid kind/shape/measurement-count combination for an ensemble.
struct EnsembleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
}

/// Re<a, b> for the trace inner product <A, B> = trace(A^H B).
template <typename DA, typename DB>
double real_inner(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    return std::real(a.reshaped().dot(b.reshaped()));
}

}  // namespace demix
