#pragma once

// Dense low-rank kernels shared by the demixing solvers: truncated SVD and
// hard thresholding, tangent-space projection at a rank-r point, the
// [U Qu] M [V Qv]^H representation of a tangent step with its 2r x 2r core,
// PSD rank projection and Euclidean projection onto the unit simplex.
//
// Every kernel is a pure function and is instantiated for double and
// std::complex<double>. Matrices are Eigen column-major throughout.

#include <vector>

#include "demix/common.hpp"

namespace demix {

/// U diag(S) V^H with orthonormal U (n1 x r), V (n2 x r), S nonincreasing >= 0.
template <typename T>
struct LowRankFactor {
    Matrix<T> U;
    RealVector S;
    Matrix<T> V;

    Eigen::Index rank() const { return S.size(); }
    Eigen::Index rows() const { return U.rows(); }
    Eigen::Index cols() const { return V.rows(); }
    Matrix<T> dense() const;
    double frobenius_norm() const { return S.norm(); }

    static LowRankFactor zero(Eigen::Index n1, Eigen::Index n2, Eigen::Index r);
};

/// U diag(L) U^H, U orthonormal (n x r), L real and nonincreasing.
template <typename T>
struct HermitianFactor {
    Matrix<T> U;
    RealVector L;

    Eigen::Index rank() const { return L.size(); }
    Eigen::Index dim() const { return U.rows(); }
    Matrix<T> dense() const;
    /// Valid only when L >= 0, which holds for PSD iterates.
    LowRankFactor<T> as_low_rank() const { return {U, L, U}; }

    static HermitianFactor zero(Eigen::Index n, Eigen::Index r);
};

/// Tangent space of the rank-r manifold at U S V^H. Hermitian variant keeps V
/// equal to U and uses the symmetric projection.
template <typename T>
struct TangentSpace {
    Matrix<T> U;
    Matrix<T> V;
    bool hermitian = false;

    static TangentSpace at(const LowRankFactor<T>& x) { return {x.U, x.V, false}; }
    static TangentSpace at(const HermitianFactor<T>& x) { return {x.U, x.U, true}; }
};

/// A tangent vector U C V^H + Bu V^H + U Bv^H stored by its three mutually
/// orthogonal pieces, with Bu = (I - UU^H) G V and Bv = (I - VV^H) G^H U.
template <typename T>
struct TangentVector {
    Matrix<T> C;   // r x r
    Matrix<T> Bu;  // n1 x r
    Matrix<T> Bv;  // n2 x r

    double squared_norm() const {
        return C.squaredNorm() + Bu.squaredNorm() + Bv.squaredNorm();
    }
    Matrix<T> dense(const TangentSpace<T>& t) const;
    /// Left/right factors with dense() == L R^H; at most 2r columns.
    std::pair<Matrix<T>, Matrix<T>> factors(const TangentSpace<T>& t) const;
};

/// W = [U Qu] M [V Qv]^H with [U Qu], [V Qv] orthonormal and M 2r x 2r.
/// In the Hermitian case Qv == Qu and M is Hermitian.
template <typename T>
struct CoreUpdate {
    Matrix<T> Qu;
    Matrix<T> Qv;
    Matrix<T> M;

    Matrix<T> reconstruct(const Matrix<T>& U, const Matrix<T>& V) const;
};

template <typename T>
LowRankFactor<T> truncated_svd(const Matrix<T>& z, Eigen::Index r);

/// Best rank-r approximation H_r(Z).
template <typename T>
LowRankFactor<T> hard_threshold(const Matrix<T>& z, Eigen::Index r) {
    return truncated_svd(z, r);
}

template <typename T>
Matrix<T> tangent_project(const TangentSpace<T>& t, const Matrix<T>& z);

/// Components of P_T(G). For the Hermitian variant G should be Hermitian.
template <typename T>
TangentVector<T> tangent_components(const TangentSpace<T>& t, const Matrix<T>& g);

/// Builds the core for X + alpha * D, where D = P_T(G) is given by components.
template <typename T>
CoreUpdate<T> core_update(const LowRankFactor<T>& x, const TangentVector<T>& d, double alpha);

/// Same, for a dense D that is assumed to lie in the tangent space at x.
template <typename T>
CoreUpdate<T> core_update(const LowRankFactor<T>& x, const Matrix<T>& d, double alpha);

template <typename T>
CoreUpdate<T> core_update(const HermitianFactor<T>& x, const TangentVector<T>& d, double alpha);

/// SVD of the 2r x 2r core, rotated back through the bases.
template <typename T>
LowRankFactor<T> threshold_core(const CoreUpdate<T>& cu, const LowRankFactor<T>& x, Eigen::Index r);

/// Outcome of projecting onto {Z = Z^H, Z >= 0, rank Z <= r}.
template <typename T>
struct PsdProjection {
    HermitianFactor<T> factor;   // exactly r columns, L >= 0
    Eigen::Index positive = 0;   // eigenvalues kept (<= r)
};

/// P_Pi applied to a Hermitian core. Keeps eigenvalues above
/// 1e-12 * max|lambda|; the remaining slots of the r-column factor carry the
/// next eigenvectors of M with L = 0.
template <typename T>
PsdProjection<T> psd_rank_project(const CoreUpdate<T>& cu, const HermitianFactor<T>& x, Eigen::Index r);

/// P_Pi on a dense Hermitian matrix (symmetrized first).
template <typename T>
PsdProjection<T> psd_rank_project(const Matrix<T>& z, Eigen::Index r);

/// Euclidean projection onto {x >= 0, sum x = 1}.
RealVector simplex_project(const RealVector& x);

inline constexpr double kPositiveEigenCutoff = 1e-12;

}  // namespace demix
