#include "demix/matrix_core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace demix {

template <typename T>
Matrix<T> LowRankFactor<T>::dense() const {
    return U * S.template cast<T>().asDiagonal() * V.adjoint();
}

template <typename T>
LowRankFactor<T> LowRankFactor<T>::zero(Eigen::Index n1, Eigen::Index n2, Eigen::Index r) {
    return {Matrix<T>::Identity(n1, r), RealVector::Zero(r), Matrix<T>::Identity(n2, r)};
}

template <typename T>
Matrix<T> HermitianFactor<T>::dense() const {
    return U * L.template cast<T>().asDiagonal() * U.adjoint();
}

template <typename T>
HermitianFactor<T> HermitianFactor<T>::zero(Eigen::Index n, Eigen::Index r) {
    return {Matrix<T>::Identity(n, r), RealVector::Zero(r)};
}

template <typename T>
Matrix<T> TangentVector<T>::dense(const TangentSpace<T>& t) const {
    return t.U * C * t.V.adjoint() + Bu * t.V.adjoint() + t.U * Bv.adjoint();
}

template <typename T>
std::pair<Matrix<T>, Matrix<T>> TangentVector<T>::factors(const TangentSpace<T>& t) const {
    const Eigen::Index r = t.U.cols();
    Matrix<T> left(t.U.rows(), 2 * r);
    Matrix<T> right(t.V.rows(), 2 * r);
    left << t.U * C + Bu, t.U;
    right << t.V, Bv;
    return {std::move(left), std::move(right)};
}

template <typename T>
Matrix<T> CoreUpdate<T>::reconstruct(const Matrix<T>& U, const Matrix<T>& V) const {
    Matrix<T> left(U.rows(), U.cols() + Qu.cols());
    Matrix<T> right(V.rows(), V.cols() + Qv.cols());
    left << U, Qu;
    right << V, Qv;
    return left * M * right.adjoint();
}

template <typename T>
LowRankFactor<T> truncated_svd(const Matrix<T>& z, Eigen::Index r) {
    const Eigen::Index k = std::min(z.rows(), z.cols());
    if (r < 0 || r > k)
        throw DimensionError("truncated_svd: rank " + std::to_string(r) + " exceeds min dimension " +
                             std::to_string(k));
    require_finite(z, "truncated_svd");
    Eigen::BDCSVD<Matrix<T>> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    LowRankFactor<T> out{svd.matrixU().leftCols(r), svd.singularValues().head(r), svd.matrixV().leftCols(r)};
    if (!out.U.allFinite() || !out.V.allFinite() || !out.S.allFinite())
        throw NumericalError("truncated_svd: SVD did not converge");
    return out;
}

namespace {

template <typename T>
void check_tangent(const TangentSpace<T>& t, const Matrix<T>& z) {
    if (z.rows() != t.U.rows() || z.cols() != t.V.rows())
        throw DimensionError("tangent space: matrix is " + std::to_string(z.rows()) + "x" +
                             std::to_string(z.cols()) + ", expected " + std::to_string(t.U.rows()) + "x" +
                             std::to_string(t.V.rows()));
}

// Orthonormal Q (n x r) with Q perpendicular to the orthonormal basis u and
// B = Q R. Householder QR of [u b] keeps Q orthogonal to u even when b is rank
// deficient; the corresponding rows of R are then zero.
template <typename T>
std::pair<Matrix<T>, Matrix<T>> complement_qr(const Matrix<T>& u, const Matrix<T>& b) {
    const Eigen::Index n = u.rows();
    const Eigen::Index r = u.cols();
    if (n < 2 * r)
        throw DimensionError("core_update: dimension " + std::to_string(n) + " smaller than 2r = " +
                             std::to_string(2 * r));
    Matrix<T> stacked(n, 2 * r);
    stacked << u, b;
    Eigen::HouseholderQR<Matrix<T>> qr(stacked);
    Matrix<T> q = qr.householderQ() * Matrix<T>::Identity(n, 2 * r);
    Matrix<T> qc = q.rightCols(r);
    Matrix<T> rc = qc.adjoint() * b;
    return {std::move(qc), std::move(rc)};
}

}  // namespace

template <typename T>
TangentVector<T> tangent_components(const TangentSpace<T>& t, const Matrix<T>& g) {
    check_tangent(t, g);
    const Matrix<T> gv = g * t.V;
    const Matrix<T> ghu = g.adjoint() * t.U;
    TangentVector<T> d;
    d.C = t.U.adjoint() * gv;
    d.Bu = gv - t.U * d.C;
    d.Bv = ghu - t.V * d.C.adjoint();
    return d;
}

template <typename T>
Matrix<T> tangent_project(const TangentSpace<T>& t, const Matrix<T>& z) {
    return tangent_components(t, z).dense(t);
}

template <typename T>
CoreUpdate<T> core_update(const LowRankFactor<T>& x, const TangentVector<T>& d, double alpha) {
    const Eigen::Index r = x.rank();
    auto [qu, ru] = complement_qr(x.U, d.Bu);
    auto [qv, rv] = complement_qr(x.V, d.Bv);
    CoreUpdate<T> cu;
    cu.M = Matrix<T>::Zero(2 * r, 2 * r);
    cu.M.topLeftCorner(r, r) = x.S.template cast<T>().asDiagonal();
    cu.M.topLeftCorner(r, r) += T(alpha) * d.C;
    cu.M.topRightCorner(r, r) = T(alpha) * rv.adjoint();
    cu.M.bottomLeftCorner(r, r) = T(alpha) * ru;
    cu.Qu = std::move(qu);
    cu.Qv = std::move(qv);
    return cu;
}

template <typename T>
CoreUpdate<T> core_update(const LowRankFactor<T>& x, const Matrix<T>& d, double alpha) {
    return core_update(x, tangent_components(TangentSpace<T>::at(x), d), alpha);
}

template <typename T>
CoreUpdate<T> core_update(const HermitianFactor<T>& x, const TangentVector<T>& d, double alpha) {
    // Components of the Hermitian part of the direction.
    const Eigen::Index r = x.rank();
    const Matrix<T> b = (d.Bu + d.Bv) / 2.0;
    const Matrix<T> c = (d.C + d.C.adjoint()) / 2.0;
    auto [q, rq] = complement_qr(x.U, b);
    CoreUpdate<T> cu;
    cu.M = Matrix<T>::Zero(2 * r, 2 * r);
    cu.M.topLeftCorner(r, r) = x.L.template cast<T>().asDiagonal();
    cu.M.topLeftCorner(r, r) += T(alpha) * c;
    cu.M.topRightCorner(r, r) = T(alpha) * rq.adjoint();
    cu.M.bottomLeftCorner(r, r) = T(alpha) * rq;
    cu.Qu = q;
    cu.Qv = std::move(q);
    return cu;
}

template <typename T>
LowRankFactor<T> threshold_core(const CoreUpdate<T>& cu, const LowRankFactor<T>& x, Eigen::Index r) {
    if (r > cu.M.rows()) throw DimensionError("threshold_core: rank exceeds core size");
    require_finite(cu.M, "threshold_core");
    Eigen::JacobiSVD<Matrix<T>> svd(cu.M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix<T> left(x.U.rows(), 2 * x.rank());
    Matrix<T> right(x.V.rows(), 2 * x.rank());
    left << x.U, cu.Qu;
    right << x.V, cu.Qv;
    return {left * svd.matrixU().leftCols(r), svd.singularValues().head(r), right * svd.matrixV().leftCols(r)};
}

namespace {

template <typename T>
PsdProjection<T> project_psd_eigen(const Matrix<T>& hermitian, const Matrix<T>& basis, Eigen::Index r) {
    Eigen::SelfAdjointEigenSolver<Matrix<T>> eig(hermitian);
    if (eig.info() != Eigen::Success) throw NumericalError("psd_rank_project: eigensolver failed");
    const RealVector& vals = eig.eigenvalues();  // ascending
    const Eigen::Index n = vals.size();
    const double cutoff = kPositiveEigenCutoff * vals.cwiseAbs().maxCoeff();

    PsdProjection<T> out;
    out.factor.L = RealVector::Zero(r);
    Matrix<T> top(n, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const Eigen::Index j = n - 1 - i;
        top.col(i) = eig.eigenvectors().col(j);
        if (vals(j) > cutoff) {
            out.factor.L(i) = vals(j);
            ++out.positive;
        }
    }
    out.factor.U = basis.size() == 0 ? top : Matrix<T>(basis * top);
    return out;
}

}  // namespace

template <typename T>
PsdProjection<T> psd_rank_project(const CoreUpdate<T>& cu, const HermitianFactor<T>& x, Eigen::Index r) {
    if (r > cu.M.rows()) throw DimensionError("psd_rank_project: rank exceeds core size");
    require_finite(cu.M, "psd_rank_project");
    const Matrix<T> m = (cu.M + cu.M.adjoint()) / 2.0;
    Matrix<T> basis(x.U.rows(), 2 * x.rank());
    basis << x.U, cu.Qu;
    return project_psd_eigen<T>(m, basis, r);
}

template <typename T>
PsdProjection<T> psd_rank_project(const Matrix<T>& z, Eigen::Index r) {
    if (z.rows() != z.cols()) throw DimensionError("psd_rank_project: matrix not square");
    if (r > z.rows()) throw DimensionError("psd_rank_project: rank exceeds dimension");
    require_finite(z, "psd_rank_project");
    const Matrix<T> h = (z + z.adjoint()) / 2.0;
    return project_psd_eigen<T>(h, Matrix<T>(), r);
}

RealVector simplex_project(const RealVector& x) {
    if (x.size() == 0) throw DimensionError("simplex_project: empty vector");
    require_finite(x, "simplex_project");
    std::vector<double> u(x.data(), x.data() + x.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) tau = t;
    }
    return (x.array() - tau).cwiseMax(0.0).matrix();
}

#define DEMIX_INSTANTIATE(T)                                                                          \
    template struct LowRankFactor<T>;                                                                 \
    template struct HermitianFactor<T>;                                                               \
    template struct TangentVector<T>;                                                                 \
    template struct CoreUpdate<T>;                                                                    \
    template LowRankFactor<T> truncated_svd(const Matrix<T>&, Eigen::Index);                          \
    template Matrix<T> tangent_project(const TangentSpace<T>&, const Matrix<T>&);                     \
    template TangentVector<T> tangent_components(const TangentSpace<T>&, const Matrix<T>&);           \
    template CoreUpdate<T> core_update(const LowRankFactor<T>&, const TangentVector<T>&, double);     \
    template CoreUpdate<T> core_update(const LowRankFactor<T>&, const Matrix<T>&, double);            \
    template CoreUpdate<T> core_update(const HermitianFactor<T>&, const TangentVector<T>&, double);   \
    template LowRankFactor<T> threshold_core(const CoreUpdate<T>&, const LowRankFactor<T>&,           \
                                             Eigen::Index);                                           \
    template PsdProjection<T> psd_rank_project(const CoreUpdate<T>&, const HermitianFactor<T>&,       \
                                               Eigen::Index);                                         \
    template PsdProjection<T> psd_rank_project(const Matrix<T>&, Eigen::Index);

DEMIX_INSTANTIATE(double)
DEMIX_INSTANTIATE(cplx)

#undef DEMIX_INSTANTIATE

}  // namespace demix
