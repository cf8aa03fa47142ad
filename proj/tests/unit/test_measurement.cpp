#include <doctest.h>

#include <cmath>
#include <set>

#include "../reference/reference.hpp"
#include "helpers.hpp"

using namespace demix;

namespace {

template <typename T>
double adjoint_gap(const MeasurementEnsemble<T>& ens, Eigen::Index k, const Matrix<T>& z, const Vector<T>& y) {
    const T lhs = ens.forward(k, z).dot(y);               // <A(Z), y>
    const T rhs = z.reshaped().dot(ens.adjoint(k, y).reshaped());  // <Z, A*(y)>
    return std::abs(lhs - rhs) / (z.norm() * y.norm() * std::max(1.0, ens.adjoint(k, y).norm() / y.norm()));
}

template <typename T>
void check_adjoint_identity(const MeasurementEnsemble<T>& ens, std::uint64_t seed, int trials) {
    auto g = test::rng(seed);
    for (int t = 0; t < trials; ++t) {
        const Eigen::Index k = t % ens.s();
        const Matrix<T> z = gaussian_matrix<T>(g, ens.shape().rows, ens.shape().cols);
        const Vector<T> y = gaussian_matrix<T>(g, ens.m(), 1);
        CHECK(adjoint_gap(ens, k, z, y) <= 1e-10);
    }
}

}  // namespace

TEST_CASE("Gaussian ensembles are deterministic in the seed") {
    const auto a = MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 1, 10, {4, 4}, 7);
    const auto b = MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 1, 10, {4, 4}, 7);
    const auto c = MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 1, 10, {4, 4}, 8);
    for (Eigen::Index p = 0; p < 10; ++p) CHECK(a.sensing_matrix(0, p) == b.sensing_matrix(0, p));
    CHECK(a.descriptor() == b.descriptor());
    CHECK(a.descriptor()["payload_hash"] != c.descriptor()["payload_hash"]);
}

TEST_CASE_TEMPLATE("Gaussian entries have unit variance", T, double, cplx) {
    const auto ens = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 2, 500, {20, 10}, 3);
    double sum = 0.0;
    double sq = 0.0;
    std::size_t count = 0;
    for (Eigen::Index k = 0; k < 2; ++k)
        for (Eigen::Index p = 0; p < 500; ++p) {
            const Matrix<T> a = ens.sensing_matrix(k, p);
            sum += std::real(a.sum());
            sq += a.squaredNorm();
            count += static_cast<std::size_t>(a.size());
        }
    CHECK(std::abs(sum / count) < 0.02);
    CHECK(sq / count == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE_TEMPLATE("streamed Gaussian payloads match materialized ones", T, double, cplx) {
    EnsembleOptions tiny;
    tiny.gaussian_memory_budget = 0;
    const auto dense = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 2, 40, {6, 5}, 9);
    const auto streamed = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 2, 40, {6, 5}, 9, tiny);
    CHECK_FALSE(dense.streamed());
    CHECK(streamed.streamed());
    CHECK(dense.descriptor()["payload_hash"] == streamed.descriptor()["payload_hash"]);
    auto g = test::rng(2);
    const Matrix<T> z = gaussian_matrix<T>(g, 6, 5);
    const Vector<T> y = gaussian_matrix<T>(g, 40, 1);
    for (Eigen::Index k = 0; k < 2; ++k) {
        CHECK((dense.forward(k, z) - streamed.forward(k, z)).norm() < 1e-12 * dense.forward(k, z).norm());
        CHECK((dense.adjoint(k, y) - streamed.adjoint(k, y)).norm() < 1e-12 * dense.adjoint(k, y).norm());
    }
    check_adjoint_identity(streamed, 4, 20);
}

TEST_CASE_TEMPLATE("adjoint identity holds for Gaussian ensembles", T, double, cplx) {
    const auto ens = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 3, 60, {7, 5}, 11);
    check_adjoint_identity(ens, 12, 100);
}

TEST_CASE("adjoint identity holds for Pauli ensembles") {
    const auto ens = MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 2, 50, {16, 16}, 13);
    check_adjoint_identity(ens, 14, 100);
}

TEST_CASE("adjoint identity holds for convolutive ensembles") {
    const auto gauss = MeasurementEnsemble<cplx>::generate(EnsembleKind::ConvolutiveGaussian, 2, 40, {12, 6}, 15);
    check_adjoint_identity(gauss, 16, 100);
    const auto hadamard = MeasurementEnsemble<cplx>::generate(EnsembleKind::ConvolutiveHadamard, 2, 32, {8, 4}, 17);
    check_adjoint_identity(hadamard, 18, 100);
}

TEST_CASE("Pauli sensing matrices are normalized Hermitian Kronecker products") {
    const auto ens = MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 1, 40, {4, 4}, 19);
    CHECK(ens.qubits() == 2);
    std::set<int> letters;
    for (Eigen::Index p = 0; p < 40; ++p) {
        const Matrix<cplx> a = ens.sensing_matrix(0, p);
        CHECK((a - a.adjoint()).norm() < 1e-15);
        CHECK(std::abs(a.norm() - 1.0) <= 1e-14);
        const auto w = ens.pauli_word(0, p);
        const auto word = ref::decode_pauli(w.flip, w.sign, 2);
        letters.insert(word.begin(), word.end());
        CHECK((a - ref::pauli_kron(word)).norm() < 1e-14);
    }
    CHECK(letters.size() == 4);
}

TEST_CASE("Pauli fast action matches dense Kronecker products up to six qubits") {
    auto g = test::rng(20);
    for (int q = 1; q <= 6; ++q) {
        const Eigen::Index n = Eigen::Index{1} << q;
        const auto ens = MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 2, 24, {n, n}, 100 + q);
        for (Eigen::Index k = 0; k < 2; ++k) {
            std::vector<Matrix<cplx>> dense;
            for (Eigen::Index p = 0; p < 24; ++p) {
                const auto w = ens.pauli_word(k, p);
                dense.push_back(ref::pauli_kron(ref::decode_pauli(w.flip, w.sign, q)));
            }
            const Matrix<cplx> z = gaussian_matrix<cplx>(g, n, n);
            const Vector<cplx> y = gaussian_matrix<cplx>(g, 24, 1);
            Vector<cplx> expected(24);
            Matrix<cplx> adj = Matrix<cplx>::Zero(n, n);
            for (Eigen::Index p = 0; p < 24; ++p) {
                expected(p) = (dense[static_cast<std::size_t>(p)].adjoint() * z).trace() / std::sqrt(24.0);
                adj += y(p) * dense[static_cast<std::size_t>(p)] / std::sqrt(24.0);
            }
            CHECK((ens.forward(k, z) - expected).norm() <= 1e-10 * expected.norm());
            CHECK((ens.adjoint(k, y) - adj).norm() <= 1e-10 * adj.norm());
            const auto x = test::random_factor<cplx>(g, n, n, std::min<Eigen::Index>(2, n));
            const Vector<cplx> fx = ens.forward(k, x);
            CHECK((fx - ref::forward(ens, k, x.dense())).norm() <= 1e-10 * std::max(1.0, fx.norm()));
        }
    }
}

TEST_CASE("Pauli and convolutive kinds need complex scalars and valid shapes") {
    CHECK_THROWS_AS(MeasurementEnsemble<double>::generate(EnsembleKind::Pauli, 1, 4, {4, 4}, 1), EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 1, 4, {6, 6}, 1), EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 1, 4, {4, 8}, 1), EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<double>::generate(EnsembleKind::ConvolutiveGaussian, 1, 8, {4, 2}, 1),
                    EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<cplx>::generate(EnsembleKind::ConvolutiveHadamard, 1, 12, {4, 2}, 1),
                    EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<cplx>::generate(EnsembleKind::ConvolutiveGaussian, 1, 8, {16, 2}, 1),
                    EnsembleError);
    CHECK_THROWS_AS(MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 1, 0, {4, 4}, 1), EnsembleError);
}

TEST_CASE("Sylvester Hadamard columns are orthogonal with squared norm m") {
    const Eigen::MatrixXd h = sylvester_hadamard(8, 4);
    CHECK(h.rows() == 8);
    CHECK(h.cols() == 4);
    CHECK((h.transpose() * h - 8.0 * Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
    CHECK((h.array().abs() == 1.0).all());
    const Eigen::MatrixXd full = sylvester_hadamard(16);
    CHECK((full.transpose() * full - 16.0 * Eigen::MatrixXd::Identity(16, 16)).norm() == 0.0);
    CHECK_THROWS_AS(sylvester_hadamard(12), EnsembleError);
}

TEST_CASE("Hadamard encoders are sign-flipped Hadamard columns") {
    const auto ens = MeasurementEnsemble<cplx>::generate(EnsembleKind::ConvolutiveHadamard, 2, 8, {4, 2}, 21);
    for (Eigen::Index k = 0; k < 2; ++k) {
        const Matrix<cplx> c = ens.encoder(k);
        CHECK((c.adjoint() * c - 8.0 * Matrix<cplx>::Identity(4, 4)).norm() < 1e-14);
        const Eigen::MatrixXd h = sylvester_hadamard(8, 4);
        for (Eigen::Index p = 0; p < 8; ++p) {
            const double sign = std::real(c(p, 0)) * h(p, 0);
            CHECK(std::abs(std::abs(sign) - 1.0) < 1e-15);
            CHECK((c.row(p).real() - sign * h.row(p)).norm() < 1e-15);
        }
    }
}

TEST_CASE("convolutive forward of x h^T is the entrywise product of encoded vectors") {
    auto g = test::rng(22);
    for (auto kind : {EnsembleKind::ConvolutiveGaussian, EnsembleKind::ConvolutiveHadamard}) {
        const auto ens = MeasurementEnsemble<cplx>::generate(kind, 2, 32, {8, 5}, 23);
        const Matrix<cplx> f = ref::dft(32);
        const Matrix<cplx> b = f.leftCols(5);
        // Rows of B have norm sqrt(n2 / m).
        for (Eigen::Index p = 0; p < 32; ++p) CHECK(b.row(p).norm() == doctest::Approx(std::sqrt(5.0 / 32.0)));
        for (Eigen::Index k = 0; k < 2; ++k) {
            const Vector<cplx> x = gaussian_matrix<cplx>(g, 8, 1);
            const Vector<cplx> h = gaussian_matrix<cplx>(g, 5, 1);
            const Vector<cplx> expected = (f * ens.encoder(k) * x).cwiseProduct(b * h) / std::sqrt(32.0);
            const Matrix<cplx> xh = x * h.transpose();
            CHECK((ens.forward(k, xh) - expected).norm() <= 1e-10 * expected.norm());
            // Naive per-entry inner products with sensing matrices built from an explicit DFT.
            Vector<cplx> naive(32);
            for (Eigen::Index p = 0; p < 32; ++p)
                naive(p) = (ref::convolutive_sensing(ens.encoder(k), p, 5).adjoint() * xh).trace() / std::sqrt(32.0);
            CHECK((naive - expected).norm() <= 1e-10 * expected.norm());
            for (Eigen::Index p = 0; p < 32; p += 7)
                CHECK((ens.sensing_matrix(k, p) - ref::convolutive_sensing(ens.encoder(k), p, 5)).norm() < 1e-10);
            const auto lr = test::random_factor<cplx>(g, 8, 5, 2);
            CHECK((ens.forward(k, lr) - ens.forward(k, lr.dense())).norm() < 1e-10 * ens.forward(k, lr).norm());
        }
    }
}

TEST_CASE_TEMPLATE("forward and adjoint on trivial inputs", T, double, cplx) {
    const auto ens = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 2, 12, {4, 3}, 24);
    CHECK(ens.forward(0, Matrix<T>::Zero(4, 3)).isZero());
    CHECK(ens.adjoint(1, Vector<T>::Zero(12)).isZero());
    const Matrix<T> a0 = ens.sensing_matrix(1, 0);
    CHECK(std::abs(ens.forward(1, a0)(0) - T(a0.squaredNorm() / std::sqrt(12.0))) < 1e-12);
    for (Eigen::Index p = 0; p < 12; ++p) {
        const Vector<T> e = Vector<T>::Unit(12, p);
        CHECK((ens.adjoint(0, e) - ens.sensing_matrix(0, p) / std::sqrt(12.0)).norm() < 1e-14);
    }
}

TEST_CASE_TEMPLATE("forward is linear and factored inputs agree with dense ones", T, double, cplx) {
    auto g = test::rng(25);
    const auto ens = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 1, 30, {6, 6}, 26);
    const Matrix<T> z1 = gaussian_matrix<T>(g, 6, 6);
    const Matrix<T> z2 = gaussian_matrix<T>(g, 6, 6);
    const T alpha(1.7);
    const Vector<T> lhs = ens.forward(0, Matrix<T>(alpha * z1 + z2));
    const Vector<T> rhs = alpha * ens.forward(0, z1) + ens.forward(0, z2);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    const auto x = test::random_factor<T>(g, 6, 6, 2);
    CHECK((ens.forward(0, x) - ens.forward(0, x.dense())).norm() <= 1e-12 * ens.forward(0, x).norm());
    CHECK((ens.forward(0, x) - ref::forward(ens, 0, x.dense())).norm() <= 1e-12 * ens.forward(0, x).norm());
}

TEST_CASE_TEMPLATE("mixed_forward sums the constituent measurements", T, double, cplx) {
    auto g = test::rng(27);
    const auto ens = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 3, 25, {5, 4}, 28);
    std::vector<LowRankFactor<T>> zero(3, LowRankFactor<T>::zero(5, 4, 2));
    CHECK(mixed_forward(ens, zero).isZero());
    std::vector<LowRankFactor<T>> x;
    for (int k = 0; k < 3; ++k) x.push_back(test::random_factor<T>(g, 5, 4, 2));
    Vector<T> sum = Vector<T>::Zero(25);
    for (Eigen::Index k = 0; k < 3; ++k) sum += ens.forward(k, x[static_cast<std::size_t>(k)]);
    CHECK((mixed_forward(ens, x) - sum).norm() <= 1e-12 * sum.norm());
    x.pop_back();
    CHECK_THROWS_AS(mixed_forward(ens, x), DimensionError);

    const auto single = MeasurementEnsemble<T>::generate(EnsembleKind::Gaussian, 1, 25, {5, 4}, 29);
    CHECK(mixed_forward(single, {x[0]}) == single.forward(0, x[0]));
}

TEST_CASE("operators reject bad indices and shapes") {
    const auto ens = MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 2, 10, {4, 3}, 30);
    CHECK_THROWS_AS(ens.forward(2, Matrix<double>(Matrix<double>::Zero(4, 3))), DimensionError);
    CHECK_THROWS_AS(ens.forward(-1, Matrix<double>(Matrix<double>::Zero(4, 3))), DimensionError);
    CHECK_THROWS_AS(ens.forward(0, Matrix<double>(Matrix<double>::Zero(3, 4))), DimensionError);
    CHECK_THROWS_AS(ens.adjoint(0, Vector<double>(Vector<double>::Zero(9))), DimensionError);
    CHECK_THROWS_AS(ens.sensing_matrix(0, 10), DimensionError);
    CHECK_THROWS_AS(ens.encoder(0), EnsembleError);
    CHECK_THROWS_AS(ens.pauli_word(0, 0), EnsembleError);
}

TEST_CASE("explicit ensembles wrap caller-supplied matrices") {
    // Scaled vectorization: A_p = sqrt(m) E_p gives A(Z) = vec(Z), an exact isometry.
    const Eigen::Index n = 3;
    const Eigen::Index m = n * n;
    std::vector<Matrix<double>> ops;
    for (Eigen::Index p = 0; p < m; ++p) {
        Matrix<double> e = Matrix<double>::Zero(n, n);
        e(p % n, p / n) = std::sqrt(static_cast<double>(m));
        ops.push_back(e);
    }
    const auto ens = MeasurementEnsemble<double>::from_matrices({ops});
    CHECK(ens.kind() == EnsembleKind::Explicit);
    auto g = test::rng(31);
    const Matrix<double> z = gaussian_matrix<double>(g, n, n);
    CHECK((ens.forward(0, z) - z.reshaped()).norm() < 1e-14);
    CHECK_THROWS_AS(MeasurementEnsemble<double>::from_matrices({}), EnsembleError);
    CHECK_THROWS_AS((MeasurementEnsemble<double>::from_matrices({ops, {ops[0]}})), EnsembleError);
}

TEST_CASE("descriptor lists kind, dimensions, seed and payload hashes") {
    const auto ens = MeasurementEnsemble<cplx>::generate(EnsembleKind::Pauli, 2, 8, {4, 4}, 32);
    const auto d = ens.descriptor();
    CHECK(d["kind"] == "pauli");
    CHECK(d["scalar"] == "complex");
    CHECK(d["s"] == 2);
    CHECK(d["m"] == 8);
    CHECK(d["n1"] == 4);
    CHECK(d["seed"] == 32);
    CHECK(d["payload_hash"].size() == 2);
    CHECK(d["payload_hash"][0] != d["payload_hash"][1]);
    CHECK(ensemble_kind_from_string("convolutive-hadamard") == EnsembleKind::ConvolutiveHadamard);
    CHECK_THROWS_AS(ensemble_kind_from_string("fourier"), EnsembleError);
}
