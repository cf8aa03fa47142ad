#pragma once

// Measurement ensembles {A_k}: A_k(Z) = m^{-1/2} (<A_{k,p}, Z>)_p with
// <A, Z> = trace(A^H Z), and the adjoints A_k^*(y) = m^{-1/2} sum_p y_p A_{k,p}.
//
//   Gaussian       i.i.d. N(0,1) (or CN(0,1)) sensing matrices, stored densely
//                  as an (n1 n2) x m block per operator, or regenerated from the
//                  seed per call when that would exceed the memory budget.
//   Pauli          A_{k,p} = 2^{-q/2} sigma_{a_1} x ... x sigma_{a_q}, applied
//                  through its one-nonzero-per-row structure.
//   Convolutive    A_{k,p} = conj((F C_k)_{p,:})^T conj(B_{p,:}), so that for
//                  X = x h^T the measurements are m^{-1/2} (F C_k x) .* (B h).
//                  F is the unitary DFT with F_{pj} = exp(-2 pi i p j / m)/sqrt(m),
//                  B its first n2 columns. C_k is CN(0,1) or D_k H with H the
//                  first n1 columns of the +-1 Sylvester Hadamard matrix
//                  (so H^H H = m I).
//   Explicit       caller-supplied sensing matrices; used for toy operators.
//
// The m^{-1/2} factor lives in forward/adjoint; payloads are stored unscaled.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "demix/common.hpp"
#include "demix/matrix_core.hpp"

namespace demix {

enum class EnsembleKind { Gaussian, Pauli, ConvolutiveGaussian, ConvolutiveHadamard, Explicit };

std::string_view to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(std::string_view name);

struct Shape {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool operator==(const Shape&) const = default;
};

struct EnsembleOptions {
    /// Upper bound on the bytes of materialized Gaussian payload.
    std::size_t gaussian_memory_budget = std::size_t{2} << 30;
};

template <typename T>
class MeasurementEnsemble {
public:
    static MeasurementEnsemble generate(EnsembleKind kind, Eigen::Index s, Eigen::Index m, Shape shape,
                                        std::uint64_t seed, const EnsembleOptions& options = {});
    /// matrices[k][p] is A_{k,p}.
    static MeasurementEnsemble from_matrices(const std::vector<std::vector<Matrix<T>>>& matrices);

    EnsembleKind kind() const { return kind_; }
    Eigen::Index s() const { return s_; }
    Eigen::Index m() const { return m_; }
    Shape shape() const { return shape_; }
    std::uint64_t seed() const { return seed_; }
    /// True when Gaussian payloads are regenerated per call.
    bool streamed() const;

    Vector<T> forward(Eigen::Index k, const Matrix<T>& z) const;
    Vector<T> forward(Eigen::Index k, const LowRankFactor<T>& x) const;
    /// A_k(L R^H) using the factors where the ensemble allows it.
    Vector<T> forward_factored(Eigen::Index k, const Matrix<T>& left, const Matrix<T>& right) const;
    Matrix<T> adjoint(Eigen::Index k, const Vector<T>& y) const;

    /// Dense A_{k,p}, unscaled. Intended for tests and reference paths.
    Matrix<T> sensing_matrix(Eigen::Index k, Eigen::Index p) const;
    /// True when every A_{k,p} is Hermitian, so adjoints of real vectors are Hermitian.
    bool hermitian_sensing() const { return kind_ == EnsembleKind::Pauli; }

    /// Encoding matrix C_k (convolutive kinds only).
    const Matrix<T>& encoder(Eigen::Index k) const;
    /// Pauli words: bit masks (flip, sign) of A_{k,p}; see PauliWord.
    struct PauliWord {
        std::uint32_t flip = 0;  // X or Y on the qubit
        std::uint32_t sign = 0;  // Y or Z on the qubit
    };
    PauliWord pauli_word(Eigen::Index k, Eigen::Index p) const;
    int qubits() const;

    /// Kind, dimensions, seed and per-operator payload hashes. Payloads are
    /// never serialized; they are regenerated from the seed.
    nlohmann::json descriptor() const;

private:
    struct GaussianPayload {
        std::vector<Matrix<T>> rows;  // per k: (n1 n2) x m, column p = vec(A_{k,p}); empty when streamed
    };
    struct PauliPayload {
        int q = 0;
        std::vector<std::vector<PauliWord>> words;  // [k][p]
    };
    struct ConvolutivePayload {
        std::vector<Matrix<T>> encoders;  // C_k, m x n1
        std::vector<Matrix<T>> fourier;   // F C_k, m x n1
        Matrix<T> b;                      // first n2 columns of F
    };

    Vector<T> gaussian_row(Eigen::Index k, Eigen::Index p) const;
    void check_index(Eigen::Index k) const;

    EnsembleKind kind_ = EnsembleKind::Gaussian;
    Eigen::Index s_ = 0;
    Eigen::Index m_ = 0;
    Shape shape_;
    std::uint64_t seed_ = 0;
    std::variant<GaussianPayload, PauliPayload, ConvolutivePayload> payload_;
};

/// Sum_k A_k(X_k).
template <typename T>
Vector<T> mixed_forward(const MeasurementEnsemble<T>& ens, const std::vector<LowRankFactor<T>>& x);

/// First `cols` columns (all when negative) of the m x m Sylvester Hadamard
/// matrix, entries +-1, m a power of two.
Eigen::MatrixXd sylvester_hadamard(Eigen::Index m, Eigen::Index cols = -1);

}  // namespace demix
