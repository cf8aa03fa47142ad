#include "demix/measurement.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "demix/random.hpp"

namespace demix {

std::string_view to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::Gaussian: return "gaussian";
        case EnsembleKind::Pauli: return "pauli";
        case EnsembleKind::ConvolutiveGaussian: return "convolutive-gaussian";
        case EnsembleKind::ConvolutiveHadamard: return "convolutive-hadamard";
        case EnsembleKind::Explicit: return "explicit";
    }
    return "unknown";
}

EnsembleKind ensemble_kind_from_string(std::string_view name) {
    for (auto kind : {EnsembleKind::Gaussian, EnsembleKind::Pauli, EnsembleKind::ConvolutiveGaussian,
                      EnsembleKind::ConvolutiveHadamard, EnsembleKind::Explicit})
        if (to_string(kind) == name) return kind;
    throw EnsembleError("unknown ensemble kind '" + std::string(name) + "'");
}

Eigen::MatrixXd sylvester_hadamard(Eigen::Index m, Eigen::Index cols) {
    if (m < 1 || !std::has_single_bit(static_cast<std::uint64_t>(m)))
        throw EnsembleError("Hadamard matrix needs a power-of-two size, got " + std::to_string(m));
    if (cols < 0) cols = m;
    Eigen::MatrixXd h(m, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            h(i, j) = (std::popcount(static_cast<std::uint64_t>(i & j)) & 1) ? -1.0 : 1.0;
    return h;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

// Unitary DFT entry exp(-2 pi i p j / m) / sqrt(m), with p j reduced mod m.
cplx dft_entry(Eigen::Index p, Eigen::Index j, Eigen::Index m) {
    const auto e = static_cast<double>((p * j) % m);
    return std::polar(1.0 / std::sqrt(static_cast<double>(m)), -2.0 * std::numbers::pi * e / static_cast<double>(m));
}

// A_{k,p}(i, i ^ flip) = phase * (-1)^{popcount(i & sign)}, where the phase
// collects 2^{-q/2} and one factor -i per sigma_2 in the word.
cplx pauli_phase(std::uint32_t flip, std::uint32_t sign, int q) {
    static constexpr cplx minus_i_pow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    return minus_i_pow[std::popcount(flip & sign) & 3] * std::sqrt(std::ldexp(1.0, -q));
}

}  // namespace

template <typename T>
bool MeasurementEnsemble<T>::streamed() const {
    const auto* g = std::get_if<GaussianPayload>(&payload_);
    return g != nullptr && g->rows.empty();
}

template <typename T>
void MeasurementEnsemble<T>::check_index(Eigen::Index k) const {
    if (k < 0 || k >= s_)
        throw DimensionError("operator index " + std::to_string(k) + " out of range [0, " + std::to_string(s_) + ")");
}

template <typename T>
Vector<T> MeasurementEnsemble<T>::gaussian_row(Eigen::Index k, Eigen::Index p) const {
    auto rng = make_stream(seed_, StreamTag::GaussianOperator,
                           {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(p)});
    NormalSampler<T> normal;
    Vector<T> row(shape_.rows * shape_.cols);
    for (Eigen::Index i = 0; i < row.size(); ++i) row(i) = normal(rng);
    return row;
}

template <typename T>
MeasurementEnsemble<T> MeasurementEnsemble<T>::generate(EnsembleKind kind, Eigen::Index s, Eigen::Index m,
                                                        Shape shape, std::uint64_t seed,
                                                        const EnsembleOptions& options) {
    if (s < 1 || m < 1 || shape.rows < 1 || shape.cols < 1)
        throw EnsembleError("ensemble needs s, m, n1, n2 >= 1");
    MeasurementEnsemble ens;
    ens.kind_ = kind;
    ens.s_ = s;
    ens.m_ = m;
    ens.shape_ = shape;
    ens.seed_ = seed;

    switch (kind) {
        case EnsembleKind::Gaussian: {
            GaussianPayload payload;
            const std::size_t n = static_cast<std::size_t>(shape.rows * shape.cols);
            const std::size_t bytes = static_cast<std::size_t>(s) * static_cast<std::size_t>(m) * n * sizeof(T);
            if (bytes <= options.gaussian_memory_budget) {
                payload.rows.resize(static_cast<std::size_t>(s));
                for (Eigen::Index k = 0; k < s; ++k) {
                    // Column p holds vec(A_{k,p}) so that generation writes contiguously.
                    auto& block = payload.rows[static_cast<std::size_t>(k)];
                    block.resize(static_cast<Eigen::Index>(n), m);
                    for (Eigen::Index p = 0; p < m; ++p) block.col(p) = ens.gaussian_row(k, p);
                }
            }
            ens.payload_ = std::move(payload);
            break;
        }
        case EnsembleKind::Pauli: {
            if constexpr (!is_complex_v<T>) {
                throw EnsembleError("Pauli ensembles need complex scalars");
            } else {
                if (shape.rows != shape.cols || !std::has_single_bit(static_cast<std::uint64_t>(shape.rows)) ||
                    shape.rows < 2 || shape.rows > (Eigen::Index{1} << 30))
                    throw EnsembleError("Pauli ensembles need shape (2^q, 2^q) with q >= 1");
                PauliPayload payload;
                payload.q = std::countr_zero(static_cast<std::uint64_t>(shape.rows));
                payload.words.assign(static_cast<std::size_t>(s), std::vector<PauliWord>(static_cast<std::size_t>(m)));
                for (Eigen::Index k = 0; k < s; ++k) {
                    for (Eigen::Index p = 0; p < m; ++p) {
                        auto rng = make_stream(seed, StreamTag::PauliOperator,
                                               {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(p)});
                        std::uniform_int_distribution<int> pick(1, 4);
                        PauliWord w;
                        // Qubit t (1-based) is the t-th Kronecker factor: bit q - t.
                        for (int t = 1; t <= payload.q; ++t) {
                            const std::uint32_t bit = 1u << (payload.q - t);
                            switch (pick(rng)) {
                                case 1: w.flip |= bit; break;
                                case 2: w.flip |= bit; w.sign |= bit; break;
                                case 3: w.sign |= bit; break;
                                default: break;
                            }
                        }
                        payload.words[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] = w;
                    }
                }
                ens.payload_ = std::move(payload);
            }
            break;
        }
        case EnsembleKind::ConvolutiveGaussian:
        case EnsembleKind::ConvolutiveHadamard: {
            if constexpr (!is_complex_v<T>) {
                throw EnsembleError("convolutive ensembles need complex scalars");
            } else {
                if (shape.rows > m || shape.cols > m)
                    throw EnsembleError("convolutive ensembles need n1, n2 <= m");
                ConvolutivePayload payload;
                Eigen::MatrixXd hadamard;
                if (kind == EnsembleKind::ConvolutiveHadamard) hadamard = sylvester_hadamard(m, shape.rows);
                Eigen::FFT<double> fft;
                const double scale = 1.0 / std::sqrt(static_cast<double>(m));
                for (Eigen::Index k = 0; k < s; ++k) {
                    Matrix<T> c;
                    if (kind == EnsembleKind::ConvolutiveGaussian) {
                        auto rng = make_stream(seed, StreamTag::Encoder, {static_cast<std::uint64_t>(k)});
                        c = gaussian_matrix<T>(rng, m, shape.rows);
                    } else {
                        auto rng = make_stream(seed, StreamTag::SignDiagonal, {static_cast<std::uint64_t>(k)});
                        std::bernoulli_distribution coin(0.5);
                        c = hadamard.cast<T>();
                        for (Eigen::Index p = 0; p < m; ++p)
                            if (coin(rng)) c.row(p) *= -1.0;
                    }
                    Matrix<T> fc(m, shape.rows);
                    std::vector<cplx> in(static_cast<std::size_t>(m)), out;
                    for (Eigen::Index j = 0; j < shape.rows; ++j) {
                        for (Eigen::Index p = 0; p < m; ++p) in[static_cast<std::size_t>(p)] = c(p, j);
                        fft.fwd(out, in);
                        for (Eigen::Index p = 0; p < m; ++p) fc(p, j) = out[static_cast<std::size_t>(p)] * scale;
                    }
                    payload.encoders.push_back(std::move(c));
                    payload.fourier.push_back(std::move(fc));
                }
                payload.b.resize(m, shape.cols);
                for (Eigen::Index j = 0; j < shape.cols; ++j)
                    for (Eigen::Index p = 0; p < m; ++p) payload.b(p, j) = dft_entry(p, j, m);
                ens.payload_ = std::move(payload);
            }
            break;
        }
        case EnsembleKind::Explicit:
            throw EnsembleError("explicit ensembles are built with from_matrices()");
    }
    return ens;
}

template <typename T>
MeasurementEnsemble<T> MeasurementEnsemble<T>::from_matrices(const std::vector<std::vector<Matrix<T>>>& matrices) {
    if (matrices.empty() || matrices.front().empty()) throw EnsembleError("explicit ensemble is empty");
    MeasurementEnsemble ens;
    ens.kind_ = EnsembleKind::Explicit;
    ens.s_ = static_cast<Eigen::Index>(matrices.size());
    ens.m_ = static_cast<Eigen::Index>(matrices.front().size());
    ens.shape_ = {matrices.front().front().rows(), matrices.front().front().cols()};
    GaussianPayload payload;
    for (const auto& ops : matrices) {
        if (static_cast<Eigen::Index>(ops.size()) != ens.m_)
            throw EnsembleError("explicit ensemble: operators have different measurement counts");
        Matrix<T> block(ens.shape_.rows * ens.shape_.cols, ens.m_);
        for (Eigen::Index p = 0; p < ens.m_; ++p) {
            const auto& a = ops[static_cast<std::size_t>(p)];
            if (a.rows() != ens.shape_.rows || a.cols() != ens.shape_.cols)
                throw EnsembleError("explicit ensemble: sensing matrices differ in shape");
            require_finite(a, "explicit ensemble");
            block.col(p) = a.reshaped();
        }
        payload.rows.push_back(std::move(block));
    }
    ens.payload_ = std::move(payload);
    return ens;
}

template <typename T>
Vector<T> MeasurementEnsemble<T>::forward(Eigen::Index k, const Matrix<T>& z) const {
    check_index(k);
    if (z.rows() != shape_.rows || z.cols() != shape_.cols)
        throw DimensionError("forward: matrix is " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
                             ", ensemble shape is " + std::to_string(shape_.rows) + "x" +
                             std::to_string(shape_.cols));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
    const auto uk = static_cast<std::size_t>(k);
    Vector<T> y(m_);

    if (const auto* g = std::get_if<GaussianPayload>(&payload_)) {
        if (!g->rows.empty()) {
            y.noalias() = g->rows[uk].adjoint() * z.reshaped();
        } else {
            const auto vz = z.reshaped();
            for (Eigen::Index p = 0; p < m_; ++p) y(p) = gaussian_row(k, p).dot(vz);
        }
    } else if (const auto* pauli = std::get_if<PauliPayload>(&payload_)) {
        if constexpr (is_complex_v<T>) {
            for (Eigen::Index p = 0; p < m_; ++p) {
                const auto w = pauli->words[uk][static_cast<std::size_t>(p)];
                const cplx phase = pauli_phase(w.flip, w.sign, pauli->q);
                cplx acc = 0.0;
                for (Eigen::Index i = 0; i < shape_.rows; ++i) {
                    const auto ui = static_cast<std::uint32_t>(i);
                    const double sgn = (std::popcount(ui & w.sign) & 1) ? -1.0 : 1.0;
                    acc += sgn * z(i, static_cast<Eigen::Index>(ui ^ w.flip));
                }
                y(p) = std::conj(phase) * acc;
            }
        }
    } else {
        const auto& c = std::get<ConvolutivePayload>(payload_);
        y = (c.fourier[uk] * z).cwiseProduct(c.b).rowwise().sum();
    }
    return y * scale;
}

template <typename T>
Vector<T> MeasurementEnsemble<T>::forward_factored(Eigen::Index k, const Matrix<T>& left,
                                                   const Matrix<T>& right) const {
    check_index(k);
    if (left.rows() != shape_.rows || right.rows() != shape_.cols || left.cols() != right.cols())
        throw DimensionError("forward_factored: factor shapes do not match the ensemble");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
    const auto uk = static_cast<std::size_t>(k);

    if (std::holds_alternative<GaussianPayload>(payload_)) return forward(k, Matrix<T>(left * right.adjoint()));

    Vector<T> y(m_);
    if (const auto* pauli = std::get_if<PauliPayload>(&payload_)) {
        if constexpr (is_complex_v<T>) {
            // Z(i, j) = left.row(i) * right^H.col(j)
            const Matrix<T> rh = right.adjoint();
            for (Eigen::Index p = 0; p < m_; ++p) {
                const auto w = pauli->words[uk][static_cast<std::size_t>(p)];
                const cplx phase = pauli_phase(w.flip, w.sign, pauli->q);
                cplx acc = 0.0;
                for (Eigen::Index i = 0; i < shape_.rows; ++i) {
                    const auto ui = static_cast<std::uint32_t>(i);
                    const double sgn = (std::popcount(ui & w.sign) & 1) ? -1.0 : 1.0;
                    acc += sgn * (left.row(i) * rh.col(static_cast<Eigen::Index>(ui ^ w.flip))).value();
                }
                y(p) = std::conj(phase) * acc;
            }
        }
    } else {
        const auto& c = std::get<ConvolutivePayload>(payload_);
        y = (c.fourier[uk] * left).cwiseProduct(c.b * right.conjugate()).rowwise().sum();
    }
    return y * scale;
}

template <typename T>
Vector<T> MeasurementEnsemble<T>::forward(Eigen::Index k, const LowRankFactor<T>& x) const {
    return forward_factored(k, x.U * x.S.template cast<T>().asDiagonal(), x.V);
}

template <typename T>
Matrix<T> MeasurementEnsemble<T>::adjoint(Eigen::Index k, const Vector<T>& y) const {
    check_index(k);
    if (y.size() != m_)
        throw DimensionError("adjoint: vector has length " + std::to_string(y.size()) + ", expected " +
                             std::to_string(m_));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
    const auto uk = static_cast<std::size_t>(k);
    Matrix<T> g = Matrix<T>::Zero(shape_.rows, shape_.cols);

    if (const auto* gp = std::get_if<GaussianPayload>(&payload_)) {
        if (!gp->rows.empty()) {
            g.reshaped().noalias() = gp->rows[uk] * y;
        } else {
            for (Eigen::Index p = 0; p < m_; ++p) g.reshaped() += y(p) * gaussian_row(k, p);
        }
    } else if (const auto* pauli = std::get_if<PauliPayload>(&payload_)) {
        if constexpr (is_complex_v<T>) {
            for (Eigen::Index p = 0; p < m_; ++p) {
                const auto w = pauli->words[uk][static_cast<std::size_t>(p)];
                const cplx coeff = pauli_phase(w.flip, w.sign, pauli->q) * y(p);
                for (Eigen::Index i = 0; i < shape_.rows; ++i) {
                    const auto ui = static_cast<std::uint32_t>(i);
                    const double sgn = (std::popcount(ui & w.sign) & 1) ? -1.0 : 1.0;
                    g(i, static_cast<Eigen::Index>(ui ^ w.flip)) += sgn * coeff;
                }
            }
        }
    } else {
        const auto& c = std::get<ConvolutivePayload>(payload_);
        g.noalias() = c.fourier[uk].adjoint() * (y.asDiagonal() * c.b.conjugate());
    }
    return g * scale;
}

template <typename T>
Matrix<T> MeasurementEnsemble<T>::sensing_matrix(Eigen::Index k, Eigen::Index p) const {
    check_index(k);
    if (p < 0 || p >= m_) throw DimensionError("measurement index out of range");
    const auto uk = static_cast<std::size_t>(k);
    if (const auto* g = std::get_if<GaussianPayload>(&payload_)) {
        const Vector<T> col = g->rows.empty() ? gaussian_row(k, p) : Vector<T>(g->rows[uk].col(p));
        return col.reshaped(shape_.rows, shape_.cols);
    }
    if (const auto* pauli = std::get_if<PauliPayload>(&payload_)) {
        Matrix<T> a = Matrix<T>::Zero(shape_.rows, shape_.cols);
        if constexpr (is_complex_v<T>) {
            const auto w = pauli->words[uk][static_cast<std::size_t>(p)];
            const cplx phase = pauli_phase(w.flip, w.sign, pauli->q);
            for (Eigen::Index i = 0; i < shape_.rows; ++i) {
                const auto ui = static_cast<std::uint32_t>(i);
                const double sgn = (std::popcount(ui & w.sign) & 1) ? -1.0 : 1.0;
                a(i, static_cast<Eigen::Index>(ui ^ w.flip)) = sgn * phase;
            }
        }
        return a;
    }
    const auto& c = std::get<ConvolutivePayload>(payload_);
    return (c.fourier[uk].row(p).transpose() * c.b.row(p)).conjugate();
}

template <typename T>
const Matrix<T>& MeasurementEnsemble<T>::encoder(Eigen::Index k) const {
    check_index(k);
    const auto* c = std::get_if<ConvolutivePayload>(&payload_);
    if (c == nullptr) throw EnsembleError("encoder() is only defined for convolutive ensembles");
    return c->encoders[static_cast<std::size_t>(k)];
}

template <typename T>
typename MeasurementEnsemble<T>::PauliWord MeasurementEnsemble<T>::pauli_word(Eigen::Index k, Eigen::Index p) const {
    check_index(k);
    const auto* pauli = std::get_if<PauliPayload>(&payload_);
    if (pauli == nullptr) throw EnsembleError("pauli_word() is only defined for Pauli ensembles");
    return pauli->words[static_cast<std::size_t>(k)].at(static_cast<std::size_t>(p));
}

template <typename T>
int MeasurementEnsemble<T>::qubits() const {
    const auto* pauli = std::get_if<PauliPayload>(&payload_);
    return pauli == nullptr ? 0 : pauli->q;
}

template <typename T>
nlohmann::json MeasurementEnsemble<T>::descriptor() const {
    nlohmann::json hashes = nlohmann::json::array();
    for (Eigen::Index k = 0; k < s_; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        std::uint64_t h = 1469598103934665603ull;
        if (const auto* g = std::get_if<GaussianPayload>(&payload_)) {
            if (!g->rows.empty()) {
                h = fnv1a(g->rows[uk].data(), static_cast<std::size_t>(g->rows[uk].size()) * sizeof(T));
            } else {
                for (Eigen::Index p = 0; p < m_; ++p) {
                    const Vector<T> row = gaussian_row(k, p);
                    h = fnv1a(row.data(), static_cast<std::size_t>(row.size()) * sizeof(T), h);
                }
            }
        } else if (const auto* pauli = std::get_if<PauliPayload>(&payload_)) {
            h = fnv1a(pauli->words[uk].data(), pauli->words[uk].size() * sizeof(PauliWord));
        } else {
            const auto& c = std::get<ConvolutivePayload>(payload_);
            h = fnv1a(c.encoders[uk].data(), static_cast<std::size_t>(c.encoders[uk].size()) * sizeof(T));
        }
        hashes.push_back(hex(h));
    }
    return {
        {"kind", std::string(to_string(kind_))},
        {"scalar", is_complex_v<T> ? "complex" : "real"},
        {"s", s_},
        {"m", m_},
        {"n1", shape_.rows},
        {"n2", shape_.cols},
        {"seed", seed_},
        {"streamed", streamed()},
        {"payload_hash", hashes},
    };
}

template <typename T>
Vector<T> mixed_forward(const MeasurementEnsemble<T>& ens, const std::vector<LowRankFactor<T>>& x) {
    if (static_cast<Eigen::Index>(x.size()) != ens.s())
        throw DimensionError("mixed_forward: " + std::to_string(x.size()) + " constituents for " +
                             std::to_string(ens.s()) + " operators");
    Vector<T> y = Vector<T>::Zero(ens.m());
    for (Eigen::Index k = 0; k < ens.s(); ++k) y += ens.forward(k, x[static_cast<std::size_t>(k)]);
    return y;
}

template class MeasurementEnsemble<double>;
template class MeasurementEnsemble<cplx>;
template Vector<double> mixed_forward(const MeasurementEnsemble<double>&, const std::vector<LowRankFactor<double>>&);
template Vector<cplx> mixed_forward(const MeasurementEnsemble<cplx>&, const std::vector<LowRankFactor<cplx>>&);

}  // namespace demix
