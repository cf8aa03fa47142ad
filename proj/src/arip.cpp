#include "demix/arip.hpp"

#include <algorithm>
#include <cmath>

#include "demix/random.hpp"

namespace demix {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw DimensionError("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AripEstimate summarize_ratios(Eigen::Index r, std::vector<double> ratios) {
    if (ratios.empty()) throw DimensionError("arip: at least one trial is required");
    AripEstimate est;
    est.r = r;
    est.trials = static_cast<int>(ratios.size());
    est.ratios = ratios;
    std::sort(ratios.begin(), ratios.end());
    est.ratio_min = ratios.front();
    est.ratio_max = ratios.back();
    est.delta_hat = std::max({0.0, 1.0 - est.ratio_min, est.ratio_max - 1.0});
    est.q01 = quantile_sorted(ratios, 0.01);
    est.q50 = quantile_sorted(ratios, 0.50);
    est.q99 = quantile_sorted(ratios, 0.99);
    return est;
}

template <typename T>
double arip_ratio(const MeasurementEnsemble<T>& ens, const std::vector<Matrix<T>>& tuple) {
    if (static_cast<Eigen::Index>(tuple.size()) != ens.s())
        throw DimensionError("arip_ratio: tuple has " + std::to_string(tuple.size()) + " members for " +
                             std::to_string(ens.s()) + " operators");
    double total = 0.0;
    for (const auto& z : tuple) total += z.squaredNorm();
    if (!(total > 0.0)) throw DimensionError("arip_ratio: tuple is zero");
    const double scale = 1.0 / std::sqrt(total);
    Vector<T> sum = Vector<T>::Zero(ens.m());
    for (Eigen::Index k = 0; k < ens.s(); ++k) sum += ens.forward(k, Matrix<T>(tuple[static_cast<std::size_t>(k)] * scale));
    return sum.squaredNorm();
}

template <typename T>
std::vector<Matrix<T>> arip_tuple(const MeasurementEnsemble<T>& ens, Eigen::Index r, std::uint64_t seed, int trial) {
    auto rng = make_stream(seed, StreamTag::AripTrial, {static_cast<std::uint64_t>(trial)});
    const Shape shape = ens.shape();
    std::vector<Matrix<T>> tuple;
    tuple.reserve(static_cast<std::size_t>(ens.s()));
    for (Eigen::Index k = 0; k < ens.s(); ++k) {
        const Matrix<T> left = gaussian_matrix<T>(rng, shape.rows, r);
        const Matrix<T> right = gaussian_matrix<T>(rng, shape.cols, r);
        tuple.push_back(left * right.adjoint());
    }
    return tuple;
}

template <typename T>
AripEstimate arip_sample(const MeasurementEnsemble<T>& ens, Eigen::Index r, int trials, std::uint64_t seed) {
    if (trials < 1) throw DimensionError("arip: trials must be >= 1");
    if (r < 1 || r > std::min(ens.shape().rows, ens.shape().cols)) throw DimensionError("arip: rank out of range");
    std::vector<double> ratios(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) ratios[static_cast<std::size_t>(t)] = arip_ratio(ens, arip_tuple(ens, r, seed, t));
    return summarize_ratios(r, std::move(ratios));
}

template <typename T>
std::vector<AripRow> arip_scaling_report(EnsembleKind kind, const std::vector<AripGridPoint>& grid, int trials,
                                         std::uint64_t seed) {
    std::vector<AripRow> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& pt = grid[i];
        AripRow row;
        row.kind = kind;
        row.point = pt;
        row.seed = derive_seed(seed, StreamTag::AripEnsemble, {i});
        const auto ens = MeasurementEnsemble<T>::generate(kind, pt.s, pt.m, {pt.n, pt.n}, row.seed);
        row.estimate = arip_sample(ens, pt.r, trials, derive_seed(seed, StreamTag::AripTrial, {i}));
        rows.push_back(std::move(row));
    }
    return rows;
}

#define DEMIX_INSTANTIATE(T)                                                                                      \
    template double arip_ratio(const MeasurementEnsemble<T>&, const std::vector<Matrix<T>>&);                     \
    template std::vector<Matrix<T>> arip_tuple(const MeasurementEnsemble<T>&, Eigen::Index, std::uint64_t, int);  \
    template AripEstimate arip_sample(const MeasurementEnsemble<T>&, Eigen::Index, int, std::uint64_t);           \
    template std::vector<AripRow> arip_scaling_report<T>(EnsembleKind, const std::vector<AripGridPoint>&, int,    \
                                                         std::uint64_t);

DEMIX_INSTANTIATE(double)
DEMIX_INSTANTIATE(cplx)

#undef DEMIX_INSTANTIATE

}  // namespace demix
