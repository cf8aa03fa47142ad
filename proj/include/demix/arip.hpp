#pragma once

// Empirical amalgam-RIP constants. Each trial draws a tuple of rank-r
// matrices Z_k = L_k R_k^H with Gaussian factors, normalizes it so that
// sum_k ||Z_k||_F^2 = 1 and records rho = ||sum_k A_k(Z_k)||^2. The resulting
// delta_hat is a lower bound on the true constant; sampling cannot certify
// the supremum.

#include <cstdint>
#include <vector>

#include "demix/measurement.hpp"

namespace demix {

struct AripEstimate {
    Eigen::Index r = 0;
    int trials = 0;
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    double delta_hat = 0.0;  // max(1 - ratio_min, ratio_max - 1, 0)
    double q01 = 0.0;
    double q50 = 0.0;
    double q99 = 0.0;
    std::vector<double> ratios;  // in trial order
};

/// rho for an explicit tuple, normalized first (so invariant under scaling).
template <typename T>
double arip_ratio(const MeasurementEnsemble<T>& ens, const std::vector<Matrix<T>>& tuple);

/// The tuple drawn for `trial`; stream keyed by (seed, trial).
template <typename T>
std::vector<Matrix<T>> arip_tuple(const MeasurementEnsemble<T>& ens, Eigen::Index r, std::uint64_t seed, int trial);

template <typename T>
AripEstimate arip_sample(const MeasurementEnsemble<T>& ens, Eigen::Index r, int trials, std::uint64_t seed);

/// Summary of a sample of ratios; `ratios` must be non-empty.
AripEstimate summarize_ratios(Eigen::Index r, std::vector<double> ratios);

/// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(const std::vector<double>& sorted, double p);

struct AripGridPoint {
    Eigen::Index m = 0;
    Eigen::Index n = 0;
    Eigen::Index r = 0;
    Eigen::Index s = 0;
};

struct AripRow {
    EnsembleKind kind = EnsembleKind::Gaussian;
    AripGridPoint point;
    AripEstimate estimate;
    std::uint64_t seed = 0;  // ensemble seed of this grid point
};

/// One n x n ensemble per grid point, seeded from (seed, point index).
template <typename T>
std::vector<AripRow> arip_scaling_report(EnsembleKind kind, const std::vector<AripGridPoint>& grid, int trials,
                                         std::uint64_t seed);

}  // namespace demix
