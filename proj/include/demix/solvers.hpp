#pragma once

// Demixing solvers: iterative hard thresholding (IHT), its tangent-space
// accelerated variant (FIHT) and the PSD / unit-trace variant (FIHT-PSD),
// plus the rank-increasing driver and convergence diagnostics.
//
// Each iteration computes the shared residual r_l = y - sum_k A_k(X_{k,l}),
// then updates every constituent independently. That inner loop runs under
// OpenMP when Execution::Parallel is selected; every constituent writes only
// its own slot and the residual is summed in k order, so serial and parallel
// runs are bit-identical.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "demix/matrix_core.hpp"
#include "demix/measurement.hpp"

namespace demix {

template <typename T>
using ConstituentSet = std::vector<LowRankFactor<T>>;
template <typename T>
using HermitianSet = std::vector<HermitianFactor<T>>;

enum class SolverMode { IHT, FIHT, FIHTPsd };
enum class Execution { Serial, Parallel };

std::string_view to_string(SolverMode mode);
SolverMode solver_mode_from_string(std::string_view name);

struct RankSchedule {
    bool increasing = false;
    int stall_window = 20;
    double stall_ratio = 1e-2;
    Eigen::Index r_max = 0;  // 0: largest rank the core update supports
};

struct SolverConfig {
    int max_iters = 500;
    double residual_tol = 1e-4;
    SolverMode mode = SolverMode::FIHT;
    RankSchedule rank_schedule;
    /// Optional early stop for fixed-rank runs that settle on a noise floor:
    /// stop once the relative residual improved by less than stagnation_ratio
    /// over the last stagnation_window iterations. Disabled when window is 0.
    int stagnation_window = 0;
    double stagnation_ratio = 1e-3;
    Execution execution = Execution::Parallel;
    /// Record the stacked relative error each iteration when truth is known.
    bool track_error = true;
    /// FIHT-PSD: check the PSD / unit-trace invariants after every iteration
    /// and count failures in the report (debug builds also assert them).
    bool check_invariants = false;

    void validate() const;
};

template <typename T>
struct NoiseRecord {
    double sigma = 0.0;
    Vector<T> e;
};

template <typename T>
struct DemixProblem {
    Vector<T> y;
    std::shared_ptr<const MeasurementEnsemble<T>> ens;
    Eigen::Index r = 1;
    std::optional<ConstituentSet<T>> truth;
    std::optional<NoiseRecord<T>> noise;
};

template <typename T>
struct SolveReport {
    ConstituentSet<T> estimates;
    std::vector<double> residual_trace;            // iterations + 1 entries
    std::vector<double> error_trace;               // same length when truth is tracked
    std::vector<std::vector<double>> step_sizes;   // [iteration][k]
    std::vector<Eigen::Index> rank_trace;          // assumed rank per residual entry
    std::vector<int> rank_changes;                 // iterations where the rank grew
    bool converged = false;
    int iterations = 0;
    std::optional<double> relative_error;
    std::vector<double> constituent_errors;
    /// A PSD projection found no positive eigenvalue; the zero factor was used.
    bool zero_spectrum = false;
    int invariant_violations = 0;  // only counted with check_invariants
    std::string stop_reason;
    double wall_time = 0.0;  // seconds
};

struct ConvergenceDiagnostics {
    double gamma1_bound = 0.0;
    std::optional<double> gamma2_bound;  // needs truth for sigma_max / sigma_min
    double xi_bound = 0.0;
    std::optional<double> empirical_rate;
};

/// Relative residual ||y - sum_k A_k(X_k)|| / ||y|| (0 when y = 0 and the fit is exact).
template <typename T>
double relative_residual(const DemixProblem<T>& prob, const ConstituentSet<T>& x);

/// sqrt(sum ||X_k - truth_k||_F^2) / sqrt(sum ||truth_k||_F^2).
template <typename T>
double relative_error(const ConstituentSet<T>& estimates, const ConstituentSet<T>& truth);

/// X_{k,0} = H_r(A_k^*(y)).
template <typename T>
ConstituentSet<T> initialize(const DemixProblem<T>& prob, Execution exec = Execution::Parallel);

/// X_{k,0} = P_Delta(P_Pi(herm(A_k^*(y)))); zero factors when no positive spectrum.
template <typename T>
HermitianSet<T> initialize_psd(const DemixProblem<T>& prob, bool* zero_spectrum = nullptr,
                               Execution exec = Execution::Parallel);

/// ||P_T(G)||_F^2 / ||A_k(P_T(G))||^2; 0 when P_T(G) = 0.
template <typename T>
double step_size(const MeasurementEnsemble<T>& ens, Eigen::Index k, const TangentSpace<T>& t, const Matrix<T>& g);

template <typename T>
double step_size(const MeasurementEnsemble<T>& ens, Eigen::Index k, const TangentSpace<T>& t,
                 const TangentVector<T>& d);

/// One iteration from X_l. The optional step_sizes receives alpha_{k,l}.
template <typename T>
ConstituentSet<T> iht_step(const DemixProblem<T>& prob, const ConstituentSet<T>& x,
                           Execution exec = Execution::Parallel, std::vector<double>* step_sizes = nullptr);

template <typename T>
ConstituentSet<T> fiht_step(const DemixProblem<T>& prob, const ConstituentSet<T>& x,
                            Execution exec = Execution::Parallel, std::vector<double>* step_sizes = nullptr);

template <typename T>
HermitianSet<T> fiht_psd_step(const DemixProblem<T>& prob, const HermitianSet<T>& x,
                              Execution exec = Execution::Parallel, std::vector<double>* step_sizes = nullptr,
                              bool* zero_spectrum = nullptr);

/// Runs the configured fixed-rank iteration. `init` replaces the default initializer.
template <typename T>
SolveReport<T> solve(const DemixProblem<T>& prob, const SolverConfig& cfg,
                     const std::optional<ConstituentSet<T>>& init = std::nullopt);

/// FIHT (or FIHT-PSD) starting at rank one, growing the assumed rank by one
/// whenever the residual stalls, until it converges or reaches r_max.
template <typename T>
SolveReport<T> solve_rank_increasing(const DemixProblem<T>& prob, const SolverConfig& cfg);

/// True when the relative residual improved by less than `ratio` over the
/// last `window` entries of `trace` (counted from `since`).
bool residual_stalled(const std::vector<double>& trace, std::size_t since, int window, double ratio);

/// Inclusive: error <= 1e-2.
inline constexpr double kSuccessThreshold = 1e-2;
template <typename T>
bool success_test(const SolveReport<T>& report, const ConstituentSet<T>& truth);

/// Closed-form contraction/noise constants for hypothetical RIP levels, and
/// the median per-iteration error ratio of the run. Reported, never asserted.
template <typename T>
ConvergenceDiagnostics diagnostics(const DemixProblem<T>& prob, const SolveReport<T>& report, double delta2r,
                                   double delta3r);

/// Hermitian, PSD (>= -tol), rank <= r and unit trace (1 +- tol).
template <typename T>
bool psd_invariants_hold(const HermitianFactor<T>& x, Eigen::Index r, double tol = 1e-10);

}  // namespace demix
