#include "demix/solvers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>

namespace demix {

std::string_view to_string(SolverMode mode) {
    switch (mode) {
        case SolverMode::IHT: return "iht";
        case SolverMode::FIHT: return "fiht";
        case SolverMode::FIHTPsd: return "fiht-psd";
    }
    return "unknown";
}

SolverMode solver_mode_from_string(std::string_view name) {
    for (auto mode : {SolverMode::IHT, SolverMode::FIHT, SolverMode::FIHTPsd})
        if (to_string(mode) == name) return mode;
    throw SpecError("unknown solver '" + std::string(name) + "' (expected iht, fiht or fiht-psd)");
}

void SolverConfig::validate() const {
    if (max_iters < 1) throw SpecError("solver: max_iters must be >= 1");
    if (!(residual_tol > 0.0)) throw SpecError("solver: residual_tol must be positive");
    if (rank_schedule.increasing) {
        if (rank_schedule.stall_window < 1) throw SpecError("solver: stall_window must be >= 1");
        if (!(rank_schedule.stall_ratio > 0.0)) throw SpecError("solver: stall_ratio must be positive");
        if (rank_schedule.r_max < 0) throw SpecError("solver: r_max must be >= 0");
        if (mode == SolverMode::IHT) throw SpecError("solver: the rank-increasing schedule runs FIHT or FIHT-PSD");
    }
    if (stagnation_window < 0) throw SpecError("solver: stagnation_window must be >= 0");
    if (stagnation_window > 0 && !(stagnation_ratio > 0.0))
        throw SpecError("solver: stagnation_ratio must be positive");
}

namespace {

template <typename F>
void for_each_constituent(Eigen::Index s, Execution exec, F&& body) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(s));
    if (exec == Execution::Parallel && s > 1) {
#pragma omp parallel for schedule(static)
        for (Eigen::Index k = 0; k < s; ++k) {
            try {
                body(k);
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
    } else {
        for (Eigen::Index k = 0; k < s; ++k) {
            try {
                body(k);
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

template <typename T>
void check_problem(const DemixProblem<T>& prob) {
    if (!prob.ens) throw DimensionError("problem has no measurement ensemble");
    if (prob.y.size() != prob.ens->m())
        throw DimensionError("problem: y has length " + std::to_string(prob.y.size()) + ", ensemble measures " +
                             std::to_string(prob.ens->m()));
    if (prob.r < 1 || prob.r > std::min(prob.ens->shape().rows, prob.ens->shape().cols))
        throw DimensionError("problem: rank " + std::to_string(prob.r) + " out of range");
}

template <typename T>
void check_set_size(const DemixProblem<T>& prob, std::size_t n) {
    if (static_cast<Eigen::Index>(n) != prob.ens->s())
        throw DimensionError("expected " + std::to_string(prob.ens->s()) + " constituents, got " + std::to_string(n));
}

// y - sum_k A_k(X_k); forwards run per constituent, the sum is taken in k order.
template <typename T>
Vector<T> residual_vector(const DemixProblem<T>& prob, const ConstituentSet<T>& x, Execution exec) {
    check_set_size(prob, x.size());
    const Eigen::Index s = prob.ens->s();
    std::vector<Vector<T>> parts(static_cast<std::size_t>(s));
    for_each_constituent(s, exec, [&](Eigen::Index k) {
        parts[static_cast<std::size_t>(k)] = prob.ens->forward(k, x[static_cast<std::size_t>(k)]);
    });
    Vector<T> r = prob.y;
    for (const auto& part : parts) r -= part;
    return r;
}

template <typename T>
double relative_norm(const Vector<T>& r, const Vector<T>& y) {
    const double ny = y.norm();
    const double nr = r.norm();
    if (ny == 0.0) return nr == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return nr / ny;
}

template <typename T>
ConstituentSet<T> as_low_rank(const HermitianSet<T>& xh) {
    ConstituentSet<T> out;
    out.reserve(xh.size());
    for (const auto& h : xh) out.push_back(h.as_low_rank());
    return out;
}

template <typename T>
Matrix<T> hermitian_part(const Matrix<T>& g) {
    return (g + g.adjoint()) / 2.0;
}

template <typename T>
HermitianFactor<T> finish_psd(PsdProjection<T> proj, bool& zero) {
    if (proj.positive == 0) {
        zero = true;
        proj.factor.L.setZero();
        return std::move(proj.factor);
    }
    proj.factor.L = simplex_project(proj.factor.L);
    return std::move(proj.factor);
}

template <typename T>
ConstituentSet<T> iht_update(const DemixProblem<T>& prob, const ConstituentSet<T>& x, const Vector<T>& residual,
                             Execution exec, std::vector<double>& alphas) {
    const Eigen::Index s = prob.ens->s();
    ConstituentSet<T> next(static_cast<std::size_t>(s));
    alphas.assign(static_cast<std::size_t>(s), 0.0);
    for_each_constituent(s, exec, [&](Eigen::Index k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& xk = x[uk];
        const Matrix<T> g = prob.ens->adjoint(k, residual);
        const auto t = TangentSpace<T>::at(xk);
        const double alpha = step_size(*prob.ens, k, t, tangent_components(t, g));
        alphas[uk] = alpha;
        next[uk] = hard_threshold<T>(xk.dense() + T(alpha) * g, xk.rank());
    });
    return next;
}

template <typename T>
ConstituentSet<T> fiht_update(const DemixProblem<T>& prob, const ConstituentSet<T>& x, const Vector<T>& residual,
                              Execution exec, std::vector<double>& alphas) {
    const Eigen::Index s = prob.ens->s();
    ConstituentSet<T> next(static_cast<std::size_t>(s));
    alphas.assign(static_cast<std::size_t>(s), 0.0);
    for_each_constituent(s, exec, [&](Eigen::Index k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& xk = x[uk];
        const auto t = TangentSpace<T>::at(xk);
        const auto d = tangent_components(t, prob.ens->adjoint(k, residual));
        const double alpha = step_size(*prob.ens, k, t, d);
        alphas[uk] = alpha;
        next[uk] = threshold_core(core_update(xk, d, alpha), xk, xk.rank());
    });
    return next;
}

template <typename T>
HermitianSet<T> fiht_psd_update(const DemixProblem<T>& prob, const HermitianSet<T>& x, const Vector<T>& residual,
                                Execution exec, std::vector<double>& alphas, bool& zero_spectrum) {
    const Eigen::Index s = prob.ens->s();
    HermitianSet<T> next(static_cast<std::size_t>(s));
    std::vector<char> zero(static_cast<std::size_t>(s), 0);
    alphas.assign(static_cast<std::size_t>(s), 0.0);
    for_each_constituent(s, exec, [&](Eigen::Index k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& xk = x[uk];
        const auto t = TangentSpace<T>::at(xk);
        const auto d = tangent_components(t, hermitian_part<T>(prob.ens->adjoint(k, residual)));
        const double alpha = step_size(*prob.ens, k, t, d);
        alphas[uk] = alpha;
        bool z = false;
        next[uk] = finish_psd(psd_rank_project(core_update(xk, d, alpha), xk, xk.rank()), z);
        zero[uk] = z;
    });
    zero_spectrum = std::any_of(zero.begin(), zero.end(), [](char c) { return c != 0; });
    return next;
}

// Extends each factor by one zero singular value. The new direction is the top
// singular pair of the part of the gradient outside the current row and column
// spaces, so the next tangent step can move along it.
template <typename T>
ConstituentSet<T> grow_rank(const DemixProblem<T>& prob, const ConstituentSet<T>& x, const Vector<T>& residual,
                            Execution exec) {
    ConstituentSet<T> out(x.size());
    for_each_constituent(prob.ens->s(), exec, [&](Eigen::Index k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& xk = x[uk];
        const Matrix<T> g = prob.ens->adjoint(k, residual);
        const Matrix<T> left = g - xk.U * (xk.U.adjoint() * g);
        const Matrix<T> outside = left - (left * xk.V) * xk.V.adjoint();
        const auto top = truncated_svd<T>(outside, 1);
        const Eigen::Index r = xk.rank();
        LowRankFactor<T> grown;
        grown.U.resize(xk.rows(), r + 1);
        grown.V.resize(xk.cols(), r + 1);
        grown.S = RealVector::Zero(r + 1);
        grown.U << xk.U, top.U;
        grown.V << xk.V, top.V;
        grown.S.head(r) = xk.S;
        out[uk] = std::move(grown);
    });
    return out;
}

template <typename T>
HermitianSet<T> grow_rank(const DemixProblem<T>& prob, const HermitianSet<T>& x, const Vector<T>& residual,
                          Execution exec) {
    HermitianSet<T> out(x.size());
    for_each_constituent(prob.ens->s(), exec, [&](Eigen::Index k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& xk = x[uk];
        const Matrix<T> g = hermitian_part<T>(prob.ens->adjoint(k, residual));
        const Matrix<T> left = g - xk.U * (xk.U.adjoint() * g);
        const Matrix<T> outside = left - (left * xk.U) * xk.U.adjoint();
        const auto top = psd_rank_project<T>(outside, 1);
        const Eigen::Index r = xk.rank();
        HermitianFactor<T> grown;
        grown.U.resize(xk.dim(), r + 1);
        grown.U << xk.U, top.factor.U;
        grown.L = RealVector::Zero(r + 1);
        grown.L.head(r) = xk.L;
        out[uk] = std::move(grown);
    });
    return out;
}

template <typename T>
HermitianSet<T> to_hermitian(const ConstituentSet<T>& x) {
    HermitianSet<T> out;
    out.reserve(x.size());
    for (const auto& f : x) out.push_back({f.U, f.S});
    return out;
}

// Shared iteration loop for the fixed- and increasing-rank drivers. State is
// either a general or a Hermitian set depending on the mode.
template <typename T, typename Set>
SolveReport<T> run_iterations(const DemixProblem<T>& prob, const SolverConfig& cfg, Set x, bool zero_at_init,
                              bool increasing) {
    const auto start = std::chrono::steady_clock::now();
    constexpr bool psd = std::is_same_v<Set, HermitianSet<T>>;
    SolveReport<T> rep;
    rep.zero_spectrum = zero_at_init;
    const bool track = cfg.track_error && prob.truth.has_value();
    const Eigen::Index r_max =
        cfg.rank_schedule.r_max > 0 ? cfg.rank_schedule.r_max
                                    : std::min(prob.ens->shape().rows, prob.ens->shape().cols) / 2;
    std::size_t since = 0;
    if constexpr (psd) {
        if (cfg.check_invariants)
            for (const auto& f : x) rep.invariant_violations += psd_invariants_hold(f, f.rank()) ? 0 : 1;
    }

    for (int l = 0;; ++l) {
        ConstituentSet<T> current;
        if constexpr (psd) current = as_low_rank(x);
        else current = x;
        const Vector<T> residual = residual_vector(prob, current, cfg.execution);
        rep.residual_trace.push_back(relative_norm(residual, prob.y));
        rep.rank_trace.push_back(x.empty() ? 0 : x.front().rank());
        if (track) rep.error_trace.push_back(relative_error(current, *prob.truth));

        if (rep.residual_trace.back() <= cfg.residual_tol) {
            rep.converged = true;
            rep.stop_reason = "residual";
            break;
        }
        if (l == cfg.max_iters) {
            rep.stop_reason = "max_iters";
            break;
        }
        if (increasing) {
            if (residual_stalled(rep.residual_trace, since, cfg.rank_schedule.stall_window,
                                 cfg.rank_schedule.stall_ratio)) {
                if (x.front().rank() >= r_max) {
                    rep.stop_reason = "stalled_at_r_max";
                    break;
                }
                x = grow_rank(prob, x, residual, cfg.execution);
                rep.rank_changes.push_back(l);
                since = rep.residual_trace.size() - 1;
            }
        } else if (cfg.stagnation_window > 0 &&
                   residual_stalled(rep.residual_trace, 0, cfg.stagnation_window, cfg.stagnation_ratio)) {
            rep.stop_reason = "stalled";
            break;
        }

        std::vector<double> alphas;
        if constexpr (psd) {
            bool zero = false;
            x = fiht_psd_update(prob, x, residual, cfg.execution, alphas, zero);
            rep.zero_spectrum = rep.zero_spectrum || zero;
            if (cfg.check_invariants)
                for (const auto& f : x) rep.invariant_violations += psd_invariants_hold(f, f.rank()) ? 0 : 1;
#ifndef NDEBUG
            if (!zero)
                for (const auto& f : x) assert(psd_invariants_hold(f, f.rank(), 1e-8));
#endif
        } else if (cfg.mode == SolverMode::IHT) {
            x = iht_update(prob, x, residual, cfg.execution, alphas);
        } else {
            x = fiht_update(prob, x, residual, cfg.execution, alphas);
        }
        rep.step_sizes.push_back(std::move(alphas));
        rep.iterations = l + 1;
    }

    if constexpr (psd) rep.estimates = as_low_rank(x);
    else rep.estimates = std::move(x);
    if (prob.truth) {
        rep.relative_error = relative_error(rep.estimates, *prob.truth);
        for (std::size_t k = 0; k < rep.estimates.size(); ++k) {
            const auto& t = (*prob.truth)[k];
            const double nt = t.frobenius_norm();
            const double diff = (rep.estimates[k].dense() - t.dense()).norm();
            rep.constituent_errors.push_back(nt > 0.0 ? diff / nt : diff);
        }
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace

bool residual_stalled(const std::vector<double>& trace, std::size_t since, int window, double ratio) {
    if (window < 1 || trace.size() < since + static_cast<std::size_t>(window) + 1) return false;
    const double before = trace[trace.size() - 1 - static_cast<std::size_t>(window)];
    const double now = trace.back();
    if (!(before > 0.0)) return false;
    return (before - now) < ratio * before;
}

template <typename T>
double relative_residual(const DemixProblem<T>& prob, const ConstituentSet<T>& x) {
    check_problem(prob);
    return relative_norm(residual_vector(prob, x, Execution::Serial), prob.y);
}

template <typename T>
double relative_error(const ConstituentSet<T>& estimates, const ConstituentSet<T>& truth) {
    if (estimates.size() != truth.size()) throw DimensionError("relative_error: set sizes differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const Matrix<T> t = truth[k].dense();
        num += (estimates[k].dense() - t).squaredNorm();
        den += t.squaredNorm();
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

template <typename T>
ConstituentSet<T> initialize(const DemixProblem<T>& prob, Execution exec) {
    check_problem(prob);
    ConstituentSet<T> x(static_cast<std::size_t>(prob.ens->s()));
    for_each_constituent(prob.ens->s(), exec, [&](Eigen::Index k) {
        x[static_cast<std::size_t>(k)] = hard_threshold<T>(prob.ens->adjoint(k, prob.y), prob.r);
    });
    return x;
}

template <typename T>
HermitianSet<T> initialize_psd(const DemixProblem<T>& prob, bool* zero_spectrum, Execution exec) {
    check_problem(prob);
    const Shape shape = prob.ens->shape();
    if (shape.rows != shape.cols) throw DimensionError("initialize_psd: constituents must be square");
    const Eigen::Index s = prob.ens->s();
    HermitianSet<T> x(static_cast<std::size_t>(s));
    std::vector<char> zero(static_cast<std::size_t>(s), 0);
    for_each_constituent(s, exec, [&](Eigen::Index k) {
        bool z = false;
        x[static_cast<std::size_t>(k)] = finish_psd(psd_rank_project<T>(prob.ens->adjoint(k, prob.y), prob.r), z);
        zero[static_cast<std::size_t>(k)] = z;
    });
    if (zero_spectrum) *zero_spectrum = std::any_of(zero.begin(), zero.end(), [](char c) { return c != 0; });
    return x;
}

template <typename T>
double step_size(const MeasurementEnsemble<T>& ens, Eigen::Index k, const TangentSpace<T>& t,
                 const TangentVector<T>& d) {
    const double num = d.squared_norm();
    if (num == 0.0) return 0.0;
    const auto [left, right] = d.factors(t);
    const double den = ens.forward_factored(k, left, right).squaredNorm();
    if (den == 0.0)
        throw DegenerateEnsembleError("step_size: operator " + std::to_string(k) +
                                      " annihilates a nonzero tangent direction");
    return num / den;
}

template <typename T>
double step_size(const MeasurementEnsemble<T>& ens, Eigen::Index k, const TangentSpace<T>& t, const Matrix<T>& g) {
    return step_size(ens, k, t, tangent_components(t, g));
}

template <typename T>
ConstituentSet<T> iht_step(const DemixProblem<T>& prob, const ConstituentSet<T>& x, Execution exec,
                           std::vector<double>* step_sizes) {
    check_problem(prob);
    std::vector<double> alphas;
    auto next = iht_update(prob, x, residual_vector(prob, x, exec), exec, alphas);
    if (step_sizes) *step_sizes = std::move(alphas);
    return next;
}

template <typename T>
ConstituentSet<T> fiht_step(const DemixProblem<T>& prob, const ConstituentSet<T>& x, Execution exec,
                            std::vector<double>* step_sizes) {
    check_problem(prob);
    std::vector<double> alphas;
    auto next = fiht_update(prob, x, residual_vector(prob, x, exec), exec, alphas);
    if (step_sizes) *step_sizes = std::move(alphas);
    return next;
}

template <typename T>
HermitianSet<T> fiht_psd_step(const DemixProblem<T>& prob, const HermitianSet<T>& x, Execution exec,
                              std::vector<double>* step_sizes, bool* zero_spectrum) {
    check_problem(prob);
    check_set_size(prob, x.size());
    std::vector<double> alphas;
    bool zero = false;
    auto next = fiht_psd_update(prob, x, residual_vector(prob, as_low_rank(x), exec), exec, alphas, zero);
    if (step_sizes) *step_sizes = std::move(alphas);
    if (zero_spectrum) *zero_spectrum = zero;
    return next;
}

template <typename T>
SolveReport<T> solve(const DemixProblem<T>& prob, const SolverConfig& cfg,
                     const std::optional<ConstituentSet<T>>& init) {
    cfg.validate();
    check_problem(prob);
    if (cfg.rank_schedule.increasing) return solve_rank_increasing(prob, cfg);
    if (init) check_set_size(prob, init->size());
    if (cfg.mode == SolverMode::FIHTPsd) {
        bool zero = false;
        HermitianSet<T> x = init ? to_hermitian(*init) : initialize_psd(prob, &zero, cfg.execution);
        return run_iterations<T>(prob, cfg, std::move(x), zero, false);
    }
    ConstituentSet<T> x = init ? *init : initialize(prob, cfg.execution);
    return run_iterations<T>(prob, cfg, std::move(x), false, false);
}

template <typename T>
SolveReport<T> solve_rank_increasing(const DemixProblem<T>& prob, const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.rank_schedule.increasing = true;
    c.validate();
    check_problem(prob);
    DemixProblem<T> rank_one = prob;
    rank_one.r = 1;
    if (c.mode == SolverMode::FIHTPsd) {
        bool zero = false;
        auto x = initialize_psd(rank_one, &zero, c.execution);
        return run_iterations<T>(prob, c, std::move(x), zero, true);
    }
    return run_iterations<T>(prob, c, initialize(rank_one, c.execution), false, true);
}

template <typename T>
bool success_test(const SolveReport<T>& report, const ConstituentSet<T>& truth) {
    return relative_error(report.estimates, truth) <= kSuccessThreshold;
}

template <typename T>
ConvergenceDiagnostics diagnostics(const DemixProblem<T>& prob, const SolveReport<T>& report, double delta2r,
                                   double delta3r) {
    auto check = [](double d, const char* name) {
        if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1)");
    };
    check(delta2r, "delta_2r");
    check(delta3r, "delta_3r");
    ConvergenceDiagnostics diag;
    diag.gamma1_bound = 4.0 * delta3r / (1.0 - delta3r);
    diag.xi_bound = 2.0 * std::sqrt(1.0 + delta3r) / (1.0 - delta2r);
    if (prob.truth && !prob.truth->empty()) {
        double smax = 0.0;
        double smin = std::numeric_limits<double>::infinity();
        for (const auto& f : *prob.truth) {
            smax = std::max(smax, f.S.maxCoeff());
            smin = std::min(smin, f.S.minCoeff());
        }
        const double rs = static_cast<double>(prob.r * (prob.ens ? prob.ens->s() : 1));
        diag.gamma2_bound = 2.0 * (2.0 * delta2r / (1.0 - delta2r) + delta3r / (1.0 - delta2r) +
                                   2.0 * delta3r * std::sqrt(rs) * smax / smin);
    }
    std::vector<double> ratios;
    for (std::size_t l = 0; l + 1 < report.error_trace.size(); ++l)
        if (report.error_trace[l] > 0.0) ratios.push_back(report.error_trace[l + 1] / report.error_trace[l]);
    if (!ratios.empty()) {
        auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
        std::nth_element(ratios.begin(), mid, ratios.end());
        diag.empirical_rate = *mid;
    }
    return diag;
}

template <typename T>
bool psd_invariants_hold(const HermitianFactor<T>& x, Eigen::Index r, double tol) {
    if (x.rank() > r) return false;
    const Matrix<T> z = x.dense();
    if ((z - z.adjoint()).norm() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Matrix<T>> eig(z, Eigen::EigenvaluesOnly);
    const RealVector& vals = eig.eigenvalues();
    if (vals.minCoeff() < -tol) return false;
    const Eigen::Index positive = (vals.array() > tol).count();
    if (positive > r) return false;
    return std::abs(std::real(z.trace()) - 1.0) <= tol;
}

#define DEMIX_INSTANTIATE(T)                                                                                    \
    template double relative_residual(const DemixProblem<T>&, const ConstituentSet<T>&);                        \
    template double relative_error(const ConstituentSet<T>&, const ConstituentSet<T>&);                         \
    template ConstituentSet<T> initialize(const DemixProblem<T>&, Execution);                                   \
    template HermitianSet<T> initialize_psd(const DemixProblem<T>&, bool*, Execution);                          \
    template double step_size(const MeasurementEnsemble<T>&, Eigen::Index, const TangentSpace<T>&,              \
                              const TangentVector<T>&);                                                         \
    template double step_size(const MeasurementEnsemble<T>&, Eigen::Index, const TangentSpace<T>&,              \
                              const Matrix<T>&);                                                                \
    template ConstituentSet<T> iht_step(const DemixProblem<T>&, const ConstituentSet<T>&, Execution,            \
                                        std::vector<double>*);                                                  \
    template ConstituentSet<T> fiht_step(const DemixProblem<T>&, const ConstituentSet<T>&, Execution,           \
                                         std::vector<double>*);                                                 \
    template HermitianSet<T> fiht_psd_step(const DemixProblem<T>&, const HermitianSet<T>&, Execution,           \
                                           std::vector<double>*, bool*);                                        \
    template SolveReport<T> solve(const DemixProblem<T>&, const SolverConfig&,                                  \
                                  const std::optional<ConstituentSet<T>>&);                                     \
    template SolveReport<T> solve_rank_increasing(const DemixProblem<T>&, const SolverConfig&);                 \
    template bool success_test(const SolveReport<T>&, const ConstituentSet<T>&);                                \
    template ConvergenceDiagnostics diagnostics(const DemixProblem<T>&, const SolveReport<T>&, double, double); \
    template bool psd_invariants_hold(const HermitianFactor<T>&, Eigen::Index, double);

DEMIX_INSTANTIATE(double)
DEMIX_INSTANTIATE(cplx)

#undef DEMIX_INSTANTIATE

}  // namespace demix
