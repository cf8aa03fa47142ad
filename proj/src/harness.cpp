#include "demix/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "demix/random.hpp"

namespace demix {

using nlohmann::json;

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::Phase: return "phase";
        case Experiment::Noise: return "noise";
        case Experiment::Rankseek: return "rankseek";
        case Experiment::Arip: return "arip";
        case Experiment::Solve: return "solve";
    }
    return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
    for (auto e : {Experiment::Phase, Experiment::Noise, Experiment::Rankseek, Experiment::Arip, Experiment::Solve})
        if (to_string(e) == name) return e;
    if (name == "solve-one") return Experiment::Solve;
    throw SpecError("unknown experiment '" + std::string(name) + "'");
}

namespace {

bool power_of_two(Eigen::Index v) { return v > 0 && (v & (v - 1)) == 0; }

bool convolutive(EnsembleKind kind) {
    return kind == EnsembleKind::ConvolutiveGaussian || kind == EnsembleKind::ConvolutiveHadamard;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw SpecError("field '" + field + "': " + what);
}

template <typename V>
V get_as(const json& doc, const std::string& field) {
    try {
        return doc.get<V>();
    } catch (const json::exception&) {
        fail(field, "expected " + std::string(std::is_same_v<V, std::string> ? "a string"
                                              : std::is_floating_point_v<V> ? "a number"
                                              : std::is_same_v<V, bool>     ? "a boolean"
                                                                            : "an integer") +
                        ", got " + doc.dump());
    }
}

template <typename V>
std::vector<V> get_list(const json& doc, const std::string& field) {
    if (!doc.is_array()) fail(field, "expected an array");
    std::vector<V> out;
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(get_as<V>(doc[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Eigen::Index get_index(const json& doc, const std::string& field, Eigen::Index min_value) {
    if (!doc.is_number_integer()) fail(field, "expected an integer, got " + doc.dump());
    const auto v = doc.get<std::int64_t>();
    if (v < min_value) fail(field, "must be >= " + std::to_string(min_value));
    return static_cast<Eigen::Index>(v);
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw SpecError("unknown field '" + where + key + "'");
}

SolverConfig parse_solver(const json& doc, SolverConfig cfg) {
    if (!doc.is_object()) fail("solver", "expected an object");
    reject_unknown(doc,
                   {"mode", "max_iters", "residual_tol", "stagnation_window", "stagnation_ratio", "rank_schedule",
                    "parallel", "check_invariants"},
                   "solver.");
    if (doc.contains("mode")) cfg.mode = solver_mode_from_string(get_as<std::string>(doc["mode"], "solver.mode"));
    if (doc.contains("max_iters"))
        cfg.max_iters = static_cast<int>(get_index(doc["max_iters"], "solver.max_iters", 1));
    if (doc.contains("residual_tol")) cfg.residual_tol = get_as<double>(doc["residual_tol"], "solver.residual_tol");
    if (doc.contains("stagnation_window"))
        cfg.stagnation_window = static_cast<int>(get_index(doc["stagnation_window"], "solver.stagnation_window", 0));
    if (doc.contains("stagnation_ratio"))
        cfg.stagnation_ratio = get_as<double>(doc["stagnation_ratio"], "solver.stagnation_ratio");
    if (doc.contains("parallel"))
        cfg.execution = get_as<bool>(doc["parallel"], "solver.parallel") ? Execution::Parallel : Execution::Serial;
    if (doc.contains("check_invariants"))
        cfg.check_invariants = get_as<bool>(doc["check_invariants"], "solver.check_invariants");
    if (doc.contains("rank_schedule")) {
        const json& rs = doc["rank_schedule"];
        if (!rs.is_object()) fail("solver.rank_schedule", "expected an object");
        reject_unknown(rs, {"stall_window", "stall_ratio", "r_max"}, "solver.rank_schedule.");
        if (rs.contains("stall_window"))
            cfg.rank_schedule.stall_window =
                static_cast<int>(get_index(rs["stall_window"], "solver.rank_schedule.stall_window", 1));
        if (rs.contains("stall_ratio"))
            cfg.rank_schedule.stall_ratio = get_as<double>(rs["stall_ratio"], "solver.rank_schedule.stall_ratio");
        if (rs.contains("r_max")) cfg.rank_schedule.r_max = get_index(rs["r_max"], "solver.rank_schedule.r_max", 0);
    }
    return cfg;
}

}  // namespace

ExperimentSpec parse_spec(const json& doc, const SpecDefaults& defaults) {
    if (!doc.is_object()) throw SpecError("spec must be a JSON object");
    reject_unknown(doc,
                   {"spec_version", "experiment", "ensemble", "field", "n", "n1", "n2", "q", "r", "s", "m", "sigma",
                    "trials", "seed", "solver", "conditioning", "gaussian_memory_budget_mb"},
                   "");
    ExperimentSpec spec;
    if (!doc.contains("spec_version")) fail("spec_version", "missing (expected 1)");
    spec.spec_version = static_cast<int>(get_index(doc["spec_version"], "spec_version", 1));
    if (spec.spec_version != 1) fail("spec_version", "unsupported version " + std::to_string(spec.spec_version));

    if (doc.contains("experiment"))
        spec.experiment = experiment_from_string(get_as<std::string>(doc["experiment"], "experiment"));
    if (doc.contains("ensemble")) {
        try {
            spec.ensemble = ensemble_kind_from_string(get_as<std::string>(doc["ensemble"], "ensemble"));
        } catch (const EnsembleError& e) {
            fail("ensemble", e.what());
        }
        if (spec.ensemble == EnsembleKind::Explicit) fail("ensemble", "explicit ensembles cannot be generated");
    }
    spec.complex_field = spec.ensemble != EnsembleKind::Gaussian;
    if (doc.contains("field")) {
        const auto field = get_as<std::string>(doc["field"], "field");
        if (field != "real" && field != "complex") fail("field", "expected 'real' or 'complex'");
        spec.complex_field = field == "complex";
        if (!spec.complex_field && spec.ensemble != EnsembleKind::Gaussian)
            fail("field", std::string(to_string(spec.ensemble)) + " ensembles are complex");
    }

    const bool has_q = doc.contains("q");
    const bool has_n = doc.contains("n");
    const bool has_pair = doc.contains("n1") || doc.contains("n2");
    if (int(has_q) + int(has_n) + int(has_pair) != 1) fail("n", "give exactly one of n, (n1, n2) or q");
    if (has_q) {
        const Eigen::Index q = get_index(doc["q"], "q", 1);
        if (q > 20) fail("q", "at most 20 qubits");
        spec.n1 = spec.n2 = Eigen::Index{1} << q;
    } else if (has_n) {
        spec.n1 = spec.n2 = get_index(doc["n"], "n", 1);
    } else {
        if (!doc.contains("n1") || !doc.contains("n2")) fail("n1", "n1 and n2 go together");
        spec.n1 = get_index(doc["n1"], "n1", 1);
        spec.n2 = get_index(doc["n2"], "n2", 1);
    }
    if (doc.contains("r")) spec.r = get_index(doc["r"], "r", 1);
    if (spec.r > std::min(spec.n1, spec.n2)) fail("r", "exceeds min(n1, n2)");

    if (spec.ensemble == EnsembleKind::Pauli && (spec.n1 != spec.n2 || !power_of_two(spec.n1) || spec.n1 < 2))
        fail("n", "Pauli ensembles need n = 2^q with q >= 1");
    if (convolutive(spec.ensemble) && spec.r != 1) fail("r", "the convolutive model is rank one");

    if (doc.contains("s")) {
        const json& s = doc["s"];
        if (s.is_object()) {
            reject_unknown(s, {"from", "to"}, "s.");
            if (!s.contains("from") || !s.contains("to")) fail("s", "ranges need 'from' and 'to'");
            const Eigen::Index from = get_index(s["from"], "s.from", 1);
            const Eigen::Index to = get_index(s["to"], "s.to", from);
            for (Eigen::Index v = from; v <= to; ++v) spec.s_values.push_back(v);
        } else {
            if (!s.is_array()) fail("s", "expected an array or {from, to}");
            for (std::size_t i = 0; i < s.size(); ++i)
                spec.s_values.push_back(get_index(s[i], "s[" + std::to_string(i) + "]", 1));
        }
        if (spec.s_values.empty()) fail("s", "empty");
    } else {
        for (Eigen::Index v = 1; v <= (defaults.full ? 7 : 4); ++v) spec.s_values.push_back(v);
    }

    if (doc.contains("m")) {
        const json& m = doc["m"];
        if (m.is_array()) {
            for (std::size_t i = 0; i < m.size(); ++i)
                spec.m_values.push_back(get_index(m[i], "m[" + std::to_string(i) + "]", 1));
        } else if (m.is_object()) {
            reject_unknown(m, {"values", "multipliers"}, "m.");
            if (m.contains("values") == m.contains("multipliers")) fail("m", "give exactly one of values or multipliers");
            if (m.contains("values")) {
                const json& values = m["values"];
                if (!values.is_array()) fail("m.values", "expected an array");
                for (std::size_t i = 0; i < values.size(); ++i)
                    spec.m_values.push_back(get_index(values[i], "m.values[" + std::to_string(i) + "]", 1));
            } else {
                spec.m_multipliers = get_list<double>(m["multipliers"], "m.multipliers");
                for (double c : spec.m_multipliers)
                    if (!(c > 0.0)) fail("m.multipliers", "must be positive");
            }
        } else {
            fail("m", "expected an array or an object");
        }
        if (spec.m_values.empty() && spec.m_multipliers.empty()) fail("m", "empty");
    } else {
        for (int i = 0; i <= 8; ++i) spec.m_multipliers.push_back(1.0 + 0.5 * i);
    }

    if (doc.contains("sigma")) {
        spec.sigmas = get_list<double>(doc["sigma"], "sigma");
        for (double v : spec.sigmas)
            if (!(v >= 0.0) || !std::isfinite(v)) fail("sigma", "entries must be finite and >= 0");
    } else if (spec.experiment == Experiment::Noise) {
        for (int i = 0; i <= 8; ++i) spec.sigmas.push_back(std::pow(10.0, -4.0 + 0.5 * i));
    } else {
        spec.sigmas = {0.0};
    }
    if (spec.sigmas.empty()) fail("sigma", "empty");

    if (doc.contains("trials")) spec.trials = static_cast<int>(get_index(doc["trials"], "trials", 1));
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))
            fail("seed", "expected a non-negative integer");
        spec.seed = doc["seed"].get<std::uint64_t>();
    }

    if (doc.contains("conditioning")) {
        const json& c = doc["conditioning"];
        std::string type;
        if (c.is_string()) {
            type = c.get<std::string>();
        } else if (c.is_object()) {
            reject_unknown(c, {"type", "kappa"}, "conditioning.");
            if (!c.contains("type")) fail("conditioning", "missing 'type'");
            type = get_as<std::string>(c["type"], "conditioning.type");
            if (c.contains("kappa")) spec.conditioning.kappa = get_as<double>(c["kappa"], "conditioning.kappa");
        } else {
            fail("conditioning", "expected 'well', 'ill' or {type, kappa}");
        }
        if (type != "well" && type != "ill") fail("conditioning.type", "expected 'well' or 'ill'");
        spec.conditioning.ill = type == "ill";
        if (!(spec.conditioning.kappa >= 1.0)) fail("conditioning.kappa", "must be >= 1");
        if (spec.conditioning.ill && spec.ensemble != EnsembleKind::Gaussian)
            fail("conditioning", "ill-conditioned truth applies to Gaussian ensembles");
    }
    if (doc.contains("gaussian_memory_budget_mb"))
        spec.gaussian_memory_budget =
            static_cast<std::size_t>(get_index(doc["gaussian_memory_budget_mb"], "gaussian_memory_budget_mb", 0)) << 20;

    spec.solver.mode = spec.ensemble == EnsembleKind::Pauli ? SolverMode::FIHTPsd : SolverMode::FIHT;
    if (spec.experiment == Experiment::Noise) spec.solver.stagnation_window = 10;
    if (doc.contains("solver")) spec.solver = parse_solver(doc["solver"], spec.solver);
    spec.solver.rank_schedule.increasing = spec.experiment == Experiment::Rankseek;
    if (spec.solver.mode == SolverMode::FIHTPsd && spec.ensemble != EnsembleKind::Pauli)
        fail("solver.mode", "fiht-psd needs a Pauli ensemble");
    try {
        spec.solver.validate();
    } catch (const SpecError& e) {
        fail("solver", e.what());
    }
    const Eigen::Index largest = spec.solver.rank_schedule.increasing
                                     ? std::max(spec.r, spec.solver.rank_schedule.r_max)
                                     : spec.r;
    if (spec.solver.mode != SolverMode::IHT && 2 * largest > std::min(spec.n1, spec.n2))
        fail("r", "FIHT needs 2r <= min(n1, n2)");

    for (Eigen::Index s : spec.s_values) {
        for (Eigen::Index m : measurement_counts(spec, s)) {
            if (m < 1) fail("m", "rule gives m = " + std::to_string(m) + " for s = " + std::to_string(s));
            if (spec.ensemble == EnsembleKind::ConvolutiveHadamard && !power_of_two(m))
                fail("m", "Hadamard encoders need m a power of two; got " + std::to_string(m) + " for s = " +
                              std::to_string(s) + " (list m explicitly)");
            if (convolutive(spec.ensemble) && (spec.n1 > m || spec.n2 > m))
                fail("m", "convolutive ensembles need n1, n2 <= m; got m = " + std::to_string(m));
        }
    }
    if (spec.experiment == Experiment::Arip && spec.n1 != spec.n2) fail("n", "ARIP grids use square n x n constituents");
    return spec;
}

json read_spec_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open spec file '" + path.string() + "'");
    const std::string text(std::istreambuf_iterator<char>(in), {});
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SpecError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

ExperimentSpec load_spec(const std::filesystem::path& path, const SpecDefaults& defaults) {
    const json doc = read_spec_json(path);
    try {
        return parse_spec(doc, defaults);
    } catch (const SpecError& e) {
        throw SpecError(path.string() + ": " + e.what());
    }
}

json spec_to_json(const ExperimentSpec& spec) {
    json doc;
    doc["spec_version"] = spec.spec_version;
    doc["experiment"] = std::string(to_string(spec.experiment));
    doc["ensemble"] = std::string(to_string(spec.ensemble));
    doc["field"] = spec.complex_field ? "complex" : "real";
    doc["n1"] = spec.n1;
    doc["n2"] = spec.n2;
    doc["r"] = spec.r;
    doc["s"] = spec.s_values;
    if (!spec.m_values.empty()) doc["m"] = {{"values", spec.m_values}};
    else doc["m"] = {{"multipliers", spec.m_multipliers}};
    doc["sigma"] = spec.sigmas;
    doc["trials"] = spec.trials;
    doc["seed"] = spec.seed;
    doc["conditioning"] = {{"type", spec.conditioning.ill ? "ill" : "well"}, {"kappa", spec.conditioning.kappa}};
    doc["gaussian_memory_budget_mb"] = spec.gaussian_memory_budget >> 20;
    json solver;
    solver["mode"] = std::string(to_string(spec.solver.mode));
    solver["max_iters"] = spec.solver.max_iters;
    solver["residual_tol"] = spec.solver.residual_tol;
    solver["stagnation_window"] = spec.solver.stagnation_window;
    solver["stagnation_ratio"] = spec.solver.stagnation_ratio;
    solver["check_invariants"] = spec.solver.check_invariants;
    solver["rank_schedule"] = {{"stall_window", spec.solver.rank_schedule.stall_window},
                               {"stall_ratio", spec.solver.rank_schedule.stall_ratio},
                               {"r_max", spec.solver.rank_schedule.r_max}};
    doc["solver"] = solver;
    return doc;
}

Eigen::Index degrees_of_freedom(const ExperimentSpec& spec, Eigen::Index s) {
    if (convolutive(spec.ensemble)) return s * (spec.n1 + spec.n2);
    return s * spec.r * (spec.n1 + spec.n2 - spec.r);
}

std::vector<Eigen::Index> measurement_counts(const ExperimentSpec& spec, Eigen::Index s) {
    if (!spec.m_values.empty()) return spec.m_values;
    std::vector<Eigen::Index> out;
    const double dof = static_cast<double>(degrees_of_freedom(spec, s));
    for (double c : spec.m_multipliers) out.push_back(static_cast<Eigen::Index>(std::llround(c * dof)));
    return out;
}

std::uint64_t trial_seed(const ExperimentSpec& spec, Eigen::Index s, Eigen::Index m, int trial) {
    return derive_seed(spec.seed, StreamTag::Trial,
                       {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)});
}

namespace {

template <typename T>
LowRankFactor<T> draw_truth(const ExperimentSpec& spec, std::mt19937_64& rng) {
    const Eigen::Index r = spec.r;
    switch (spec.ensemble) {
        case EnsembleKind::Pauli: {
            const Matrix<T> u = random_orthonormal<T>(rng, spec.n1, r);
            return {u, RealVector::Constant(r, 1.0 / static_cast<double>(r)), u};
        }
        case EnsembleKind::ConvolutiveGaussian:
        case EnsembleKind::ConvolutiveHadamard: {
            const Vector<T> x = gaussian_matrix<T>(rng, spec.n1, 1);
            const Vector<T> h = gaussian_matrix<T>(rng, spec.n2, 1);
            // x h^T = (x/|x|) |x||h| (conj(h)/|h|)^H
            LowRankFactor<T> f;
            f.U = x / x.norm();
            f.S = RealVector::Constant(1, x.norm() * h.norm());
            f.V = h.conjugate() / h.norm();
            return f;
        }
        default: break;
    }
    if (spec.conditioning.ill) {
        LowRankFactor<T> f;
        f.U = random_orthonormal<T>(rng, spec.n1, r);
        f.V = random_orthonormal<T>(rng, spec.n2, r);
        f.S.resize(r);
        for (Eigen::Index i = 0; i < r; ++i)
            f.S(i) = r == 1 ? 1.0
                            : 1.0 + (spec.conditioning.kappa - 1.0) * static_cast<double>(r - 1 - i) /
                                        static_cast<double>(r - 1);
        return f;
    }
    const Matrix<T> left = gaussian_matrix<T>(rng, spec.n1, r);
    const Matrix<T> right = gaussian_matrix<T>(rng, spec.n2, r);
    return truncated_svd<T>(left * right.adjoint(), r);
}

template <typename T>
void add_noise(DemixProblem<T>& prob, EnsembleKind kind, double sigma, std::uint64_t seed) {
    if (sigma == 0.0) return;
    auto rng = make_stream(seed, StreamTag::Noise);
    Vector<T> w;
    if (kind == EnsembleKind::Pauli) w = gaussian_matrix<double>(rng, prob.y.size(), 1).template cast<T>();
    else w = gaussian_matrix<T>(rng, prob.y.size(), 1);
    NoiseRecord<T> noise;
    noise.sigma = sigma;
    noise.e = (sigma * prob.y.norm() / w.norm()) * w;
    prob.y += noise.e;
    prob.noise = std::move(noise);
}

template <typename T>
DemixProblem<T> noiseless_problem(const ExperimentSpec& spec, Eigen::Index s, Eigen::Index m, std::uint64_t seed) {
    EnsembleOptions options;
    options.gaussian_memory_budget = spec.gaussian_memory_budget;
    DemixProblem<T> prob;
    prob.ens = std::make_shared<const MeasurementEnsemble<T>>(
        MeasurementEnsemble<T>::generate(spec.ensemble, s, m, {spec.n1, spec.n2}, seed, options));
    prob.r = spec.r;
    ConstituentSet<T> truth;
    for (Eigen::Index k = 0; k < s; ++k) {
        auto rng = make_stream(seed, StreamTag::Truth, {static_cast<std::uint64_t>(k)});
        truth.push_back(draw_truth<T>(spec, rng));
    }
    prob.y = mixed_forward(*prob.ens, truth);
    prob.truth = std::move(truth);
    return prob;
}

// Runs f with the scalar type the spec asks for.
template <typename F>
decltype(auto) with_field(const ExperimentSpec& spec, F&& f) {
    if (spec.complex_field) return f(cplx{});
    return f(double{});
}

// Errors that mean "this trial failed" rather than "the run is broken".
bool trial_failure(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const NumericalError&) {
        return true;
    } catch (const DegenerateEnsembleError&) {
        return true;
    } catch (...) {
        return false;
    }
}

template <typename Job>
void run_jobs(std::size_t count, Job&& job, std::ostream* log) {
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < count; ++i) {
        try {
            job(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!errors[i]) continue;
        if (!trial_failure(errors[i])) std::rethrow_exception(errors[i]);
        if (log) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                *log << "job " << i << " failed: " << e.what() << "\n";
            }
        }
    }
}

}  // namespace

template <typename T>
DemixProblem<T> generate_problem(const ExperimentSpec& spec, Eigen::Index s, Eigen::Index m, std::uint64_t seed,
                                 double sigma) {
    if (spec.complex_field != is_complex_v<T>)
        throw SpecError("generate_problem: scalar type does not match the spec's field");
    auto prob = noiseless_problem<T>(spec, s, m, seed);
    add_noise(prob, spec.ensemble, sigma, seed);
    return prob;
}

template <typename T>
SolveReport<T> run_solver(const DemixProblem<T>& prob, const SolverConfig& cfg) {
    if (cfg.rank_schedule.increasing) return solve_rank_increasing(prob, cfg);
    return solve(prob, cfg);
}

std::vector<PhaseCell> run_phase(const ExperimentSpec& spec, const RunOptions& opts) {
    std::vector<PhaseCell> cells;
    for (Eigen::Index s : spec.s_values)
        for (Eigen::Index m : measurement_counts(spec, s)) {
            PhaseCell cell;
            cell.s = s;
            cell.m = m;
            cell.dof = degrees_of_freedom(spec, s);
            cell.trials = spec.trials;
            cell.success.assign(static_cast<std::size_t>(spec.trials), 0);
            cells.push_back(std::move(cell));
        }
    const auto trials = static_cast<std::size_t>(spec.trials);
    std::vector<int> iterations(cells.size() * trials, 0);
    std::vector<double> times(cells.size() * trials, 0.0);
    run_jobs(
        cells.size() * trials,
        [&](std::size_t job) {
            auto& cell = cells[job / trials];
            const int t = static_cast<int>(job % trials);
            with_field(spec, [&](auto scalar) {
                using T = decltype(scalar);
                const auto prob = generate_problem<T>(spec, cell.s, cell.m, trial_seed(spec, cell.s, cell.m, t));
                const auto rep = run_solver(prob, spec.solver);
                cell.success[static_cast<std::size_t>(t)] = success_test(rep, *prob.truth) ? 1 : 0;
                iterations[job] = rep.iterations;
                times[job] = rep.wall_time;
            });
        },
        opts.log);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& cell = cells[c];
        double it = 0.0;
        double tm = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            cell.successes += cell.success[t];
            it += iterations[c * trials + t];
            tm += times[c * trials + t];
        }
        cell.mean_iterations = it / static_cast<double>(trials);
        cell.mean_time = tm / static_cast<double>(trials);
        if (opts.log)
            *opts.log << "phase s=" << cell.s << " m=" << cell.m << ": " << cell.successes << "/" << cell.trials
                      << "\n";
    }
    return cells;
}

std::vector<NoisePoint> run_noise(const ExperimentSpec& spec, const RunOptions& opts) {
    const Eigen::Index s = spec.s_values.front();
    const auto ms = measurement_counts(spec, s);
    const auto trials = static_cast<std::size_t>(spec.trials);
    const std::size_t nsig = spec.sigmas.size();
    // errors[(mi * trials + t) * nsig + si]
    std::vector<double> errors(ms.size() * trials * nsig, std::numeric_limits<double>::quiet_NaN());
    run_jobs(
        ms.size() * trials,
        [&](std::size_t job) {
            const Eigen::Index m = ms[job / trials];
            const int t = static_cast<int>(job % trials);
            with_field(spec, [&](auto scalar) {
                using T = decltype(scalar);
                const std::uint64_t seed = trial_seed(spec, s, m, t);
                const auto clean = noiseless_problem<T>(spec, s, m, seed);
                for (std::size_t si = 0; si < nsig; ++si) {
                    auto prob = clean;
                    add_noise(prob, spec.ensemble, spec.sigmas[si], seed);
                    const auto rep = run_solver(prob, spec.solver);
                    errors[job * nsig + si] = *rep.relative_error;
                }
            });
        },
        opts.log);
    std::vector<NoisePoint> points;
    for (std::size_t mi = 0; mi < ms.size(); ++mi)
        for (std::size_t si = 0; si < nsig; ++si) {
            NoisePoint pt;
            pt.s = s;
            pt.m = ms[mi];
            pt.sigma = spec.sigmas[si];
            double sum = 0.0;
            for (std::size_t t = 0; t < trials; ++t) {
                const double e = errors[(mi * trials + t) * nsig + si];
                if (std::isnan(e)) continue;
                sum += e;
                ++pt.trials;
            }
            pt.mean_rel_err = pt.trials ? sum / pt.trials : std::numeric_limits<double>::quiet_NaN();
            if (opts.log)
                *opts.log << "noise m=" << pt.m << " sigma=" << pt.sigma << ": mean error " << pt.mean_rel_err
                          << "\n";
            points.push_back(pt);
        }
    return points;
}

RankseekResult run_rankseek(const ExperimentSpec& spec, const RunOptions& opts) {
    RankseekResult result;
    result.s = spec.s_values.front();
    result.m = measurement_counts(spec, result.s).front();
    result.trials.resize(static_cast<std::size_t>(spec.trials));
    run_jobs(
        result.trials.size(),
        [&](std::size_t t) {
            with_field(spec, [&](auto scalar) {
                using T = decltype(scalar);
                const double sigma = spec.sigmas.front();
                const auto prob = generate_problem<T>(
                    spec, result.s, result.m, trial_seed(spec, result.s, result.m, static_cast<int>(t)), sigma);
                const auto rep = solve_rank_increasing(prob, spec.solver);
                auto& out = result.trials[t];
                out.trial = static_cast<int>(t);
                out.assumed_rank = rep.rank_trace;
                out.residual = rep.residual_trace;
                out.rank_changes = rep.rank_changes;
                out.final_rank = rep.rank_trace.back();
                out.converged = rep.converged;
                out.iterations = rep.iterations;
            });
        },
        opts.log);
    if (opts.log)
        for (const auto& tr : result.trials)
            *opts.log << "rankseek trial " << tr.trial << ": rank " << tr.final_rank
                      << (tr.converged ? " converged" : " not converged") << "\n";
    return result;
}

std::vector<AripRow> run_arip(const ExperimentSpec& spec, const RunOptions& opts) {
    std::vector<AripGridPoint> grid;
    for (Eigen::Index s : spec.s_values)
        for (Eigen::Index m : measurement_counts(spec, s)) grid.push_back({m, spec.n1, spec.r, s});
    auto rows = with_field(spec, [&](auto scalar) {
        using T = decltype(scalar);
        return arip_scaling_report<T>(spec.ensemble, grid, spec.trials, spec.seed);
    });
    if (opts.log)
        for (const auto& row : rows)
            *opts.log << "arip s=" << row.point.s << " m=" << row.point.m << ": delta_hat " << row.estimate.delta_hat
                      << "\n";
    return rows;
}

json run_solve(const ExperimentSpec& spec, const RunOptions& opts) {
    const Eigen::Index s = spec.s_values.front();
    const Eigen::Index m = measurement_counts(spec, s).front();
    return with_field(spec, [&](auto scalar) {
        using T = decltype(scalar);
        const auto prob = generate_problem<T>(spec, s, m, trial_seed(spec, s, m, 0), spec.sigmas.front());
        const auto rep = run_solver(prob, spec.solver);
        json out;
        out["ensemble"] = prob.ens->descriptor();
        out["s"] = s;
        out["m"] = m;
        out["r"] = spec.r;
        out["sigma"] = spec.sigmas.front();
        out["solver"] = std::string(to_string(spec.solver.mode));
        out["converged"] = rep.converged;
        out["iterations"] = rep.iterations;
        out["stop_reason"] = rep.stop_reason;
        out["relative_residual"] = rep.residual_trace.back();
        out["relative_error"] = *rep.relative_error;
        out["success"] = success_test(rep, *prob.truth);
        out["constituent_errors"] = rep.constituent_errors;
        out["zero_spectrum"] = rep.zero_spectrum;
        out["final_rank"] = rep.rank_trace.back();
        out["residual_trace"] = rep.residual_trace;
        if (!rep.error_trace.empty()) out["error_trace"] = rep.error_trace;
        if (opts.timing) out["wall_time"] = rep.wall_time;
        if (opts.log)
            *opts.log << "solve: " << (rep.converged ? "converged" : "not converged") << " after " << rep.iterations
                      << " iterations, relative error " << *rep.relative_error << "\n";
        return out;
    });
}

CsvTable phase_table(const ExperimentSpec& spec, const std::vector<PhaseCell>& cells, bool timing) {
    CsvTable table;
    table.notes.push_back(convolutive(spec.ensemble) ? "dof = s*(n1+n2) (rank-one convolutive model)"
                                                     : "dof = s*r*(n1+n2-r)");
    table.notes.push_back("success: stacked relative error <= 1e-2");
    if (!timing) table.notes.push_back("mean_time left empty; pass --timing to record it");
    table.header = {"s", "m", "m_over_dof", "successes", "trials", "mean_iterations", "mean_time"};
    for (const auto& c : cells)
        table.rows.push_back({std::to_string(c.s), std::to_string(c.m),
                              format_number(static_cast<double>(c.m) / static_cast<double>(c.dof)),
                              std::to_string(c.successes), std::to_string(c.trials), format_number(c.mean_iterations),
                              timing ? format_number(c.mean_time) : ""});
    return table;
}

CsvTable noise_table(const std::vector<NoisePoint>& points) {
    CsvTable table;
    table.notes.push_back("snr_db = -20*log10(sigma), with noise e = sigma*||y||*w/||w||");
    table.notes.push_back("mean_rel_err_db = 20*log10(mean stacked relative error over trials)");
    table.header = {"m", "sigma", "snr_db", "mean_rel_err_db"};
    for (const auto& p : points)
        table.rows.push_back({std::to_string(p.m), format_number(p.sigma), format_number(-20.0 * std::log10(p.sigma)),
                              format_number(20.0 * std::log10(p.mean_rel_err))});
    return table;
}

CsvTable rankseek_table(const RankseekResult& result) {
    CsvTable table;
    table.notes.push_back("s = " + std::to_string(result.s) + ", m = " + std::to_string(result.m));
    table.header = {"trial", "iteration", "assumed_rank", "relative_residual"};
    for (const auto& tr : result.trials)
        for (std::size_t l = 0; l < tr.residual.size(); ++l)
            table.rows.push_back({std::to_string(tr.trial), std::to_string(l), std::to_string(tr.assumed_rank[l]),
                                  format_number(tr.residual[l])});
    return table;
}

CsvTable rankseek_summary_table(const RankseekResult& result) {
    CsvTable table;
    table.notes.push_back("rank_changes lists the iterations where the assumed rank grew, separated by ';'");
    table.header = {"trial", "final_rank", "converged", "iterations", "final_residual", "rank_changes"};
    for (const auto& tr : result.trials) {
        std::string changes;
        for (std::size_t i = 0; i < tr.rank_changes.size(); ++i)
            changes += (i ? ";" : "") + std::to_string(tr.rank_changes[i]);
        table.rows.push_back({std::to_string(tr.trial), std::to_string(tr.final_rank), tr.converged ? "1" : "0",
                              std::to_string(tr.iterations), format_number(tr.residual.back()), changes});
    }
    return table;
}

CsvTable arip_table(const std::vector<AripRow>& rows) {
    CsvTable table;
    table.notes.push_back("delta_hat = max(1 - ratio_min, ratio_max - 1); a sampled lower bound on delta_r");
    table.header = {"kind", "n", "r", "s", "m", "trials", "ratio_min", "ratio_max", "delta_hat", "q01", "q50", "q99",
                    "seed"};
    for (const auto& row : rows) {
        const auto& e = row.estimate;
        table.rows.push_back({std::string(to_string(row.kind)), std::to_string(row.point.n),
                              std::to_string(row.point.r), std::to_string(row.point.s), std::to_string(row.point.m),
                              std::to_string(e.trials), format_number(e.ratio_min), format_number(e.ratio_max),
                              format_number(e.delta_hat), format_number(e.q01), format_number(e.q50),
                              format_number(e.q99), std::to_string(row.seed)});
    }
    return table;
}

namespace {

std::string plot_preamble(const std::string& csv_name, const std::string& png) {
    std::ostringstream out;
    out << "# gnuplot script; run from the directory holding " << csv_name << "\n"
        << "set datafile separator ','\n"
        << "set terminal pngcairo size 900,650\n"
        << "set output '" << png << "'\n";
    return out.str();
}

}  // namespace

std::string phase_plot(const std::string& csv_name) {
    std::ostringstream out;
    out << plot_preamble(csv_name, "phase.png")
        << "set title 'Empirical success fraction'\n"
        << "set xlabel 'm / dof'\n"
        << "set ylabel 's'\n"
        << "set cbrange [0:1]\n"
        << "set palette gray\n"
        << "set key autotitle columnhead\n"
        << "plot '" << csv_name << "' using 3:1:($4/$5) with points pointtype 5 pointsize 3 palette notitle\n";
    return out.str();
}

std::string noise_plot(const std::string& csv_name, const std::vector<NoisePoint>& points) {
    std::vector<Eigen::Index> ms;
    for (const auto& p : points)
        if (std::find(ms.begin(), ms.end(), p.m) == ms.end()) ms.push_back(p.m);
    std::ostringstream out;
    out << plot_preamble(csv_name, "noise.png")
        << "set title 'Relative reconstruction error against SNR'\n"
        << "set xlabel 'SNR (dB)'\n"
        << "set ylabel 'relative error (dB)'\n"
        << "set key autotitle columnhead\n"
        << "plot";
    for (std::size_t i = 0; i < ms.size(); ++i)
        out << (i ? ", \\\n    " : " ") << "'" << csv_name << "' using ($1 == " << ms[i] << " ? $3 : 1/0):4"
            << " with linespoints title 'm = " << ms[i] << "'";
    out << "\n";
    return out.str();
}

std::string rankseek_plot(const std::string& csv_name, const RankseekResult& result) {
    std::ostringstream out;
    out << plot_preamble(csv_name, "rankseek.png")
        << "set title 'Rank-increasing FIHT'\n"
        << "set xlabel 'iteration'\n"
        << "set ylabel 'relative residual'\n"
        << "set logscale y\n"
        << "set y2label 'assumed rank'\n"
        << "set y2tics\n"
        << "set key autotitle columnhead\n"
        << "plot";
    for (std::size_t i = 0; i < result.trials.size(); ++i)
        out << (i ? ", \\\n    " : " ") << "'" << csv_name << "' using ($1 == " << i << " ? $2 : 1/0):4"
            << " with lines title 'trial " << i << "'";
    if (!result.trials.empty())
        out << ", \\\n    '" << csv_name << "' using ($1 == 0 ? $2 : 1/0):3 axes x1y2 with steps title 'rank (trial 0)'";
    out << "\n";
    return out.str();
}

std::string arip_plot(const std::string& csv_name) {
    std::ostringstream out;
    out << plot_preamble(csv_name, "arip.png")
        << "set title 'Sampled ARIP constant'\n"
        << "set xlabel 'm'\n"
        << "set ylabel 'delta_hat'\n"
        << "set logscale x\n"
        << "set key autotitle columnhead\n"
        << "plot '" << csv_name << "' using 5:9 with linespoints title 'delta_hat', \\\n"
        << "    '' using 5:($12 - 1) with lines title 'q99 - 1', \\\n"
        << "    '' using 5:(1 - $10) with lines title '1 - q01'\n";
    return out.str();
}

double noise_slope(const std::vector<NoisePoint>& points, Eigen::Index m) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : points)
        if (p.m == m && p.sigma > 0.0 && p.mean_rel_err > 0.0)
            xy.emplace_back(std::log10(p.sigma), std::log10(p.mean_rel_err));
    if (xy.size() < 2) throw DimensionError("noise_slope: need two positive sigma values");
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : xy) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(xy.size());
    my /= static_cast<double>(xy.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [x, y] : xy) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    return sxy / sxx;
}

template DemixProblem<double> generate_problem(const ExperimentSpec&, Eigen::Index, Eigen::Index, std::uint64_t,
                                               double);
template DemixProblem<cplx> generate_problem(const ExperimentSpec&, Eigen::Index, Eigen::Index, std::uint64_t,
                                             double);
template SolveReport<double> run_solver(const DemixProblem<double>&, const SolverConfig&);
template SolveReport<cplx> run_solver(const DemixProblem<cplx>&, const SolverConfig&);

}  // namespace demix
