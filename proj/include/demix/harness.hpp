#pragma once

// Experiment driver: JSON experiment specs, problem generators and the phase,
// noise, rank-seeking, ARIP and single-solve runners. All randomness derives
// from (spec seed, s, m, trial), so output never depends on scheduling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "demix/arip.hpp"
#include "demix/csv.hpp"
#include "demix/solvers.hpp"

namespace demix {

enum class Experiment { Phase, Noise, Rankseek, Arip, Solve };

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

struct Conditioning {
    bool ill = false;
    double kappa = 1000.0;  // ill: singular values evenly spaced on [1, kappa]
};

struct ExperimentSpec {
    int spec_version = 1;
    Experiment experiment = Experiment::Solve;
    EnsembleKind ensemble = EnsembleKind::Gaussian;
    bool complex_field = false;
    Eigen::Index n1 = 0;
    Eigen::Index n2 = 0;
    Eigen::Index r = 1;
    std::vector<Eigen::Index> s_values;
    std::vector<Eigen::Index> m_values;   // explicit list, or
    std::vector<double> m_multipliers;    // m = round(c * dof)
    std::vector<double> sigmas;
    int trials = 10;
    std::uint64_t seed = 0;
    SolverConfig solver;
    Conditioning conditioning;
    std::size_t gaussian_memory_budget = EnsembleOptions{}.gaussian_memory_budget;
};

/// Grid defaults that depend on whether the full-scale grid was requested.
struct SpecDefaults {
    bool full = false;
};

/// Validates and fills defaults. Throws SpecError naming the offending field.
ExperimentSpec parse_spec(const nlohmann::json& doc, const SpecDefaults& defaults = {});
/// Reads a JSON document; syntax errors are reported with line and column.
nlohmann::json read_spec_json(const std::filesystem::path& path);
/// read_spec_json + parse_spec, with the path prefixed to errors.
ExperimentSpec load_spec(const std::filesystem::path& path, const SpecDefaults& defaults = {});
nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// s r (n1 + n2 - r), or s (n1 + n2) for the rank-one convolutive model.
Eigen::Index degrees_of_freedom(const ExperimentSpec& spec, Eigen::Index s);
std::vector<Eigen::Index> measurement_counts(const ExperimentSpec& spec, Eigen::Index s);
std::uint64_t trial_seed(const ExperimentSpec& spec, Eigen::Index s, Eigen::Index m, int trial);

/// Ground truth, ensemble and observation for one trial. The noise vector
/// e = sigma ||y|| w / ||w|| is drawn from a stream that does not depend on
/// sigma, so a sweep over sigma rescales one fixed direction.
template <typename T>
DemixProblem<T> generate_problem(const ExperimentSpec& spec, Eigen::Index s, Eigen::Index m, std::uint64_t seed,
                                 double sigma = 0.0);

/// The configured solver with its fixed- or increasing-rank driver.
template <typename T>
SolveReport<T> run_solver(const DemixProblem<T>& prob, const SolverConfig& cfg);

struct RunOptions {
    bool timing = false;
    std::ostream* log = nullptr;
};

struct PhaseCell {
    Eigen::Index s = 0;
    Eigen::Index m = 0;
    Eigen::Index dof = 0;
    int successes = 0;
    int trials = 0;
    double mean_iterations = 0.0;
    double mean_time = 0.0;
    std::vector<char> success;  // per trial
};

struct NoisePoint {
    Eigen::Index s = 0;
    Eigen::Index m = 0;
    double sigma = 0.0;
    int trials = 0;
    double mean_rel_err = 0.0;
};

struct RankseekTrial {
    int trial = 0;
    std::vector<Eigen::Index> assumed_rank;
    std::vector<double> residual;
    std::vector<int> rank_changes;
    Eigen::Index final_rank = 0;
    bool converged = false;
    int iterations = 0;
};

struct RankseekResult {
    Eigen::Index s = 0;
    Eigen::Index m = 0;
    std::vector<RankseekTrial> trials;
};

std::vector<PhaseCell> run_phase(const ExperimentSpec& spec, const RunOptions& opts = {});
std::vector<NoisePoint> run_noise(const ExperimentSpec& spec, const RunOptions& opts = {});
RankseekResult run_rankseek(const ExperimentSpec& spec, const RunOptions& opts = {});
std::vector<AripRow> run_arip(const ExperimentSpec& spec, const RunOptions& opts = {});
/// One problem (first s, first m, trial 0); JSON summary of the report.
nlohmann::json run_solve(const ExperimentSpec& spec, const RunOptions& opts = {});

CsvTable phase_table(const ExperimentSpec& spec, const std::vector<PhaseCell>& cells, bool timing);
CsvTable noise_table(const std::vector<NoisePoint>& points);
CsvTable rankseek_table(const RankseekResult& result);
CsvTable rankseek_summary_table(const RankseekResult& result);
CsvTable arip_table(const std::vector<AripRow>& rows);

std::string phase_plot(const std::string& csv_name);
std::string noise_plot(const std::string& csv_name, const std::vector<NoisePoint>& points);
std::string rankseek_plot(const std::string& csv_name, const RankseekResult& result);
std::string arip_plot(const std::string& csv_name);

/// Least-squares slope of log10(mean error) against log10(sigma), sigma > 0 only.
double noise_slope(const std::vector<NoisePoint>& points, Eigen::Index m);

}  // namespace demix
