#include "demix/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <omp.h>

#include "demix/harness.hpp"

namespace demix {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void write_table(const fs::path& dir, const std::string& name, const CsvTable& table) {
    write_file(dir / name, to_csv(table));
}

int thread_count(const std::optional<int>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("DEMIX_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw SpecError("DEMIX_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank matrix demixing experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string spec_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string solver;
    bool quiet = false;
    bool full = false;
    bool timing = false;
    app.add_option("--spec", spec_path, "JSON experiment spec")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the spec's master seed");
    app.add_option("--threads", threads, "worker threads (overrides DEMIX_THREADS)")->check(CLI::PositiveNumber);
    app.add_option("--solver", solver, "override the solver")->check(CLI::IsMember({"iht", "fiht", "fiht-psd"}));
    app.add_flag("--quiet", quiet, "no progress output");
    app.add_flag("--full", full, "full-scale s grid (1..7) when the spec does not list s");
    app.add_flag("--timing", timing, "record wall times (outputs are then not reproducible)");

    const std::vector<std::pair<std::string, Experiment>> commands = {
        {"solve", Experiment::Solve},       {"phase", Experiment::Phase}, {"noise", Experiment::Noise},
        {"rankseek", Experiment::Rankseek}, {"arip", Experiment::Arip},
    };
    for (const auto& [name, e] : commands) app.add_subcommand(name, "run the " + name + " experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    Experiment experiment = Experiment::Solve;
    for (const auto& [name, e] : commands)
        if (app.got_subcommand(name)) experiment = e;

    std::ostream* log = quiet ? nullptr : &err;
    try {
        const int nthreads = thread_count(threads);
        if (nthreads > 0) omp_set_num_threads(nthreads);

        nlohmann::json doc = read_spec_json(spec_path);
        if (doc.is_object() && doc.contains("experiment") && doc["experiment"].is_string() &&
            experiment_from_string(doc["experiment"].get<std::string>()) != experiment)
            throw SpecError(spec_path + ": spec is for the '" + doc["experiment"].get<std::string>() +
                            "' experiment, not '" + std::string(to_string(experiment)) + "'");
        if (doc.is_object()) {
            doc["experiment"] = std::string(to_string(experiment));
            if (seed) doc["seed"] = *seed;
            if (!solver.empty()) {
                if (doc.contains("solver") && !doc["solver"].is_object())
                    throw SpecError(spec_path + ": field 'solver': expected an object");
                doc["solver"]["mode"] = solver;
            }
        }
        ExperimentSpec spec;
        try {
            spec = parse_spec(doc, {full});
        } catch (const SpecError& e) {
            throw SpecError(spec_path + ": " + e.what());
        }

        const fs::path dir(out_dir);
        fs::create_directories(dir);
        RunOptions opts;
        opts.timing = timing;
        opts.log = log;

        switch (experiment) {
            case Experiment::Phase: {
                const auto cells = run_phase(spec, opts);
                write_table(dir, "phase.csv", phase_table(spec, cells, timing));
                write_file(dir / "phase.plt", phase_plot("phase.csv"));
                break;
            }
            case Experiment::Noise: {
                const auto points = run_noise(spec, opts);
                write_table(dir, "noise.csv", noise_table(points));
                write_file(dir / "noise.plt", noise_plot("noise.csv", points));
                break;
            }
            case Experiment::Rankseek: {
                const auto result = run_rankseek(spec, opts);
                write_table(dir, "rankseek.csv", rankseek_table(result));
                write_table(dir, "rankseek_summary.csv", rankseek_summary_table(result));
                write_file(dir / "rankseek.plt", rankseek_plot("rankseek.csv", result));
                break;
            }
            case Experiment::Arip: {
                const auto rows = run_arip(spec, opts);
                write_table(dir, "arip.csv", arip_table(rows));
                write_file(dir / "arip.plt", arip_plot("arip.csv"));
                break;
            }
            case Experiment::Solve: {
                const auto summary = run_solve(spec, opts);
                write_file(dir / "solve.json", summary.dump(2) + "\n");
                if (!quiet) out << summary.dump(2) << "\n";
                break;
            }
        }
        return 0;
    } catch (const SpecError& e) {
        err << "spec error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace demix
