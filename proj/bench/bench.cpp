// Serial vs OpenMP timings for the per-constituent solver steps and ARIP
// sampling, plus the core-SVD threshold against a dense truncated SVD.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "demix/arip.hpp"
#include "demix/harness.hpp"
#include "demix/matrix_core.hpp"
#include "demix/random.hpp"

using namespace demix;

namespace {

double seconds_per_call(int repeats, const std::function<void()>& body) {
    body();  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / repeats;
}

template <typename T>
bool same(const ConstituentSet<T>& a, const ConstituentSet<T>& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k].U != b[k].U || a[k].S != b[k].S || a[k].V != b[k].V) return false;
    return true;
}

void bench_steps(Eigen::Index n, Eigen::Index r, Eigen::Index s, int repeats) {
    nlohmann::json doc{{"spec_version", 1}, {"n", n}, {"r", r}, {"s", {s}}, {"m", {{"multipliers", {3.5}}}},
                       {"seed", 1}};
    const auto spec = parse_spec(doc);
    const Eigen::Index m = measurement_counts(spec, s).front();
    const auto prob = generate_problem<double>(spec, s, m, 7);
    const auto x = initialize(prob, Execution::Serial);

    ConstituentSet<double> serial;
    ConstituentSet<double> parallel;
    const double iht_s = seconds_per_call(repeats, [&] { serial = iht_step(prob, x, Execution::Serial); });
    const double iht_p = seconds_per_call(repeats, [&] { parallel = iht_step(prob, x, Execution::Parallel); });
    const bool iht_same = same(serial, parallel);
    const double fiht_s = seconds_per_call(repeats, [&] { serial = fiht_step(prob, x, Execution::Serial); });
    const double fiht_p = seconds_per_call(repeats, [&] { parallel = fiht_step(prob, x, Execution::Parallel); });
    const bool fiht_same = same(serial, parallel);

    std::printf("%-6s n=%-4ld r=%-3ld s=%-2ld m=%-6ld serial %9.3f ms  parallel %9.3f ms  speedup %5.2f  %s\n", "iht",
                static_cast<long>(n), static_cast<long>(r), static_cast<long>(s), static_cast<long>(m), 1e3 * iht_s,
                1e3 * iht_p, iht_s / iht_p, iht_same ? "identical" : "DIFFERENT");
    std::printf("%-6s n=%-4ld r=%-3ld s=%-2ld m=%-6ld serial %9.3f ms  parallel %9.3f ms  speedup %5.2f  %s\n", "fiht",
                static_cast<long>(n), static_cast<long>(r), static_cast<long>(s), static_cast<long>(m), 1e3 * fiht_s,
                1e3 * fiht_p, fiht_s / fiht_p, fiht_same ? "identical" : "DIFFERENT");
}

void bench_arip(int repeats) {
    const auto ens = MeasurementEnsemble<double>::generate(EnsembleKind::Gaussian, 2, 2000, {20, 20}, 3);
    const int threads = omp_get_max_threads();
    AripEstimate one;
    AripEstimate many;
    omp_set_num_threads(1);
    const double t1 = seconds_per_call(repeats, [&] { one = arip_sample(ens, 2, 200, 4); });
    omp_set_num_threads(threads);
    const double tn = seconds_per_call(repeats, [&] { many = arip_sample(ens, 2, 200, 4); });
    std::printf("%-6s n=20   r=2   s=2  m=2000   1 thread %7.3f ms  %d threads %7.3f ms  speedup %5.2f  %s\n", "arip",
                1e3 * t1, threads, 1e3 * tn, t1 / tn, one.ratios == many.ratios ? "identical" : "DIFFERENT");
}

void bench_threshold(Eigen::Index n, Eigen::Index r, int repeats) {
    std::mt19937_64 g(5);
    const auto x = truncated_svd<double>(gaussian_matrix<double>(g, n, r) * gaussian_matrix<double>(g, n, r).transpose(), r);
    const auto t = TangentSpace<double>::at(x);
    const auto d = tangent_components(t, Matrix<double>(gaussian_matrix<double>(g, n, n)));
    LowRankFactor<double> fast;
    LowRankFactor<double> dense;
    const double core =
        seconds_per_call(repeats, [&] { fast = threshold_core(core_update(x, d, 0.3), x, r); });
    const double full = seconds_per_call(repeats, [&] { dense = hard_threshold<double>(x.dense() + 0.3 * d.dense(t), r); });
    const double gap = (fast.dense() - dense.dense()).norm() / dense.dense().norm();
    std::printf("%-6s n=%-4ld r=%-3ld  core %9.3f ms  dense %9.3f ms  speedup %6.1f  rel diff %.1e\n", "hr",
                static_cast<long>(n), static_cast<long>(r), 1e3 * core, 1e3 * full, full / core, gap);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"demix kernel benchmarks"};
    int repeats = 5;
    int threads = 0;
    app.add_option("--repeats", repeats, "timed calls per measurement")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP threads for the parallel runs")->check(CLI::NonNegativeNumber);
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    std::cout << "# OpenMP threads: " << omp_get_max_threads() << "\n";
    for (Eigen::Index s : {2, 4}) bench_steps(40, 3, s, repeats);
    bench_steps(64, 4, 4, repeats);
    bench_arip(repeats);
    for (Eigen::Index n : {64, 128, 256})
        for (Eigen::Index r : {2, 5, 10}) bench_threshold(n, r, repeats);
    return 0;
}
