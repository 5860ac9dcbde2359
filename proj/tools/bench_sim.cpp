// Timing comparison of the OpenMP wealth-simulation kernel against the serial
// reference, on the bundled two-regime shock model. The two runs must agree
// bit for bit.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "regime_mv/model_io.hpp"
#include "regime_mv/policy.hpp"
#include "regime_mv/simulate.hpp"

using namespace regime_mv;
using clock_type = std::chrono::steady_clock;

static double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

int main(int argc, char** argv) {
    std::string model_path = argc > 1 ? argv[1] : "models/two_regime_shocks.json";
    long paths = argc > 2 ? std::atol(argv[2]) : 50000;

    MarketModel model = load_model(model_path);
    auto report = validate_model(model);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return 1;
    }

    auto sol = solve_unconstrained(model, 2000);
    FrontierQuery query{1.0, 0, 1.2, ConstraintMode::Unconstrained};
    double lam = lambda_star(sol, query);
    auto factory = unconstrained_policy(model, sol, lam);

    SimConfig config;
    config.paths = paths;
    config.master_seed = 42;

    auto t0 = clock_type::now();
    auto serial = simulate_wealth_serial(model, factory, query.x, query.i0, config);
    double serial_s = seconds_since(t0);

    t0 = clock_type::now();
    auto parallel = simulate_wealth(model, factory, query.x, query.i0, config);
    double parallel_s = seconds_since(t0);

    bool identical = serial.terminal_wealth == parallel.terminal_wealth &&
                     serial.flagged == parallel.flagged;

    int threads = 1;
#ifdef _OPENMP
#pragma omp parallel
#pragma omp single
    threads = omp_get_num_threads();
#endif

    std::printf("paths            : %ld\n", paths);
    std::printf("threads          : %d\n", threads);
    std::printf("serial           : %.3f s (%.0f paths/s)\n", serial_s, paths / serial_s);
    std::printf("openmp           : %.3f s (%.0f paths/s)\n", parallel_s, paths / parallel_s);
    std::printf("speedup          : %.2fx\n", serial_s / parallel_s);
    std::printf("samples identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
