#include "regime_mv/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "regime_mv/model_io.hpp"
#include "regime_mv/policy.hpp"
#include "regime_mv/simulate.hpp"

namespace regime_mv {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;  // validation / feasibility failure
constexpr int kExitSolver = 2;   // numerical failure
constexpr int kExitUsage = 3;

void apply_thread_cap() {
#ifdef _OPENMP
    const char* env = std::getenv("REGIME_MV_THREADS");
    if (!env) return;
    int n = std::atoi(env);
    if (n > 0)
        omp_set_num_threads(n);
    else
        omp_set_num_threads(omp_get_num_procs());
#endif
}

struct ValidationFailure {};

MarketModel load_validated(const std::string& path, std::ostream& err) {
    MarketModel model = load_model(path);
    ValidationReport report = validate_model(model);
    if (!report.ok()) {
        err << "model validation failed:\n" << report.to_string();
        throw ValidationFailure{};
    }
    return model;
}

// streams data to the named file, or to `fallback` when path is empty
class OutputTarget {
public:
    OutputTarget(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ModelIoError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CliOptions {
    std::string model_path;
    std::string mode_name = "unconstrained";
    int grid_steps = 2000;
    int i0 = 1;
    double x = 1.0;
    double z = 1.0;
    double z_from = 1.0, z_to = 2.0;
    int z_count = 11;
    double t = 0.0, wealth = 1.0, lambda = 0.0;
    int regime = 1;
    long paths = 100000;
    std::uint64_t seed = 0;
    int substeps = 200;
    std::string out_path, csv_out, json_out, dump_paths;
};

int run_validate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_model(opt.model_path);
    ValidationReport report = validate_model(model);
    if (!report.ok()) {
        err << report.to_string();
        return kExitInvalid;
    }
    out << "ok: " << model.ell << " regime(s), " << model.m << " stock(s), horizon "
        << fmt17(model.horizon) << "\n";
    return kExitOk;
}

int run_feasible(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_validated(opt.model_path, err);
    auto result = check_feasibility(model, parse_mode(opt.mode_name), opt.i0 - 1, opt.grid_steps);
    nlohmann::ordered_json j;
    j["feasible"] = result.feasible;
    j["diagnostic"] = result.diagnostic;
    out << j.dump(2) << "\n";
    return result.feasible ? kExitOk : kExitInvalid;
}

int run_solve(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_validated(opt.model_path, err);
    OutputTarget target(opt.out_path, out);
    if (parse_mode(opt.mode_name) == ConstraintMode::Unconstrained) {
        auto sol = solve_unconstrained(model, opt.grid_steps);
        write_unconstrained_csv(sol, target.stream());
    } else {
        auto sol = solve_constrained(model, opt.grid_steps);
        write_constrained_csv(sol, target.stream());
    }
    return kExitOk;
}

std::vector<double> z_grid(double from, double to, int count) {
    std::vector<double> z(count);
    for (int k = 0; k < count; ++k)
        z[k] = count == 1 ? from : from + (to - from) * static_cast<double>(k) / (count - 1);
    return z;
}

int run_frontier(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_validated(opt.model_path, err);
    ConstraintMode mode = parse_mode(opt.mode_name);
    int i0 = opt.i0 - 1;

    auto feas = check_feasibility(model, mode, i0, opt.grid_steps);
    if (!feas.feasible) {
        err << "model is infeasible in mode " << opt.mode_name
            << " (diagnostic " << fmt17(feas.diagnostic) << ")\n";
        return kExitInvalid;
    }

    auto z = z_grid(opt.z_from, opt.z_to, opt.z_count);
    std::vector<FrontierPoint> points;
    if (mode == ConstraintMode::Unconstrained) {
        auto sol = solve_unconstrained(model, opt.grid_steps);
        auto positivity = check_positivity(sol, i0);
        if (!positivity.budget_pos) {
            err << "positivity check failed: 1 - P0 h0^2 - K0 = " << fmt17(positivity.budget) << "\n";
            return kExitInvalid;
        }
        points = frontier(sol, opt.x, i0, z);
    } else {
        auto sol = solve_constrained(model, opt.grid_steps);
        points = frontier(model, sol, opt.x, i0, z);
    }

    OutputTarget csv(opt.csv_out, out);
    write_frontier_csv(z, points, csv.stream());
    if (!opt.json_out.empty()) {
        nlohmann::ordered_json j;
        j["mode"] = opt.mode_name;
        j["x"] = opt.x;
        j["i0"] = opt.i0;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < points.size(); ++k) {
            nlohmann::ordered_json p;
            p["z"] = z[k];
            p["variance"] = points[k].variance;
            p["std"] = points[k].std_dev;
            p["lambda_star"] = points[k].lambda_star;
            p["duality_residual"] = points[k].duality_residual;
            arr.push_back(std::move(p));
        }
        j["points"] = std::move(arr);
        std::ofstream jf(opt.json_out);
        if (!jf) throw ModelIoError("cannot open output file: " + opt.json_out);
        jf << j.dump(2) << "\n";
    }
    return kExitOk;
}

int run_policy(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_validated(opt.model_path, err);
    ConstraintMode mode = parse_mode(opt.mode_name);
    Eigen::VectorXd pi;
    if (mode == ConstraintMode::Unconstrained) {
        auto sol = solve_unconstrained(model, opt.grid_steps);
        pi = feedback_unconstrained(model, sol, opt.t, opt.wealth, opt.regime - 1, opt.lambda);
    } else {
        auto sol = solve_constrained(model, opt.grid_steps);
        pi = feedback_noshort(model, sol, opt.t, opt.wealth, opt.regime - 1, opt.lambda);
    }
    for (Eigen::Index k = 0; k < pi.size(); ++k)
        out << (k ? " " : "") << fmt17(pi[k]);
    out << "\n";
    return kExitOk;
}

int run_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    MarketModel model = load_validated(opt.model_path, err);
    ConstraintMode mode = parse_mode(opt.mode_name);
    FrontierQuery query{opt.x, opt.i0 - 1, opt.z, mode};
    SimConfig config;
    config.paths = opt.paths;
    config.master_seed = opt.seed;
    config.diffusion_substeps_per_unit = opt.substeps;
    config.mode = mode;

    SimulationReport report;
    double lam = 0.0;
    if (mode == ConstraintMode::Unconstrained) {
        auto sol = solve_unconstrained(model, opt.grid_steps);
        report = verify_frontier(model, sol, query, config);
        lam = lambda_star(sol, query);
        if (!opt.dump_paths.empty()) {
            auto samples = simulate_wealth(model, unconstrained_policy(model, sol, lam), query.x,
                                           query.i0, config);
            std::ofstream df(opt.dump_paths);
            if (!df) throw ModelIoError("cannot open output file: " + opt.dump_paths);
            df << "terminal_wealth\n";
            for (double v : samples.terminal_wealth) df << fmt17(v) << "\n";
        }
    } else {
        auto sol = solve_constrained(model, opt.grid_steps);
        report = verify_frontier(model, sol, query, config);
        lam = lambda_star(model, sol, query);
        if (!opt.dump_paths.empty()) {
            auto samples =
                simulate_wealth(model, noshort_policy(model, sol, lam), query.x, query.i0, config);
            std::ofstream df(opt.dump_paths);
            if (!df) throw ModelIoError("cannot open output file: " + opt.dump_paths);
            df << "terminal_wealth\n";
            for (double v : samples.terminal_wealth) df << fmt17(v) << "\n";
        }
    }

    OutputTarget target(opt.out_path, out);
    target.stream() << report_to_json(report) << "\n";
    return kExitOk;
}

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    apply_thread_cap();

    CLI::App app{"mean-variance portfolio selection under regime switching with price shocks"};
    app.require_subcommand(1);
    CliOptions opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("model", opt.model_path, "model JSON file")->required();
        sub->add_option("--grid-steps", opt.grid_steps, "uniform ODE steps")
            ->check(CLI::Range(100, 10000000));
    };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", opt.mode_name, "constraint mode")
            ->check(CLI::IsMember({"unconstrained", "noshort"}))
            ->required();
    };

    CLI::App* validate = app.add_subcommand("validate", "check model invariants");
    add_common(validate);

    CLI::App* feasible = app.add_subcommand("feasible", "evaluate the feasibility condition");
    add_common(feasible);
    add_mode(feasible);
    feasible->add_option("--i0", opt.i0, "initial regime (1-based)")->check(CLI::PositiveNumber);

    CLI::App* solve = app.add_subcommand("solve", "solve the Riccati systems and emit CSV");
    add_common(solve);
    add_mode(solve);
    solve->add_option("--out", opt.out_path, "CSV output file (default: stdout)");

    CLI::App* frontier_cmd = app.add_subcommand("frontier", "efficient frontier for a mean range");
    add_common(frontier_cmd);
    add_mode(frontier_cmd);
    frontier_cmd->add_option("--x", opt.x, "initial wealth")->required();
    frontier_cmd->add_option("--i0", opt.i0, "initial regime (1-based)")->required();
    frontier_cmd->add_option("--z-from", opt.z_from, "first target mean")->required();
    frontier_cmd->add_option("--z-to", opt.z_to, "last target mean")->required();
    frontier_cmd->add_option("--z-count", opt.z_count, "number of targets")
        ->required()
        ->check(CLI::Range(1, 1000000));
    frontier_cmd->add_option("--csv-out", opt.csv_out, "frontier CSV file (default: stdout)");
    frontier_cmd->add_option("--json-out", opt.json_out, "frontier JSON report file");

    CLI::App* policy_cmd = app.add_subcommand("policy", "optimal portfolio at a state");
    add_common(policy_cmd);
    add_mode(policy_cmd);
    policy_cmd->add_option("--t", opt.t, "time")->required();
    policy_cmd->add_option("--wealth", opt.wealth, "wealth")->required();
    policy_cmd->add_option("--regime", opt.regime, "regime (1-based)")->required();
    policy_cmd->add_option("--lambda", opt.lambda, "Lagrange multiplier")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo frontier verification");
    add_common(simulate);
    add_mode(simulate);
    simulate->add_option("--x", opt.x, "initial wealth")->required();
    simulate->add_option("--i0", opt.i0, "initial regime (1-based)")->required();
    simulate->add_option("--z", opt.z, "target mean")->required();
    simulate->add_option("--paths", opt.paths, "Monte-Carlo paths")->check(CLI::Range(2L, 1000000000L));
    simulate->add_option("--seed", opt.seed, "master seed");
    simulate->add_option("--substeps", opt.substeps, "diffusion substeps per unit time")
        ->check(CLI::Range(1, 1000000));
    simulate->add_option("--out", opt.out_path, "report JSON file (default: stdout)");
    simulate->add_option("--dump-paths", opt.dump_paths, "per-path terminal wealth CSV");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(validate)) return run_validate(opt, out, err);
        if (app.got_subcommand(feasible)) return run_feasible(opt, out, err);
        if (app.got_subcommand(solve)) return run_solve(opt, out, err);
        if (app.got_subcommand(frontier_cmd)) return run_frontier(opt, out, err);
        if (app.got_subcommand(policy_cmd)) return run_policy(opt, out, err);
        if (app.got_subcommand(simulate)) return run_simulate(opt, out, err);
    } catch (const ValidationFailure&) {
        return kExitInvalid;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ModelIoError& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    } catch (const ModeError& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::out_of_range& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitUsage;
}

} // namespace regime_mv
