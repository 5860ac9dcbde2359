#include "regime_mv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace regime_mv {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

PathRng::PathRng(std::uint64_t master_seed, std::uint64_t stream) {
    // decorrelate the stream index before mixing it into the master seed
    std::uint64_t s = stream;
    std::uint64_t mixed = splitmix64(s);
    state_ = master_seed ^ mixed;
    splitmix64(state_); // burn-in so nearby seeds diverge
}

std::uint64_t PathRng::next_u64() { return splitmix64(state_); }

double PathRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double PathRng::exponential(double rate) {
    return -std::log1p(-uniform01()) / rate;
}

double PathRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

ChainPath simulate_chain(const MarketModel& model, int i0, PathRng& rng) {
    if (i0 < 0 || i0 >= model.ell)
        throw std::out_of_range("initial regime out of range: " + std::to_string(i0 + 1));
    ChainPath path;
    path.initial_regime = i0;
    int state = i0;
    double t = 0.0;
    while (true) {
        double total = 0.0;
        for (int j = 0; j < model.ell; ++j)
            if (j != state) total += model.generator(state, j);
        if (total <= 0.0) break; // absorbing
        t += rng.exponential(total);
        if (t > model.horizon) break;
        double u = rng.uniform01() * total;
        int next = state;
        double acc = 0.0;
        for (int j = 0; j < model.ell; ++j) {
            if (j == state) continue;
            acc += model.generator(state, j);
            if (u < acc) {
                next = j;
                break;
            }
        }
        if (next == state) { // guard against roundoff at u ~ total
            for (int j = model.ell - 1; j >= 0; --j)
                if (j != state && model.generator(state, j) > 0.0) {
                    next = j;
                    break;
                }
        }
        path.times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

namespace {

struct PathEvent {
    double t;
    int kind;      // 0 = regime switch, 1 = jump atom
    int target;    // switch: next regime
    int component; // jump: component index
    int atom;      // jump: atom index
};

struct PathBuffers {
    Eigen::VectorXd pi;
    std::vector<PathEvent> events;
    std::vector<double> boundaries;
    explicit PathBuffers(int m) : pi(m) {}
};

// One path of the controlled wealth SDE; returns the terminal wealth, or a
// non-finite value when the path blows up.
double run_wealth_path(const MarketModel& model, PathPolicy& policy, double x0, int i0,
                       const SimConfig& config, const std::vector<double>& breakpoints,
                       std::uint64_t path_index, PathBuffers& buf) {
    PathRng rng(config.master_seed, path_index);
    const double T = model.horizon;

    // exact event times: chain switches first, then each atom's arrivals
    buf.events.clear();
    ChainPath chain = simulate_chain(model, i0, rng);
    for (std::size_t k = 0; k < chain.times.size(); ++k)
        buf.events.push_back({chain.times[k], 0, chain.states[k], 0, 0});
    for (int c = 0; c < model.n2(); ++c) {
        const auto& atoms = model.jump_components[c].atoms;
        for (int a = 0; a < static_cast<int>(atoms.size()); ++a) {
            double w = atoms[a].weight;
            if (w <= 0.0) continue;
            double s = rng.exponential(w);
            while (s <= T) {
                buf.events.push_back({s, 1, 0, c, a});
                s += rng.exponential(w);
            }
        }
    }
    std::sort(buf.events.begin(), buf.events.end(), [](const PathEvent& a, const PathEvent& b) {
        return std::tie(a.t, a.kind, a.component, a.atom, a.target) <
               std::tie(b.t, b.kind, b.component, b.atom, b.target);
    });

    // diffusion boundaries: event times, coefficient breakpoints, horizon
    buf.boundaries.clear();
    for (const auto& ev : buf.events) buf.boundaries.push_back(ev.t);
    for (double b : breakpoints) buf.boundaries.push_back(b);
    buf.boundaries.push_back(T);
    std::sort(buf.boundaries.begin(), buf.boundaries.end());
    buf.boundaries.erase(std::unique(buf.boundaries.begin(), buf.boundaries.end()),
                         buf.boundaries.end());

    double X = x0;
    int regime = i0;
    double t = 0.0;
    std::size_t next_event = 0;
    const double per_unit = static_cast<double>(config.diffusion_substeps_per_unit);

    for (double t_stop : buf.boundaries) {
        if (t_stop > T) break;
        if (t_stop > t) {
            long n_sub = std::max<long>(1, static_cast<long>(std::ceil((t_stop - t) * per_unit - 1e-12)));
            double dt = (t_stop - t) / static_cast<double>(n_sub);
            double sqdt = std::sqrt(dt);
            for (long s = 0; s < n_sub; ++s) {
                double ts = t + static_cast<double>(s) * dt;
                double tmid = ts + 0.5 * dt; // inside the current table segment
                policy.eval(ts, X, regime, buf.pi);
                double drift = model.rate_at(regime, tmid) * X +
                               buf.pi.dot(model.drift_at(regime, tmid));
                for (const auto& comp : model.jump_components)
                    for (const auto& atom : comp.atoms)
                        drift -= atom.weight * buf.pi.dot(atom.loading[regime].at(tmid));
                const auto& sig = model.vol_at(regime, tmid);
                double dw = 0.0;
                for (int j = 0; j < model.n1; ++j) {
                    double coeff = sig.col(j).dot(buf.pi);
                    dw += coeff * rng.normal();
                }
                X += drift * dt + sqdt * dw;
                if (!std::isfinite(X)) return X;
            }
            t = t_stop;
        }
        // apply every event scheduled exactly at this boundary (left limits)
        while (next_event < buf.events.size() && buf.events[next_event].t == t_stop) {
            const auto& ev = buf.events[next_event++];
            policy.eval(t_stop, X, regime, buf.pi);
            if (ev.kind == 0) {
                const auto* tab = model.shock_table(regime, ev.target);
                if (tab) X += buf.pi.dot(tab->at(t_stop));
                regime = ev.target;
            } else {
                const auto& beta = model.jump_components[ev.component].atoms[ev.atom];
                X += buf.pi.dot(beta.loading[regime].at(t_stop));
            }
            if (!std::isfinite(X)) return X;
        }
    }
    return X;
}

WealthSamples collect(const std::vector<double>& raw, long paths) {
    WealthSamples out;
    out.terminal_wealth.reserve(raw.size());
    for (double x : raw) {
        if (std::isfinite(x))
            out.terminal_wealth.push_back(x);
        else
            ++out.flagged;
    }
    if (out.flagged * 1000 > paths)
        throw SolverError("more than 0.1% of simulated paths became non-finite (" +
                          std::to_string(out.flagged) + " of " + std::to_string(paths) + ")");
    return out;
}

void check_sim_inputs(const MarketModel& model, double, int i0, const SimConfig& config) {
    if (config.paths < 2) throw std::invalid_argument("simulation needs at least 2 paths");
    if (config.diffusion_substeps_per_unit < 1)
        throw std::invalid_argument("diffusion substeps per unit time must be >= 1");
    if (i0 < 0 || i0 >= model.ell)
        throw std::out_of_range("initial regime out of range: " + std::to_string(i0 + 1));
}

} // namespace

WealthSamples simulate_wealth(const MarketModel& model, const PolicyFactory& make_policy,
                              double x0, int i0, const SimConfig& config) {
    check_sim_inputs(model, x0, i0, config);
    const auto breakpoints = model.coefficient_breakpoints();
    std::vector<double> raw(config.paths);
#ifdef _OPENMP
#pragma omp parallel
    {
        auto policy = make_policy();
        PathBuffers buf(model.m);
#pragma omp for schedule(static)
        for (long p = 0; p < config.paths; ++p)
            raw[p] = run_wealth_path(model, *policy, x0, i0, config, breakpoints,
                                     static_cast<std::uint64_t>(p), buf);
    }
#else
    auto policy = make_policy();
    PathBuffers buf(model.m);
    for (long p = 0; p < config.paths; ++p)
        raw[p] = run_wealth_path(model, *policy, x0, i0, config, breakpoints,
                                 static_cast<std::uint64_t>(p), buf);
#endif
    return collect(raw, config.paths);
}

WealthSamples simulate_wealth_serial(const MarketModel& model, const PolicyFactory& make_policy,
                                     double x0, int i0, const SimConfig& config) {
    check_sim_inputs(model, x0, i0, config);
    const auto breakpoints = model.coefficient_breakpoints();
    std::vector<double> raw(config.paths);
    auto policy = make_policy();
    PathBuffers buf(model.m);
    for (long p = 0; p < config.paths; ++p)
        raw[p] = run_wealth_path(model, *policy, x0, i0, config, breakpoints,
                                 static_cast<std::uint64_t>(p), buf);
    return collect(raw, config.paths);
}

Stats estimate_stats(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("estimate_stats needs at least 2 samples");
    const double nd = static_cast<double>(n);
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= nd;
    double m2 = 0.0, m4 = 0.0;
    for (double x : samples) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    Stats out;
    out.mean_hat = mean;
    out.var_hat = m2 / (nd - 1.0);
    m2 /= nd;
    m4 /= nd;
    out.se_mean = std::sqrt(out.var_hat / nd);
    double var_of_var = (m4 - (nd - 3.0) / (nd - 1.0) * m2 * m2) / nd;
    out.se_var = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
    return out;
}

std::string report_to_json(const SimulationReport& r) {
    nlohmann::ordered_json j;
    j["mean_hat"] = r.mean_hat;
    j["se_mean"] = r.se_mean;
    j["var_hat"] = r.var_hat;
    j["se_var"] = r.se_var;
    j["target_mean"] = r.target_mean;
    j["closed_form_var"] = r.closed_form_var;
    j["pass_mean"] = r.pass_mean;
    j["pass_var"] = r.pass_var;
    j["paths"] = r.paths;
    j["seed"] = r.seed;
    return j.dump(2);
}

namespace {

class ZeroPolicy : public PathPolicy {
public:
    explicit ZeroPolicy(int m) : m_(m) {}
    void eval(double, double, int, Eigen::VectorXd& out) override { out.setZero(m_); }

private:
    int m_;
};

class ConstantPolicy : public PathPolicy {
public:
    explicit ConstantPolicy(Eigen::VectorXd w) : w_(std::move(w)) {}
    void eval(double, double, int, Eigen::VectorXd& out) override { out = w_; }

private:
    Eigen::VectorXd w_;
};

class UnconstrainedPathPolicy : public PathPolicy {
public:
    UnconstrainedPathPolicy(const MarketModel& model, const UnconstrainedSolution& sol, double lam)
        : policy_(model, sol, lam), ws_(model.ell, model.m) {}
    void eval(double t, double wealth, int regime, Eigen::VectorXd& out) override {
        policy_.eval(t, wealth, regime, ws_, out);
    }

private:
    UnconstrainedPolicy policy_;
    PolicyWorkspace ws_;
};

class NoShortPathPolicy : public PathPolicy {
public:
    NoShortPathPolicy(const MarketModel& model, const ConstrainedSolution& sol, double lam)
        : policy_(model, sol, lam) {}
    void eval(double t, double wealth, int regime, Eigen::VectorXd& out) override {
        policy_.eval(t, wealth, regime, out);
    }

private:
    NoShortPolicy policy_;
};

SimulationReport finish_report(const MarketModel&, const WealthSamples& samples,
                               const FrontierQuery& query, const SimConfig& config,
                               double closed_form_var) {
    Stats stats = estimate_stats(samples.terminal_wealth);
    SimulationReport report;
    report.mean_hat = stats.mean_hat;
    report.se_mean = stats.se_mean;
    report.var_hat = stats.var_hat;
    report.se_var = stats.se_var;
    report.target_mean = query.z;
    report.closed_form_var = closed_form_var;
    report.pass_mean = std::abs(stats.mean_hat - query.z) <= 3.0 * stats.se_mean;
    report.pass_var = std::abs(stats.var_hat - closed_form_var) <=
                      std::max(3.0 * stats.se_var, 0.05 * closed_form_var);
    report.paths = config.paths;
    report.seed = config.master_seed;
    return report;
}

} // namespace

PolicyFactory zero_policy(int m) {
    return [m] { return std::make_unique<ZeroPolicy>(m); };
}

PolicyFactory constant_policy(Eigen::VectorXd weights) {
    return [weights] { return std::make_unique<ConstantPolicy>(weights); };
}

PolicyFactory unconstrained_policy(const MarketModel& model, const UnconstrainedSolution& sol,
                                   double lam) {
    return [&model, &sol, lam] { return std::make_unique<UnconstrainedPathPolicy>(model, sol, lam); };
}

PolicyFactory noshort_policy(const MarketModel& model, const ConstrainedSolution& sol, double lam) {
    return [&model, &sol, lam] { return std::make_unique<NoShortPathPolicy>(model, sol, lam); };
}

SimulationReport verify_frontier(const MarketModel& model, const UnconstrainedSolution& sol,
                                 const FrontierQuery& query, const SimConfig& config) {
    auto feas = check_feasibility(model, ConstraintMode::Unconstrained, query.i0);
    if (!feas.feasible)
        throw std::invalid_argument("model is infeasible; frontier verification rejected");
    auto positivity = check_positivity(sol, query.i0);
    if (!positivity.budget_pos)
        throw std::invalid_argument("positivity check failed; frontier verification rejected");

    auto points = frontier(sol, query.x, query.i0, {query.z});
    double lam = points[0].lambda_star;
    auto samples = simulate_wealth(model, unconstrained_policy(model, sol, lam), query.x, query.i0,
                                   config);
    return finish_report(model, samples, query, config, points[0].variance);
}

SimulationReport verify_frontier(const MarketModel& model, const ConstrainedSolution& sol,
                                 const FrontierQuery& query, const SimConfig& config) {
    auto feas = check_feasibility(model, ConstraintMode::NoShorting, query.i0);
    if (!feas.feasible)
        throw std::invalid_argument("model is infeasible under no-shorting; verification rejected");

    auto points = frontier(model, sol, query.x, query.i0, {query.z});
    double lam = points[0].lambda_star;
    auto samples = simulate_wealth(model, noshort_policy(model, sol, lam), query.x, query.i0,
                                   config);
    return finish_report(model, samples, query, config, points[0].variance);
}

} // namespace regime_mv
