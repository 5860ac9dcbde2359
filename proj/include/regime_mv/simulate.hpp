#ifndef REGIME_MV_SIMULATE_HPP
#define REGIME_MV_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "regime_mv/constrained.hpp"
#include "regime_mv/market_model.hpp"
#include "regime_mv/policy.hpp"
#include "regime_mv/riccati.hpp"

namespace regime_mv {

// SplitMix64 stream with Box-Muller normals. Each simulated path owns the
// stream derived from (master_seed, path_index), so sample sets are identical
// for any worker count or schedule.
class PathRng {
public:
    PathRng(std::uint64_t master_seed, std::uint64_t stream);
    std::uint64_t next_u64();
    double uniform01();              // in [0, 1)
    double exponential(double rate); // rate > 0
    double normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct SimConfig {
    long paths = 100000;
    std::uint64_t master_seed = 0;
    int diffusion_substeps_per_unit = 200; // Euler resolution between event times
    ConstraintMode mode = ConstraintMode::Unconstrained;
};

// One realized trajectory of the regime chain: competing exponentials,
// truncated at the horizon. states[k] is the regime entered at times[k].
struct ChainPath {
    int initial_regime = 0;
    std::vector<double> times;
    std::vector<int> states;
};

ChainPath simulate_chain(const MarketModel& model, int i0, PathRng& rng);

// Feedback portfolio evaluated along a path. Engines are created once per
// worker thread, so implementations may keep internal workspace.
class PathPolicy {
public:
    virtual ~PathPolicy() = default;
    virtual void eval(double t, double wealth, int regime, Eigen::VectorXd& out) = 0;
};

using PolicyFactory = std::function<std::unique_ptr<PathPolicy>()>;

PolicyFactory zero_policy(int m);
PolicyFactory constant_policy(Eigen::VectorXd weights);
PolicyFactory unconstrained_policy(const MarketModel& model, const UnconstrainedSolution& sol,
                                   double lam);
PolicyFactory noshort_policy(const MarketModel& model, const ConstrainedSolution& sol, double lam);

struct WealthSamples {
    std::vector<double> terminal_wealth; // finite paths, in path order
    long flagged = 0;                    // non-finite paths dropped
};

// Event-driven scheme: chain switches and jump-atom arrivals are sampled
// exactly; the diffusion between events is Euler-Maruyama with the
// compensator drift. Fails if more than 0.1% of paths go non-finite.
WealthSamples simulate_wealth(const MarketModel& model, const PolicyFactory& make_policy,
                              double x0, int i0, const SimConfig& config);

// Serial reference for the OpenMP kernel above; bit-identical output.
WealthSamples simulate_wealth_serial(const MarketModel& model, const PolicyFactory& make_policy,
                                     double x0, int i0, const SimConfig& config);

struct Stats {
    double mean_hat = 0.0;
    double var_hat = 0.0; // unbiased
    double se_mean = 0.0;
    double se_var = 0.0;  // fourth-central-moment formula
};

Stats estimate_stats(const std::vector<double>& samples);

struct SimulationReport {
    double mean_hat = 0.0;
    double se_mean = 0.0;
    double var_hat = 0.0;
    double se_var = 0.0;
    double target_mean = 0.0;
    double closed_form_var = 0.0;
    bool pass_mean = false;
    bool pass_var = false;
    long paths = 0;
    std::uint64_t seed = 0;
};

std::string report_to_json(const SimulationReport& report);

// Simulates the optimal feedback policy for the query and compares sample
// moments against the closed-form frontier point:
//   |mean_hat - z| <= 3 se_mean,  |var_hat - cf| <= max(3 se_var, 0.05 cf).
SimulationReport verify_frontier(const MarketModel& model, const UnconstrainedSolution& sol,
                                 const FrontierQuery& query, const SimConfig& config);
SimulationReport verify_frontier(const MarketModel& model, const ConstrainedSolution& sol,
                                 const FrontierQuery& query, const SimConfig& config);

} // namespace regime_mv

#endif
