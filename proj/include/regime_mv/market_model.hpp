#ifndef REGIME_MV_MARKET_MODEL_HPP
#define REGIME_MV_MARKET_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "regime_mv/errors.hpp"
#include "regime_mv/ode.hpp"
#include "regime_mv/piecewise.hpp"

namespace regime_mv {

enum class ConstraintMode { Unconstrained, NoShorting };

std::string to_string(ConstraintMode mode);
ConstraintMode parse_mode(const std::string& name);

// One atom of a jump component's intensity measure: a Poisson arrival rate
// (weight) paired with the per-regime price-impact vector its arrivals apply.
struct JumpAtom {
    double weight = 0.0;
    std::vector<PiecewiseConstant<Eigen::VectorXd>> loading; // per regime, length-m vectors
};

struct JumpComponent {
    std::vector<JumpAtom> atoms;
};

// Regime-switching jump-diffusion market. Regimes are 0-based internally;
// external interfaces (files, CLI) use 1-based labels.
struct MarketModel {
    int ell = 1;        // regimes
    int m = 1;          // stocks
    int n1 = 0;         // Brownian dimension
    double horizon = 1.0;
    Eigen::MatrixXd generator;                              // ell x ell switching intensities
    std::vector<PiecewiseConstant<double>> rate;            // per regime
    std::vector<PiecewiseConstant<Eigen::VectorXd>> drift;  // per regime, length m
    std::vector<PiecewiseConstant<Eigen::MatrixXd>> vol;    // per regime, m x n1
    std::vector<JumpComponent> jump_components;
    // shock_tables[i*ell + j] holds gamma^{i,j}; an empty table means no shock
    std::vector<PiecewiseConstant<Eigen::VectorXd>> shock_tables;
    double nondegeneracy_delta = 1e-8;

    int n2() const { return static_cast<int>(jump_components.size()); }

    double rate_at(int i, double t) const { return rate[i].at(t); }
    const Eigen::VectorXd& drift_at(int i, double t) const { return drift[i].at(t); }
    const Eigen::MatrixXd& vol_at(int i, double t) const { return vol[i].at(t); }

    // nullptr when the ordered pair (i, j) carries no shock
    const PiecewiseConstant<Eigen::VectorXd>* shock_table(int i, int j) const {
        const auto& tab = shock_tables[static_cast<std::size_t>(i) * ell + j];
        return tab.empty() ? nullptr : &tab;
    }
    void set_shock(int i, int j, PiecewiseConstant<Eigen::VectorXd> table) {
        shock_tables[static_cast<std::size_t>(i) * ell + j] = std::move(table);
    }

    // Union of every coefficient table's breakpoints in (0, horizon)
    std::vector<double> coefficient_breakpoints() const;

    bool rate_regime_independent() const;

    // Exact integral of the (regime-independent) rate over [t0, t1]
    double rate_integral(double t0, double t1) const;

    void resize_tables(); // allocate per-regime/shock slots after setting ell
};

struct Violation {
    std::string invariant;
    std::string location;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

struct FeasibilityResult {
    bool feasible = false;
    double diagnostic = 0.0; // the integral D; feasible iff D > tolerance
};

inline constexpr double kFeasibilityTol = 1e-12;

// Checks every model invariant; the noise-covariance floor is evaluated at
// every breakpoint-segment midpoint. Violations are data, not exceptions.
ValidationReport validate_model(const MarketModel& model);

// Sigma^i_t = sigma sigma^T + sum_atoms w beta beta^T + sum_{j!=i} q^{ij} gamma gamma^T
Eigen::MatrixXd noise_covariance(const MarketModel& model, int i, double t);

// The three P-weighted pointwise maps driving the Riccati system.
//   weighted_drift      M^i_t(P)    = P^i mu + sum_{j!=i} q^{ij} P^j gamma^{i,j}
//   weighted_covariance N^i_t(P)    = P^i (sigma sigma^T + int beta beta^T) + sum q^{ij} P^j gamma gamma^T
//   switch_coupling     R^i_t(P, h) = sum_{j!=i} q^{ij} P^j gamma^{i,j} (h^j - h^i)
// All require P componentwise positive.
void weighted_drift_into(const MarketModel& model, const Eigen::VectorXd& P, int i, double t,
                         Eigen::VectorXd& out);
void weighted_covariance_into(const MarketModel& model, const Eigen::VectorXd& P, int i, double t,
                              Eigen::MatrixXd& out);
void switch_coupling_into(const MarketModel& model, const Eigen::VectorXd& P,
                          const Eigen::VectorXd& h, int i, double t, Eigen::VectorXd& out);

Eigen::VectorXd weighted_drift(const MarketModel& model, const Eigen::VectorXd& P, int i, double t);
Eigen::MatrixXd weighted_covariance(const MarketModel& model, const Eigen::VectorXd& P, int i, double t);
Eigen::VectorXd switch_coupling(const MarketModel& model, const Eigen::VectorXd& P,
                                const Eigen::VectorXd& h, int i, double t);

// Backward solve of the riskless growth factors psi^i_t (terminal value 1):
//   d/dt psi^i = -r^i psi^i - sum_{j!=i} q^{ij} (psi^j - psi^i)
GridFunction solve_growth_factors(const MarketModel& model, int n_steps = 2000);

// Integral feasibility gate: D = int_0^T sum_i p_t(i) sum_k f(psi^i mu^i_k +
// sum_{j!=i} q^{ij} psi^j gamma^{i,j}_k) dt with f = |.| (unconstrained) or
// (.)^+ (no shorting), p_t the marginal regime law started at i0.
FeasibilityResult check_feasibility(const MarketModel& model, ConstraintMode mode, int i0,
                                    int n_steps = 2000);

} // namespace regime_mv

#endif
