#ifndef REGIME_MV_RICCATI_HPP
#define REGIME_MV_RICCATI_HPP

#include <iosfwd>

#include "regime_mv/market_model.hpp"
#include "regime_mv/ode.hpp"

namespace regime_mv {

// Solution of the three coupled backward systems for the unconstrained
// problem, on a shared grid:
//   P — per-regime curvature of the quadratic value function (positive),
//   h — per-regime wealth-target discount factor (positive),
//   K — per-regime variance load induced by regime switching.
// Terminal values: P = h = 1, K = 0.
struct UnconstrainedSolution {
    GridFunction P;
    GridFunction h;
    GridFunction K;

    double P0(int i0) const { return P.at_node(0)[i0]; }
    double h0(int i0) const { return h.at_node(0)[i0]; }
    double K0(int i0) const { return K.at_node(0)[i0]; }
};

// Backward solve of the fully coupled Riccati system
//   dP^i/dt = -[2 r^i P^i - M^T N^{-1} M + sum_{j!=i} q^{ij} (P^j - P^i)],  P^i_T = 1.
// The N-inverse is applied through a positive-definite (Cholesky) solve; a
// failed factorization or a non-positive node is reported as a SolverError
// naming the time and regime.
GridFunction solve_P(const MarketModel& model, int n_steps = 2000);

// Linear backward systems for h (terminal 1) and K (terminal 0); P and h are
// evaluated by linear interpolation at off-node stage times.
GridFunction solve_h(const MarketModel& model, const GridFunction& P);
GridFunction solve_K(const MarketModel& model, const GridFunction& P, const GridFunction& h);

UnconstrainedSolution solve_unconstrained(const MarketModel& model, int n_steps = 2000);

struct PositivityCheck {
    bool k_nonneg = false;   // K_0 >= -1e-10
    bool budget_pos = false; // 1 - P_0 h_0^2 - K_0 > 1e-12
    double k0 = 0.0;
    double budget = 0.0;
};

PositivityCheck check_positivity(const UnconstrainedSolution& sol, int i0);

// CSV export, long format: t, regime, P, h, K (17 significant digits)
void write_unconstrained_csv(const UnconstrainedSolution& sol, std::ostream& os);

} // namespace regime_mv

#endif
