#ifndef REGIME_MV_CONSTRAINED_HPP
#define REGIME_MV_CONSTRAINED_HPP

#include <iosfwd>

#include "regime_mv/market_model.hpp"
#include "regime_mv/ode.hpp"

namespace regime_mv {

// Which of the two wealth branches (above/below the target line) a
// Hamiltonian belongs to.
enum class Branch { Plus, Minus };

// Feasible set of the inner minimization: the nonnegative orthant for the
// no-shorting problem, or all of R^m for the degeneration cross-check.
enum class InnerDomain { NonnegativeOrthant, FullSpace };

// Exponential envelopes guaranteeing positivity and boundedness of the
// Riccati pair: epsilon = e^{-c2 T} <= P <= kappa = e^{2 c1 T}, where c1
// bounds the rate from above and c2 bounds the drift quadratic-form deficit.
struct TruncationBounds {
    double c1 = 0.0;
    double c2 = 0.0;
    double kappa = 1.0;
    double epsilon = 1.0;
};

TruncationBounds truncation_bounds(const MarketModel& model);

struct InnerOptions {
    double v_radius = 0.0; // search cap; computed from the model when <= 0
    int max_iterations = 10000;
    InnerDomain domain = InnerDomain::NonnegativeOrthant;
};

// conservative computable enlargement of the minimizer-boundedness radius
double default_search_radius(const MarketModel& model);

// Pointwise value of the convex piecewise-quadratic Hamiltonian H^i_{+/-}
// at portfolio weight v, given positive branch vectors P_plus, P_minus.
double constrained_hamiltonian(const MarketModel& model, Branch branch, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& P_plus, const Eigen::VectorXd& P_minus,
                               int i, double t);

struct HamiltonianMinimum {
    Eigen::VectorXd v;        // minimizer (the selection reached from v = 0)
    double value = 0.0;       // H^* = H(v)
    int iterations = 0;
    bool radius_active = false; // search-radius cap binding at convergence
};

// Projected gradient with Armijo backtracking from v = 0. Convergence:
// ||v - proj(v - grad H(v))|| <= 1e-10 (1 + ||grad H(0)||).
HamiltonianMinimum minimize_hamiltonian(const MarketModel& model, Branch branch,
                                        const Eigen::VectorXd& P_plus,
                                        const Eigen::VectorXd& P_minus, int i, double t,
                                        const InnerOptions& options = {});

// Solution of the 2*ell-dimensional coupled Riccati system
//   dP^i_{+/-}/dt = -[2 r^i P^i_{+/-} + H^{*,i}_{+/-}(P_+, P_-)],  P^i_{+/-,T} = 1,
// with minimizers cached at every node. Portfolio weights are interpolated
// linearly in t and re-projected onto the nonnegative orthant.
struct ConstrainedSolution {
    GridFunction P_plus;  // ell
    GridFunction P_minus; // ell
    GridFunction v_plus;  // ell*m, regime-major
    GridFunction v_minus; // ell*m, regime-major
    TruncationBounds bounds;
    int m = 1;

    double P_plus0(int i0) const { return P_plus.at_node(0)[i0]; }
    double P_minus0(int i0) const { return P_minus.at_node(0)[i0]; }

    void weight_into(Branch branch, int i, double t, Eigen::VectorXd& out) const;
    Eigen::VectorXd weight(Branch branch, int i, double t) const;
};

ConstrainedSolution solve_constrained(const MarketModel& model, int n_steps = 2000,
                                      InnerDomain domain = InnerDomain::NonnegativeOrthant);

// CSV export, long format: t, regime, P_plus, P_minus, v_plus_1..m, v_minus_1..m
void write_constrained_csv(const ConstrainedSolution& sol, std::ostream& os);

} // namespace regime_mv

#endif
