#ifndef REGIME_MV_POLICY_HPP
#define REGIME_MV_POLICY_HPP

#include <iosfwd>
#include <vector>

#include "regime_mv/constrained.hpp"
#include "regime_mv/market_model.hpp"
#include "regime_mv/riccati.hpp"

namespace regime_mv {

struct FrontierQuery {
    double x = 1.0;     // initial wealth
    int i0 = 0;         // initial regime
    double z = 1.0;     // target terminal mean
    ConstraintMode mode = ConstraintMode::Unconstrained;
};

struct FrontierPoint {
    double mean = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
    double lambda_star = 0.0;
    double duality_residual = 0.0; // Var - [V(lambda*) - (lambda*-z)^2]
    bool variance_clipped = false; // tiny negative variance rounded to 0
};

// Closed-form Lagrange multiplier attaining the target mean.
//   unconstrained: (z - x P0 h0) / (1 - P0 h0^2 - K0)
//   no shorting:   (z - x h0 P-_0) / (1 - h0^2 P-_0)
// Throws std::invalid_argument when the denominator is not safely positive.
double lambda_star(const UnconstrainedSolution& sol, const FrontierQuery& q);
double lambda_star(const MarketModel& model, const ConstrainedSolution& sol,
                   const FrontierQuery& q);

// Optimal feedback portfolios.
//   unconstrained: pi = -N^{-1} [ M (X - lam h) - lam R ]   (interpolated P, h)
//   no shorting:   pi = v+ (X - lam h_t)^+ + v- (X - lam h_t)^-, h_t = e^{-int_t^T r}
Eigen::VectorXd feedback_unconstrained(const MarketModel& model, const UnconstrainedSolution& sol,
                                       double t, double wealth, int i, double lam);
Eigen::VectorXd feedback_noshort(const MarketModel& model, const ConstrainedSolution& sol,
                                 double t, double wealth, int i, double lam);

// Optimal values of the lambda-parametrized LQ problem.
double value_function(const UnconstrainedSolution& sol, double x, int i0, double lam);
double value_function(const MarketModel& model, const ConstrainedSolution& sol, double x, int i0,
                      double lam);

// Efficient-frontier points for a list of target means. Every point carries
// its multiplier and the duality identity residual, which must vanish within
// 1e-9. No-shorting targets must satisfy z >= x / h0.
std::vector<FrontierPoint> frontier(const UnconstrainedSolution& sol, double x, int i0,
                                    const std::vector<double>& z_values);
std::vector<FrontierPoint> frontier(const MarketModel& model, const ConstrainedSolution& sol,
                                    double x, int i0, const std::vector<double>& z_values);

// Reusable feedback evaluator for hot loops (simulation); the caller owns one
// workspace per thread.
struct PolicyWorkspace {
    Eigen::VectorXd P_t, h_t, M, R, rhs;
    Eigen::MatrixXd N;
    Eigen::LLT<Eigen::MatrixXd> llt;
    explicit PolicyWorkspace(int ell, int m)
        : P_t(ell), h_t(ell), M(m), R(m), rhs(m), N(m, m), llt(m) {}
};

class UnconstrainedPolicy {
public:
    UnconstrainedPolicy(const MarketModel& model, const UnconstrainedSolution& sol, double lam)
        : model_(&model), sol_(&sol), lam_(lam) {}
    void eval(double t, double wealth, int i, PolicyWorkspace& ws, Eigen::VectorXd& out) const;

private:
    const MarketModel* model_;
    const UnconstrainedSolution* sol_;
    double lam_;
};

class NoShortPolicy {
public:
    NoShortPolicy(const MarketModel& model, const ConstrainedSolution& sol, double lam);
    void eval(double t, double wealth, int i, Eigen::VectorXd& out) const;

private:
    const MarketModel* model_;
    const ConstrainedSolution* sol_;
    double lam_;
};

void write_frontier_csv(const std::vector<double>& z_values,
                        const std::vector<FrontierPoint>& points, std::ostream& os);

} // namespace regime_mv

#endif
