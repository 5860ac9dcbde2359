#include "regime_mv/policy.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace regime_mv {

namespace {

constexpr double kDenomFloor = 1e-12;
constexpr double kDualityTol = 1e-9;

[[noreturn]] void infeasible(const char* what, double denom) {
    std::ostringstream os;
    os << what << " (denominator " << denom << " <= " << kDenomFloor << ")";
    throw std::invalid_argument(os.str());
}

double clip_variance(FrontierPoint& p, double var) {
    if (var < 0.0) {
        if (var < -1e-12) throw SolverError("frontier variance below the clipping guard: " + std::to_string(var));
        p.variance_clipped = true;
        return 0.0;
    }
    return var;
}

} // namespace

double lambda_star(const UnconstrainedSolution& sol, const FrontierQuery& q) {
    double P0 = sol.P0(q.i0), h0 = sol.h0(q.i0), K0 = sol.K0(q.i0);
    double denom = 1.0 - P0 * h0 * h0 - K0;
    if (denom <= kDenomFloor) infeasible("mean constraint not attainable", denom);
    return (q.z - q.x * P0 * h0) / denom;
}

double lambda_star(const MarketModel& model, const ConstrainedSolution& sol,
                   const FrontierQuery& q) {
    double h0 = std::exp(-model.rate_integral(0.0, model.horizon));
    double Pm0 = sol.P_minus0(q.i0);
    double denom = 1.0 - h0 * h0 * Pm0;
    if (denom <= kDenomFloor) infeasible("mean constraint not attainable under no-shorting", denom);
    return (q.z - q.x * h0 * Pm0) / denom;
}

void UnconstrainedPolicy::eval(double t, double wealth, int i, PolicyWorkspace& ws,
                               Eigen::VectorXd& out) const {
    sol_->P.eval_into(t, ws.P_t);
    sol_->h.eval_into(t, ws.h_t);
    weighted_drift_into(*model_, ws.P_t, i, t, ws.M);
    switch_coupling_into(*model_, ws.P_t, ws.h_t, i, t, ws.R);
    weighted_covariance_into(*model_, ws.P_t, i, t, ws.N);
    ws.llt.compute(ws.N);
    if (ws.llt.info() != Eigen::Success)
        throw SolverError("policy covariance factorization failed at t=" + std::to_string(t));
    ws.rhs = ws.M * (wealth - lam_ * ws.h_t[i]) - lam_ * ws.R;
    ws.llt.solveInPlace(ws.rhs);
    out = -ws.rhs;
}

Eigen::VectorXd feedback_unconstrained(const MarketModel& model, const UnconstrainedSolution& sol,
                                       double t, double wealth, int i, double lam) {
    PolicyWorkspace ws(model.ell, model.m);
    Eigen::VectorXd out(model.m);
    UnconstrainedPolicy(model, sol, lam).eval(t, wealth, i, ws, out);
    return out;
}

NoShortPolicy::NoShortPolicy(const MarketModel& model, const ConstrainedSolution& sol, double lam)
    : model_(&model), sol_(&sol), lam_(lam) {
    if (!model.rate_regime_independent())
        throw ModeError("no-shorting policy requires a regime-independent interest rate");
}

void NoShortPolicy::eval(double t, double wealth, int i, Eigen::VectorXd& out) const {
    double h_t = std::exp(-model_->rate_integral(t, model_->horizon));
    double gap = wealth - lam_ * h_t;
    sol_->weight_into(gap >= 0.0 ? Branch::Plus : Branch::Minus, i, t, out);
    out *= std::abs(gap);
}

Eigen::VectorXd feedback_noshort(const MarketModel& model, const ConstrainedSolution& sol,
                                 double t, double wealth, int i, double lam) {
    Eigen::VectorXd out(model.m);
    NoShortPolicy(model, sol, lam).eval(t, wealth, i, out);
    return out;
}

double value_function(const UnconstrainedSolution& sol, double x, int i0, double lam) {
    double gap = x - lam * sol.h0(i0);
    return sol.P0(i0) * gap * gap + lam * lam * sol.K0(i0);
}

double value_function(const MarketModel& model, const ConstrainedSolution& sol, double x, int i0,
                      double lam) {
    double h0 = std::exp(-model.rate_integral(0.0, model.horizon));
    double gap = x - lam * h0;
    if (gap >= 0.0) return sol.P_plus0(i0) * gap * gap;
    return sol.P_minus0(i0) * gap * gap;
}

std::vector<FrontierPoint> frontier(const UnconstrainedSolution& sol, double x, int i0,
                                    const std::vector<double>& z_values) {
    double P0 = sol.P0(i0), h0 = sol.h0(i0), K0 = sol.K0(i0);
    double a = P0 * h0 * h0 + K0;
    double denom = 1.0 - a;
    if (denom <= kDenomFloor) infeasible("efficient frontier undefined", denom);

    std::vector<FrontierPoint> points;
    points.reserve(z_values.size());
    for (double z : z_values) {
        FrontierPoint p;
        p.mean = z;
        FrontierQuery q{x, i0, z, ConstraintMode::Unconstrained};
        p.lambda_star = lambda_star(sol, q);
        double dev = z - P0 * h0 * x / a;
        double var = a / denom * dev * dev + P0 * K0 * x * x / a;
        p.variance = clip_variance(p, var);
        p.std_dev = std::sqrt(p.variance);
        double dual = value_function(sol, x, i0, p.lambda_star) -
                      (p.lambda_star - z) * (p.lambda_star - z);
        p.duality_residual = var - dual;
        if (std::abs(p.duality_residual) > kDualityTol)
            throw SolverError("duality identity violated at z=" + std::to_string(z) +
                              " with residual " + std::to_string(p.duality_residual));
        points.push_back(p);
    }
    return points;
}

std::vector<FrontierPoint> frontier(const MarketModel& model, const ConstrainedSolution& sol,
                                    double x, int i0, const std::vector<double>& z_values) {
    double h0 = std::exp(-model.rate_integral(0.0, model.horizon));
    double Pm0 = sol.P_minus0(i0);
    double denom = 1.0 - h0 * h0 * Pm0;
    if (denom <= kDenomFloor) infeasible("efficient frontier undefined under no-shorting", denom);

    std::vector<FrontierPoint> points;
    points.reserve(z_values.size());
    for (double z : z_values) {
        if (z < x / h0 - 1e-12)
            throw std::invalid_argument(
                "no-shorting target mean below the riskless benchmark x/h0: z=" + std::to_string(z));
        FrontierPoint p;
        p.mean = z;
        FrontierQuery q{x, i0, z, ConstraintMode::NoShorting};
        p.lambda_star = lambda_star(model, sol, q);
        double dev = h0 * z - x;
        double var = Pm0 / denom * dev * dev;
        p.variance = clip_variance(p, var);
        p.std_dev = std::sqrt(p.variance);
        double dual = value_function(model, sol, x, i0, p.lambda_star) -
                      (p.lambda_star - z) * (p.lambda_star - z);
        p.duality_residual = var - dual;
        if (std::abs(p.duality_residual) > kDualityTol)
            throw SolverError("duality identity violated at z=" + std::to_string(z) +
                              " with residual " + std::to_string(p.duality_residual));
        points.push_back(p);
    }
    return points;
}

void write_frontier_csv(const std::vector<double>& z_values,
                        const std::vector<FrontierPoint>& points, std::ostream& os) {
    char buf[160];
    os << "z,variance,std,lambda_star\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", z_values[k],
                      points[k].variance, points[k].std_dev, points[k].lambda_star);
        os << buf << "\n";
    }
}

} // namespace regime_mv
