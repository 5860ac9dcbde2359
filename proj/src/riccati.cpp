#include "regime_mv/riccati.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace regime_mv {

namespace {

[[noreturn]] void positivity_failure(const char* what, double t, int regime) {
    std::ostringstream os;
    os << what << " at t=" << t << ", regime " << (regime + 1);
    throw SolverError(os.str());
}

void check_nodes_positive(const GridFunction& f, const char* name) {
    for (int k = 0; k < f.nodes(); ++k)
        for (int i = 0; i < f.dim(); ++i)
            if (!(f.values()(i, k) > 0.0))
                positivity_failure(name, f.grid()[k], i);
}

// shared workspace for the M^T N^{-1} x quadratic forms
struct MapWorkspace {
    Eigen::VectorXd M, R, sol;
    Eigen::MatrixXd N;
    Eigen::LLT<Eigen::MatrixXd> llt;

    explicit MapWorkspace(int m) : M(m), R(m), sol(m), N(m, m), llt(m) {}

    void factorize(const MarketModel& model, const Eigen::VectorXd& P, int i, double t) {
        weighted_covariance_into(model, P, i, t, N);
        llt.compute(N);
        if (llt.info() != Eigen::Success)
            positivity_failure("covariance factorization failed (positivity breach)", t, i);
    }
};

} // namespace

GridFunction solve_P(const MarketModel& model, int n_steps) {
    const int ell = model.ell;
    MapWorkspace ws(model.m);

    auto rhs = [&](double t, const Eigen::VectorXd& P, Eigen::VectorXd& dP) {
        for (int i = 0; i < ell; ++i)
            if (!(P[i] > 0.0)) positivity_failure("Riccati state lost positivity", t, i);
        for (int i = 0; i < ell; ++i) {
            weighted_drift_into(model, P, i, t, ws.M);
            ws.factorize(model, P, i, t);
            ws.sol = ws.M;
            ws.llt.solveInPlace(ws.sol);
            double quad = ws.M.dot(ws.sol);
            double coupling = 0.0;
            for (int j = 0; j < ell; ++j)
                if (j != i) coupling += model.generator(i, j) * (P[j] - P[i]);
            dP[i] = -(2.0 * model.rate_at(i, t) * P[i] - quad + coupling);
        }
    };

    auto grid = make_grid(model.horizon, n_steps, model.coefficient_breakpoints());
    GridFunction P = integrate_backward(rhs, Eigen::VectorXd::Ones(ell), grid);
    check_nodes_positive(P, "Riccati solution non-positive");
    return P;
}

GridFunction solve_h(const MarketModel& model, const GridFunction& P) {
    const int ell = model.ell;
    MapWorkspace ws(model.m);
    Eigen::VectorXd P_t(ell);

    auto rhs = [&](double t, const Eigen::VectorXd& h, Eigen::VectorXd& dh) {
        P.eval_into(t, P_t);
        for (int i = 0; i < ell; ++i) {
            weighted_drift_into(model, P_t, i, t, ws.M);
            switch_coupling_into(model, P_t, h, i, t, ws.R);
            ws.factorize(model, P_t, i, t);
            ws.sol = ws.R;
            ws.llt.solveInPlace(ws.sol);
            double cross = ws.M.dot(ws.sol);
            double coupling = 0.0;
            for (int j = 0; j < ell; ++j)
                if (j != i) coupling += model.generator(i, j) * P_t[j] * (h[j] - h[i]);
            dh[i] = model.rate_at(i, t) * h[i] + cross / P_t[i] - coupling / P_t[i];
        }
    };

    GridFunction h = integrate_backward(rhs, Eigen::VectorXd::Ones(ell), P.grid());
    check_nodes_positive(h, "discount factor non-positive");
    return h;
}

GridFunction solve_K(const MarketModel& model, const GridFunction& P, const GridFunction& h) {
    const int ell = model.ell;
    MapWorkspace ws(model.m);
    Eigen::VectorXd P_t(ell), h_t(ell);

    auto rhs = [&](double t, const Eigen::VectorXd& K, Eigen::VectorXd& dK) {
        P.eval_into(t, P_t);
        h.eval_into(t, h_t);
        for (int i = 0; i < ell; ++i) {
            switch_coupling_into(model, P_t, h_t, i, t, ws.R);
            ws.factorize(model, P_t, i, t);
            ws.sol = ws.R;
            ws.llt.solveInPlace(ws.sol);
            double quad = ws.R.dot(ws.sol);
            double spread = 0.0, coupling = 0.0;
            for (int j = 0; j < ell; ++j) {
                if (j == i) continue;
                double dh = h_t[j] - h_t[i];
                spread += model.generator(i, j) * P_t[j] * dh * dh;
                coupling += model.generator(i, j) * (K[j] - K[i]);
            }
            dK[i] = quad - spread - coupling;
        }
    };

    return integrate_backward(rhs, Eigen::VectorXd::Zero(ell), P.grid());
}

UnconstrainedSolution solve_unconstrained(const MarketModel& model, int n_steps) {
    UnconstrainedSolution sol;
    sol.P = solve_P(model, n_steps);
    sol.h = solve_h(model, sol.P);
    sol.K = solve_K(model, sol.P, sol.h);
    return sol;
}

PositivityCheck check_positivity(const UnconstrainedSolution& sol, int i0) {
    PositivityCheck out;
    out.k0 = sol.K0(i0);
    double p0 = sol.P0(i0), h0 = sol.h0(i0);
    out.budget = 1.0 - p0 * h0 * h0 - out.k0;
    out.k_nonneg = out.k0 >= -1e-10;
    out.budget_pos = out.budget > 1e-12;
    return out;
}

void write_unconstrained_csv(const UnconstrainedSolution& sol, std::ostream& os) {
    char buf[96];
    os << "t,regime,P,h,K\n";
    for (int k = 0; k < sol.P.nodes(); ++k)
        for (int i = 0; i < sol.P.dim(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g,%.17g", sol.P.grid()[k], i + 1,
                          sol.P.values()(i, k), sol.h.values()(i, k), sol.K.values()(i, k));
            os << buf << "\n";
        }
}

} // namespace regime_mv
