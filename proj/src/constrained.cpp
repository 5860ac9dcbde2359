#include "regime_mv/constrained.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace regime_mv {

namespace {

inline double pos_part(double x) { return x > 0.0 ? x : 0.0; }
inline double neg_part(double x) { return x < 0.0 ? -x : 0.0; }

struct AtomTerm {
    double weight;
    const Eigen::VectorXd* beta;
};

struct SwitchTerm {
    double q;
    const Eigen::VectorXd* gamma;
    int j;
};

// coefficient snapshot at one (regime, time); pointers view the model tables
struct HamiltonianTerms {
    const Eigen::MatrixXd* sigma;
    const Eigen::VectorXd* mu;
    Eigen::VectorXd compensator;
    std::vector<AtomTerm> atoms;
    std::vector<SwitchTerm> switches;

    HamiltonianTerms(const MarketModel& model, int i, double t)
        : sigma(&model.vol_at(i, t)), mu(&model.drift_at(i, t)) {
        compensator = Eigen::VectorXd::Zero(model.m);
        for (const auto& comp : model.jump_components)
            for (const auto& atom : comp.atoms) {
                const auto& b = atom.loading[i].at(t);
                compensator.noalias() += atom.weight * b;
                atoms.push_back({atom.weight, &b});
            }
        for (int j = 0; j < model.ell; ++j) {
            if (j == i) continue;
            const auto* tab = model.shock_table(i, j);
            double q = model.generator(i, j);
            if (!tab || q == 0.0) continue;
            switches.push_back({q, &tab->at(t), j});
        }
    }
};

// sign convention: s = +1 for the Plus branch, -1 for Minus; base/opp are the
// branch's own and the opposite branch's P vectors
double ham_value(const HamiltonianTerms& T, double s, const Eigen::VectorXd& v,
                 const Eigen::VectorXd& P_base, const Eigen::VectorXd& P_opp, int i,
                 Eigen::VectorXd& sigma_tv) {
    const double base = P_base[i], opp = P_opp[i];
    sigma_tv.noalias() = T.sigma->transpose() * v;
    double val = base * sigma_tv.squaredNorm() + 2.0 * s * base * (v.dot(*T.mu) - v.dot(T.compensator));
    for (const auto& a : T.atoms) {
        double u = 1.0 + s * v.dot(*a.beta);
        double up = pos_part(u), un = neg_part(u);
        val += a.weight * (base * up * up - base + opp * un * un);
    }
    for (const auto& sw : T.switches) {
        double u = 1.0 + s * v.dot(*sw.gamma);
        double up = pos_part(u), un = neg_part(u);
        val += sw.q * (P_base[sw.j] * up * up - base + P_opp[sw.j] * un * un);
    }
    return val;
}

void ham_gradient(const HamiltonianTerms& T, double s, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& P_base, const Eigen::VectorXd& P_opp, int i,
                  Eigen::VectorXd& sigma_tv, Eigen::VectorXd& grad) {
    const double base = P_base[i], opp = P_opp[i];
    sigma_tv.noalias() = T.sigma->transpose() * v;
    grad.noalias() = (2.0 * base) * (*T.sigma * sigma_tv);
    grad.noalias() += (2.0 * s * base) * (*T.mu - T.compensator);
    for (const auto& a : T.atoms) {
        double u = 1.0 + s * v.dot(*a.beta);
        double w = 2.0 * (base * pos_part(u) - opp * neg_part(u));
        grad.noalias() += (a.weight * w * s) * (*a.beta);
    }
    for (const auto& sw : T.switches) {
        double u = 1.0 + s * v.dot(*sw.gamma);
        double w = 2.0 * (P_base[sw.j] * pos_part(u) - P_opp[sw.j] * neg_part(u));
        grad.noalias() += (sw.q * w * s) * (*sw.gamma);
    }
}

// upper bound on the gradient's Lipschitz constant
double curvature_bound(const HamiltonianTerms& T, const Eigen::VectorXd& P_base,
                       const Eigen::VectorXd& P_opp, int i) {
    double L = P_base[i] * T.sigma->squaredNorm();
    for (const auto& a : T.atoms)
        L += a.weight * std::max(P_base[i], P_opp[i]) * a.beta->squaredNorm();
    for (const auto& sw : T.switches)
        L += sw.q * std::max(P_base[sw.j], P_opp[sw.j]) * sw.gamma->squaredNorm();
    return 2.0 * L;
}

void project(Eigen::VectorXd& v, InnerDomain domain, double radius) {
    if (domain == InnerDomain::NonnegativeOrthant) v = v.cwiseMax(0.0);
    double n = v.norm();
    if (n > radius) v *= radius / n;
}

void check_branch_positive(const Eigen::VectorXd& P_plus, const Eigen::VectorXd& P_minus) {
    if (P_plus.minCoeff() <= 0.0 || P_minus.minCoeff() <= 0.0)
        throw std::invalid_argument("branch vectors P_plus/P_minus must be componentwise positive");
}

} // namespace

TruncationBounds truncation_bounds(const MarketModel& model) {
    TruncationBounds out;
    std::vector<double> cuts{0.0};
    auto bps = model.coefficient_breakpoints();
    cuts.insert(cuts.end(), bps.begin(), bps.end());
    cuts.push_back(model.horizon);

    Eigen::VectorXd d(model.m), sol(model.m);
    Eigen::LLT<Eigen::MatrixXd> llt(model.m);
    double c1 = 0.0, c2 = 0.0;
    bool first = true;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double t = 0.5 * (cuts[k] + cuts[k + 1]);
        for (int i = 0; i < model.ell; ++i) {
            double r = model.rate_at(i, t);
            c1 = first && i == 0 ? r : std::max(c1, r);
            d = model.drift_at(i, t);
            for (int j = 0; j < model.ell; ++j) {
                if (j == i) continue;
                const auto* tab = model.shock_table(i, j);
                double q = model.generator(i, j);
                if (tab && q != 0.0) d.noalias() += q * tab->at(t);
            }
            llt.compute(noise_covariance(model, i, t));
            if (llt.info() != Eigen::Success)
                throw SolverError("noise covariance not positive definite at t=" + std::to_string(t) +
                                  ", regime " + std::to_string(i + 1));
            sol = d;
            llt.solveInPlace(sol);
            c2 = std::max(c2, pos_part(d.dot(sol) - 2.0 * r));
        }
        first = false;
    }
    out.c1 = c1;
    out.c2 = c2;
    out.kappa = std::exp(2.0 * c1 * model.horizon);
    out.epsilon = std::exp(-c2 * model.horizon);
    return out;
}

double default_search_radius(const MarketModel& model) {
    TruncationBounds b = truncation_bounds(model);
    return 10.0 * (1.0 + b.c2) / model.nondegeneracy_delta * b.kappa / b.epsilon;
}

double constrained_hamiltonian(const MarketModel& model, Branch branch, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& P_plus, const Eigen::VectorXd& P_minus,
                               int i, double t) {
    check_branch_positive(P_plus, P_minus);
    HamiltonianTerms T(model, i, t);
    Eigen::VectorXd sigma_tv(model.n1);
    if (branch == Branch::Plus) return ham_value(T, +1.0, v, P_plus, P_minus, i, sigma_tv);
    return ham_value(T, -1.0, v, P_minus, P_plus, i, sigma_tv);
}

HamiltonianMinimum minimize_hamiltonian(const MarketModel& model, Branch branch,
                                        const Eigen::VectorXd& P_plus,
                                        const Eigen::VectorXd& P_minus, int i, double t,
                                        const InnerOptions& options) {
    check_branch_positive(P_plus, P_minus);
    HamiltonianTerms T(model, i, t);
    const double s = branch == Branch::Plus ? +1.0 : -1.0;
    const Eigen::VectorXd& P_base = branch == Branch::Plus ? P_plus : P_minus;
    const Eigen::VectorXd& P_opp = branch == Branch::Plus ? P_minus : P_plus;
    const double radius = options.v_radius > 0.0 ? options.v_radius : default_search_radius(model);

    const int m = model.m;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m), grad(m), trial(m), diff(m), res(m),
                    sigma_tv(model.n1);

    ham_gradient(T, s, v, P_base, P_opp, i, sigma_tv, grad);
    const double tol = 1e-10 * (1.0 + grad.norm());
    double fv = ham_value(T, s, v, P_base, P_opp, i, sigma_tv);

    double L = curvature_bound(T, P_base, P_opp, i);
    double step = L > 0.0 ? 1.0 / L : 1.0;
    const double step_max = L > 0.0 ? 16.0 / L : 16.0;

    HamiltonianMinimum out;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        res = v - grad;
        project(res, options.domain, radius);
        res = v - res;
        if (res.norm() <= tol) break;

        double st = step;
        double f_trial;
        while (true) {
            trial = v - st * grad;
            project(trial, options.domain, radius);
            diff = trial - v;
            f_trial = ham_value(T, s, trial, P_base, P_opp, i, sigma_tv);
            if (f_trial <= fv + 1e-4 * grad.dot(diff) || st < 1e-18) break;
            st *= 0.5;
        }
        v.swap(trial);
        fv = f_trial;
        step = std::min(2.0 * st, step_max);
        ham_gradient(T, s, v, P_base, P_opp, i, sigma_tv, grad);
    }
    if (iter >= options.max_iterations) {
        res = v - grad;
        project(res, options.domain, radius);
        res = v - res;
        std::ostringstream os;
        os << "inner minimizer exceeded " << options.max_iterations << " iterations at t=" << t
           << ", regime " << (i + 1) << ", branch " << (branch == Branch::Plus ? "+" : "-")
           << ", residual " << res.norm() << " vs tolerance " << tol;
        throw SolverError(os.str());
    }
    out.v = v;
    out.value = fv;
    out.iterations = iter;
    out.radius_active = v.norm() >= radius * (1.0 - 1e-12);
    return out;
}

void ConstrainedSolution::weight_into(Branch branch, int i, double t, Eigen::VectorXd& out) const {
    const GridFunction& f = branch == Branch::Plus ? v_plus : v_minus;
    out.resize(m);
    for (int k = 0; k < m; ++k) out[k] = std::max(f.component(t, i * m + k), 0.0);
}

Eigen::VectorXd ConstrainedSolution::weight(Branch branch, int i, double t) const {
    Eigen::VectorXd out(m);
    weight_into(branch, i, t, out);
    return out;
}

ConstrainedSolution solve_constrained(const MarketModel& model, int n_steps, InnerDomain domain) {
    const int ell = model.ell;
    ConstrainedSolution sol;
    sol.m = model.m;
    sol.bounds = truncation_bounds(model);
    InnerOptions opts;
    opts.domain = domain;
    opts.v_radius = 10.0 * (1.0 + sol.bounds.c2) / model.nondegeneracy_delta * sol.bounds.kappa /
                    sol.bounds.epsilon;

    Eigen::VectorXd Pp(ell), Pm(ell);
    auto rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        for (int k = 0; k < 2 * ell; ++k)
            if (!(y[k] > 0.0))
                throw SolverError("Riccati pair lost positivity at t=" + std::to_string(t) +
                                  ", regime " + std::to_string(k % ell + 1));
        Pp = y.head(ell);
        Pm = y.tail(ell);
        for (int i = 0; i < ell; ++i) {
            double r = model.rate_at(i, t);
            auto plus = minimize_hamiltonian(model, Branch::Plus, Pp, Pm, i, t, opts);
            auto minus = minimize_hamiltonian(model, Branch::Minus, Pp, Pm, i, t, opts);
            dy[i] = -(2.0 * r * y[i] + plus.value);
            dy[ell + i] = -(2.0 * r * y[ell + i] + minus.value);
        }
    };

    auto grid = make_grid(model.horizon, n_steps, model.coefficient_breakpoints());
    GridFunction pair = integrate_backward(rhs, Eigen::VectorXd::Ones(2 * ell), grid);

    const int n = pair.nodes();
    Eigen::MatrixXd plus_vals(ell, n), minus_vals(ell, n);
    plus_vals = pair.values().topRows(ell);
    minus_vals = pair.values().bottomRows(ell);

    // envelope check (the existence bounds, with interpolation slack)
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < ell; ++i) {
            for (double val : {plus_vals(i, k), minus_vals(i, k)})
                if (val < sol.bounds.epsilon - 1e-6 || val > sol.bounds.kappa + 1e-6) {
                    std::ostringstream os;
                    os << "Riccati pair escaped the truncation envelope [" << sol.bounds.epsilon
                       << ", " << sol.bounds.kappa << "] with value " << val << " at t=" << pair.grid()[k]
                       << ", regime " << (i + 1);
                    throw SolverError(os.str());
                }
        }

    // cache the minimizers at every node
    Eigen::MatrixXd wp(ell * model.m, n), wm(ell * model.m, n);
    for (int k = 0; k < n; ++k) {
        double t = pair.grid()[k];
        Pp = plus_vals.col(k);
        Pm = minus_vals.col(k);
        for (int i = 0; i < ell; ++i) {
            auto plus = minimize_hamiltonian(model, Branch::Plus, Pp, Pm, i, t, opts);
            auto minus = minimize_hamiltonian(model, Branch::Minus, Pp, Pm, i, t, opts);
            wp.col(k).segment(i * model.m, model.m) = plus.v;
            wm.col(k).segment(i * model.m, model.m) = minus.v;
        }
    }

    sol.P_plus = GridFunction(pair.grid(), std::move(plus_vals));
    sol.P_minus = GridFunction(pair.grid(), std::move(minus_vals));
    sol.v_plus = GridFunction(pair.grid(), std::move(wp));
    sol.v_minus = GridFunction(pair.grid(), std::move(wm));
    return sol;
}

void write_constrained_csv(const ConstrainedSolution& sol, std::ostream& os) {
    char buf[64];
    os << "t,regime,P_plus,P_minus";
    for (int k = 1; k <= sol.m; ++k) os << ",v_plus_" << k;
    for (int k = 1; k <= sol.m; ++k) os << ",v_minus_" << k;
    os << "\n";
    const int ell = sol.P_plus.dim();
    for (int k = 0; k < sol.P_plus.nodes(); ++k)
        for (int i = 0; i < ell; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%d", sol.P_plus.grid()[k], i + 1);
            os << buf;
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", sol.P_plus.values()(i, k),
                          sol.P_minus.values()(i, k));
            os << buf;
            for (int c = 0; c < sol.m; ++c) {
                std::snprintf(buf, sizeof(buf), ",%.17g", sol.v_plus.values()(i * sol.m + c, k));
                os << buf;
            }
            for (int c = 0; c < sol.m; ++c) {
                std::snprintf(buf, sizeof(buf), ",%.17g", sol.v_minus.values()(i * sol.m + c, k));
                os << buf;
            }
            os << "\n";
        }
}

} // namespace regime_mv
