#include "regime_mv/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace regime_mv {

std::string to_string(ConstraintMode mode) {
    return mode == ConstraintMode::Unconstrained ? "unconstrained" : "noshort";
}

ConstraintMode parse_mode(const std::string& name) {
    if (name == "unconstrained") return ConstraintMode::Unconstrained;
    if (name == "noshort" || name == "no-shorting" || name == "noshorting")
        return ConstraintMode::NoShorting;
    throw std::invalid_argument("unknown constraint mode: " + name);
}

void MarketModel::resize_tables() {
    rate.resize(ell);
    drift.resize(ell);
    vol.resize(ell);
    shock_tables.assign(static_cast<std::size_t>(ell) * ell, {});
}

std::vector<double> MarketModel::coefficient_breakpoints() const {
    std::set<double> pts;
    auto add = [&](const std::vector<double>& bs) {
        for (double b : bs)
            if (b > 0.0 && b < horizon) pts.insert(b);
    };
    for (int i = 0; i < ell; ++i) {
        add(rate[i].breakpoints());
        add(drift[i].breakpoints());
        add(vol[i].breakpoints());
    }
    for (const auto& comp : jump_components)
        for (const auto& atom : comp.atoms)
            for (const auto& tab : atom.loading) add(tab.breakpoints());
    for (const auto& tab : shock_tables)
        if (!tab.empty()) add(tab.breakpoints());
    return {pts.begin(), pts.end()};
}

bool MarketModel::rate_regime_independent() const {
    if (ell <= 1) return true;
    std::set<double> pts{0.0};
    for (int i = 0; i < ell; ++i)
        for (double b : rate[i].breakpoints()) pts.insert(b);
    for (double b : pts) {
        double probe = std::nextafter(b, horizon + 1.0); // inside the segment starting at b
        double r0 = rate[0].at(probe);
        for (int i = 1; i < ell; ++i)
            if (rate[i].at(probe) != r0) return false;
    }
    return true;
}

double MarketModel::rate_integral(double t0, double t1) const {
    if (!rate_regime_independent())
        throw ModeError("rate_integral requires a regime-independent interest rate");
    if (t0 > t1) return -rate_integral(t1, t0);
    const auto& tab = rate[0];
    const auto& bs = tab.breakpoints();
    double sum = 0.0, lo = t0;
    while (lo < t1) {
        auto it = std::upper_bound(bs.begin(), bs.end(), lo);
        double hi = (it == bs.end()) ? t1 : std::min(*it, t1);
        sum += tab.at(0.5 * (lo + hi)) * (hi - lo);
        lo = hi;
    }
    return sum;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.invariant << " [" << v.location << "]\n";
    return os.str();
}

namespace {

std::string regime_label(int i) { return "regime " + std::to_string(i + 1); }

// per-model segment midpoints: one probe time inside every maximal interval
// on which all coefficient tables are constant
std::vector<double> segment_midpoints(const MarketModel& model) {
    std::vector<double> cuts{0.0};
    auto bps = model.coefficient_breakpoints();
    cuts.insert(cuts.end(), bps.begin(), bps.end());
    cuts.push_back(model.horizon);
    std::vector<double> mids;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        mids.push_back(0.5 * (cuts[k] + cuts[k + 1]));
    return mids;
}

} // namespace

ValidationReport validate_model(const MarketModel& model) {
    ValidationReport report;
    auto flag = [&](std::string what, std::string where) {
        report.violations.push_back({std::move(what), std::move(where)});
    };

    if (model.ell < 1) flag("number of regimes must be >= 1", "ell");
    if (model.m < 1) flag("number of stocks must be >= 1", "m");
    if (model.n1 < 0) flag("Brownian dimension must be >= 0", "n1");
    if (!(model.horizon > 0.0)) flag("horizon must be positive", "horizon");
    if (!(model.nondegeneracy_delta > 0.0)) flag("delta must be positive", "delta");
    if (!report.ok()) return report; // sizes below assume sane dimensions

    if (model.generator.rows() != model.ell || model.generator.cols() != model.ell)
        flag("generator must be ell x ell", "generator");
    if (static_cast<int>(model.rate.size()) != model.ell ||
        static_cast<int>(model.drift.size()) != model.ell ||
        static_cast<int>(model.vol.size()) != model.ell)
        flag("per-regime coefficient tables must have one entry per regime", "rate/drift/vol");
    if (static_cast<int>(model.shock_tables.size()) != model.ell * model.ell)
        flag("shock table container must have ell*ell slots", "shock");
    if (!report.ok()) return report;

    // generator: nonnegative off-diagonal, zero row sums
    for (int i = 0; i < model.ell; ++i) {
        for (int j = 0; j < model.ell; ++j)
            if (i != j && model.generator(i, j) < 0.0)
                flag("generator off-diagonal entries must be nonnegative",
                     "generator(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        double row_sum = model.generator.row(i).sum();
        if (std::abs(row_sum) > 1e-12)
            flag("generator row sum must be 0 (got " + std::to_string(row_sum) + ")",
                 "generator row " + std::to_string(i + 1));
    }

    // table value dimensions
    for (int i = 0; i < model.ell; ++i) {
        for (std::size_t k = 0; k < model.drift[i].segments(); ++k)
            if (model.drift[i].segment_value(k).size() != model.m)
                flag("drift values must be length-m vectors", regime_label(i));
        for (std::size_t k = 0; k < model.vol[i].segments(); ++k)
            if (model.vol[i].segment_value(k).rows() != model.m ||
                model.vol[i].segment_value(k).cols() != model.n1)
                flag("vol values must be m x n1 matrices", regime_label(i));
    }

    // jump atoms: nonnegative finite weights, loadings > -1 with margin
    const double margin = 1e-9;
    double total_weight = 0.0;
    for (std::size_t c = 0; c < model.jump_components.size(); ++c) {
        const auto& comp = model.jump_components[c];
        if (comp.atoms.empty())
            flag("jump component must contain at least one atom", "jump component " + std::to_string(c + 1));
        for (std::size_t a = 0; a < comp.atoms.size(); ++a) {
            const auto& atom = comp.atoms[a];
            std::string where = "jump component " + std::to_string(c + 1) + " atom " + std::to_string(a + 1);
            if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight))
                flag("atom weight must be finite and nonnegative", where);
            total_weight += atom.weight;
            if (static_cast<int>(atom.loading.size()) != model.ell) {
                flag("atom loading must have one table per regime", where);
                continue;
            }
            for (int i = 0; i < model.ell; ++i)
                for (std::size_t k = 0; k < atom.loading[i].segments(); ++k) {
                    const auto& b = atom.loading[i].segment_value(k);
                    if (b.size() != model.m) flag("atom loading values must be length-m vectors", where);
                    else if (b.minCoeff() <= -1.0 + margin)
                        flag("jump loading components must exceed -1", where + ", " + regime_label(i));
                }
        }
    }
    if (!std::isfinite(total_weight))
        flag("total jump intensity must be finite", "jump_components");

    // shocks: defined only off-diagonal, components > -1 with margin
    for (int i = 0; i < model.ell; ++i)
        for (int j = 0; j < model.ell; ++j) {
            const auto* tab = model.shock_table(i, j);
            if (!tab) continue;
            std::string where = "shock (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
            if (i == j) {
                flag("shock tables are defined only for ordered pairs i != j", where);
                continue;
            }
            for (std::size_t k = 0; k < tab->segments(); ++k) {
                const auto& g = tab->segment_value(k);
                if (g.size() != model.m) flag("shock values must be length-m vectors", where);
                else if (g.minCoeff() <= -1.0 + margin)
                    flag("shock components must exceed -1", where);
            }
        }
    if (!report.ok()) return report;

    // nondegeneracy floor at every segment midpoint
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    for (int i = 0; i < model.ell; ++i)
        for (double t : segment_midpoints(model)) {
            eig.compute(noise_covariance(model, i, t), Eigen::EigenvaluesOnly);
            double lambda_min = eig.eigenvalues().minCoeff();
            if (lambda_min < model.nondegeneracy_delta) {
                std::ostringstream os;
                os << "noise covariance eigenvalue floor violated: lambda_min=" << lambda_min
                   << " < delta=" << model.nondegeneracy_delta;
                flag(os.str(), regime_label(i) + " at t=" + std::to_string(t));
            }
        }
    return report;
}

namespace {

void check_indices(const MarketModel& model, int i, double t) {
    if (i < 0 || i >= model.ell)
        throw std::out_of_range("regime index out of range: " + std::to_string(i + 1));
    if (t < 0.0 || t > model.horizon)
        throw std::out_of_range("time outside [0, horizon]: " + std::to_string(t));
}

void check_positive(const Eigen::VectorXd& P) {
    if (P.minCoeff() <= 0.0)
        throw std::invalid_argument("weight vector P must be componentwise positive");
}

} // namespace

Eigen::MatrixXd noise_covariance(const MarketModel& model, int i, double t) {
    check_indices(model, i, t);
    const auto& sig = model.vol_at(i, t);
    Eigen::MatrixXd out = sig * sig.transpose();
    for (const auto& comp : model.jump_components)
        for (const auto& atom : comp.atoms) {
            const auto& b = atom.loading[i].at(t);
            out.noalias() += atom.weight * (b * b.transpose());
        }
    for (int j = 0; j < model.ell; ++j) {
        if (j == i) continue;
        const auto* tab = model.shock_table(i, j);
        double q = model.generator(i, j);
        if (!tab || q == 0.0) continue;
        const auto& g = tab->at(t);
        out.noalias() += q * (g * g.transpose());
    }
    return out;
}

void weighted_drift_into(const MarketModel& model, const Eigen::VectorXd& P, int i, double t,
                         Eigen::VectorXd& out) {
    check_indices(model, i, t);
    check_positive(P);
    out = P[i] * model.drift_at(i, t);
    for (int j = 0; j < model.ell; ++j) {
        if (j == i) continue;
        const auto* tab = model.shock_table(i, j);
        double q = model.generator(i, j);
        if (!tab || q == 0.0) continue;
        out.noalias() += (q * P[j]) * tab->at(t);
    }
}

void weighted_covariance_into(const MarketModel& model, const Eigen::VectorXd& P, int i, double t,
                              Eigen::MatrixXd& out) {
    check_indices(model, i, t);
    check_positive(P);
    const auto& sig = model.vol_at(i, t);
    out.noalias() = P[i] * (sig * sig.transpose());
    for (const auto& comp : model.jump_components)
        for (const auto& atom : comp.atoms) {
            const auto& b = atom.loading[i].at(t);
            out.noalias() += (P[i] * atom.weight) * (b * b.transpose());
        }
    for (int j = 0; j < model.ell; ++j) {
        if (j == i) continue;
        const auto* tab = model.shock_table(i, j);
        double q = model.generator(i, j);
        if (!tab || q == 0.0) continue;
        const auto& g = tab->at(t);
        out.noalias() += (q * P[j]) * (g * g.transpose());
    }
}

void switch_coupling_into(const MarketModel& model, const Eigen::VectorXd& P,
                          const Eigen::VectorXd& h, int i, double t, Eigen::VectorXd& out) {
    check_indices(model, i, t);
    check_positive(P);
    out.setZero(model.m);
    for (int j = 0; j < model.ell; ++j) {
        if (j == i) continue;
        const auto* tab = model.shock_table(i, j);
        double q = model.generator(i, j);
        if (!tab || q == 0.0) continue;
        out.noalias() += (q * P[j] * (h[j] - h[i])) * tab->at(t);
    }
}

Eigen::VectorXd weighted_drift(const MarketModel& model, const Eigen::VectorXd& P, int i, double t) {
    Eigen::VectorXd out(model.m);
    weighted_drift_into(model, P, i, t, out);
    return out;
}

Eigen::MatrixXd weighted_covariance(const MarketModel& model, const Eigen::VectorXd& P, int i, double t) {
    Eigen::MatrixXd out(model.m, model.m);
    weighted_covariance_into(model, P, i, t, out);
    return out;
}

Eigen::VectorXd switch_coupling(const MarketModel& model, const Eigen::VectorXd& P,
                                const Eigen::VectorXd& h, int i, double t) {
    Eigen::VectorXd out(model.m);
    switch_coupling_into(model, P, h, i, t, out);
    return out;
}

GridFunction solve_growth_factors(const MarketModel& model, int n_steps) {
    const int ell = model.ell;
    auto rhs = [&model, ell](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        for (int i = 0; i < ell; ++i) {
            double coupling = 0.0;
            for (int j = 0; j < ell; ++j)
                if (j != i) coupling += model.generator(i, j) * (y[j] - y[i]);
            dy[i] = -model.rate_at(i, t) * y[i] - coupling;
        }
    };
    auto grid = make_grid(model.horizon, n_steps, model.coefficient_breakpoints());
    GridFunction psi = integrate_backward(rhs, Eigen::VectorXd::Ones(ell), grid);
    if (psi.values().minCoeff() <= 0.0)
        throw SolverError("growth factors must stay positive; model coefficients out of range");
    return psi;
}

FeasibilityResult check_feasibility(const MarketModel& model, ConstraintMode mode, int i0,
                                    int n_steps) {
    if (i0 < 0 || i0 >= model.ell)
        throw std::out_of_range("initial regime out of range: " + std::to_string(i0 + 1));
    if (mode == ConstraintMode::NoShorting && !model.rate_regime_independent())
        throw ModeError("no-shorting feasibility requires a regime-independent interest rate");

    const int ell = model.ell;
    GridFunction psi = solve_growth_factors(model, n_steps);

    // state: marginal law p (ell components) plus the running integral D
    Eigen::VectorXd psi_t(ell);
    auto rhs = [&, ell](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        psi_t = psi(std::clamp(t, 0.0, model.horizon));
        for (int i = 0; i < ell; ++i) {
            double flow = 0.0;
            for (int j = 0; j < ell; ++j)
                if (j != i) flow += model.generator(j, i) * y[j] - model.generator(i, j) * y[i];
            dy[i] = flow;
        }
        double integrand = 0.0;
        for (int i = 0; i < ell; ++i) {
            const auto& mu = model.drift_at(i, t);
            for (int k = 0; k < model.m; ++k) {
                double excess = psi_t[i] * mu[k];
                for (int j = 0; j < ell; ++j) {
                    if (j == i) continue;
                    const auto* tab = model.shock_table(i, j);
                    double q = model.generator(i, j);
                    if (!tab || q == 0.0) continue;
                    excess += q * psi_t[j] * tab->at(t)[k];
                }
                double contribution = (mode == ConstraintMode::Unconstrained)
                                          ? std::abs(excess)
                                          : std::max(excess, 0.0);
                integrand += y[i] * contribution;
            }
        }
        dy[ell] = integrand;
    };

    Eigen::VectorXd init = Eigen::VectorXd::Zero(ell + 1);
    init[i0] = 1.0;
    auto grid = make_grid(model.horizon, n_steps, model.coefficient_breakpoints());
    GridFunction sol = integrate_forward(rhs, init, grid);
    double diagnostic = sol.at_node(sol.nodes() - 1)[ell];
    return {diagnostic > kFeasibilityTol, diagnostic};
}

} // namespace regime_mv
