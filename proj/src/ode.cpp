#include "regime_mv/ode.hpp"

#include <algorithm>
#include <sstream>

namespace regime_mv {

GridFunction::GridFunction(std::vector<double> grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (grid_.size() < 2 || static_cast<Eigen::Index>(grid_.size()) != values_.cols())
        throw std::invalid_argument("GridFunction: need >= 2 nodes and one value column per node");
    if (!std::is_sorted(grid_.begin(), grid_.end()))
        throw std::invalid_argument("GridFunction: grid must be ascending");
}

int GridFunction::locate(double t) const {
    if (t < grid_.front() || t > grid_.back())
        throw std::out_of_range("GridFunction: evaluation outside [" +
                                std::to_string(grid_.front()) + ", " +
                                std::to_string(grid_.back()) + "] at t=" + std::to_string(t));
    auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    int k = static_cast<int>(it - grid_.begin()) - 1;
    return std::min(k, nodes() - 2);
}

Eigen::VectorXd GridFunction::operator()(double t) const {
    Eigen::VectorXd out(dim());
    eval_into(t, out);
    return out;
}

void GridFunction::eval_into(double t, Eigen::Ref<Eigen::VectorXd> out) const {
    int k = locate(t);
    double t0 = grid_[k], t1 = grid_[k + 1];
    double w = (t - t0) / (t1 - t0);
    out = (1.0 - w) * values_.col(k) + w * values_.col(k + 1);
}

double GridFunction::component(double t, int c) const {
    int k = locate(t);
    double t0 = grid_[k], t1 = grid_[k + 1];
    double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * values_(c, k) + w * values_(c, k + 1);
}

std::vector<double> make_grid(double horizon, int n_steps, const std::vector<double>& breakpoints) {
    if (horizon <= 0.0 || n_steps < 1)
        throw std::invalid_argument("make_grid: horizon must be positive and n_steps >= 1");
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n_steps) + breakpoints.size() + 1);
    for (int k = 0; k <= n_steps; ++k)
        g.push_back(horizon * static_cast<double>(k) / static_cast<double>(n_steps));
    for (double b : breakpoints)
        if (b > 0.0 && b < horizon) g.push_back(b);
    std::sort(g.begin(), g.end());
    // drop near-duplicates: degenerate steps add nothing
    const double tol = 1e-12 * std::max(1.0, horizon);
    std::vector<double> out;
    out.reserve(g.size());
    for (double t : g)
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    out.front() = 0.0;
    out.back() = horizon;
    return out;
}

namespace {

void check_finite(const Eigen::VectorXd& dy, double t) {
    if (!dy.allFinite()) {
        std::ostringstream os;
        os << "ODE integration failure: rhs returned a non-finite value at t=" << t;
        throw SolverError(os.str());
    }
}

// One RK4 step from t0 to t1 (either direction). Stage times equal to the
// segment's lower endpoint are nudged one ulp up (see header).
void rk4_step(const OdeRhs& rhs, double t0, double t1, const Eigen::VectorXd& y0,
              Eigen::VectorXd& y1, Eigen::VectorXd& k1, Eigen::VectorXd& k2,
              Eigen::VectorXd& k3, Eigen::VectorXd& k4, Eigen::VectorXd& work) {
    const double h = t1 - t0;
    const double lo = std::min(t0, t1), hi = std::max(t0, t1);
    auto stage_time = [&](double t) { return t == lo ? std::nextafter(lo, hi) : t; };
    const double tm = stage_time(0.5 * (t0 + t1));

    rhs(stage_time(t0), y0, k1);
    check_finite(k1, t0);
    work = y0 + (0.5 * h) * k1;
    rhs(tm, work, k2);
    check_finite(k2, tm);
    work = y0 + (0.5 * h) * k2;
    rhs(tm, work, k3);
    check_finite(k3, tm);
    work = y0 + h * k3;
    rhs(stage_time(t1), work, k4);
    check_finite(k4, t1);
    y1 = y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

GridFunction integrate(const OdeRhs& rhs, const Eigen::VectorXd& boundary,
                       const std::vector<double>& grid, bool backward) {
    if (grid.size() < 2) throw std::invalid_argument("integrate: grid needs >= 2 nodes");
    const int n = static_cast<int>(grid.size());
    const int d = static_cast<int>(boundary.size());
    Eigen::MatrixXd values(d, n);
    Eigen::VectorXd y = boundary, ynext(d), k1(d), k2(d), k3(d), k4(d), work(d);

    if (backward) {
        values.col(n - 1) = boundary;
        for (int k = n - 1; k > 0; --k) {
            rk4_step(rhs, grid[k], grid[k - 1], y, ynext, k1, k2, k3, k4, work);
            y = ynext;
            values.col(k - 1) = y;
        }
    } else {
        values.col(0) = boundary;
        for (int k = 0; k + 1 < n; ++k) {
            rk4_step(rhs, grid[k], grid[k + 1], y, ynext, k1, k2, k3, k4, work);
            y = ynext;
            values.col(k + 1) = y;
        }
    }
    return GridFunction(grid, std::move(values));
}

} // namespace

GridFunction integrate_backward(const OdeRhs& rhs, const Eigen::VectorXd& terminal,
                                const std::vector<double>& grid) {
    return integrate(rhs, terminal, grid, true);
}

GridFunction integrate_forward(const OdeRhs& rhs, const Eigen::VectorXd& initial,
                               const std::vector<double>& grid) {
    return integrate(rhs, initial, grid, false);
}

double richardson_error(const OdeRhs& rhs, const Eigen::VectorXd& terminal,
                        const std::vector<double>& grid) {
    std::vector<double> fine;
    fine.reserve(2 * grid.size());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        fine.push_back(grid[k]);
        fine.push_back(0.5 * (grid[k] + grid[k + 1]));
    }
    fine.push_back(grid.back());
    GridFunction coarse = integrate_backward(rhs, terminal, grid);
    GridFunction refined = integrate_backward(rhs, terminal, fine);
    return (coarse.at_node(0) - refined.at_node(0)).cwiseAbs().maxCoeff();
}

} // namespace regime_mv
