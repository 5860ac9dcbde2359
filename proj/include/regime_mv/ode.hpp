#ifndef REGIME_MV_ODE_HPP
#define REGIME_MV_ODE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "regime_mv/errors.hpp"

namespace regime_mv {

// Dense trajectory on a fixed time grid; linear interpolation between nodes.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::vector<double> grid, Eigen::MatrixXd values);

    int dim() const { return static_cast<int>(values_.rows()); }
    int nodes() const { return static_cast<int>(grid_.size()); }
    const std::vector<double>& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }
    double t_front() const { return grid_.front(); }
    double t_back() const { return grid_.back(); }

    Eigen::VectorXd at_node(int k) const { return values_.col(k); }

    // Linear interpolation; throws std::out_of_range outside [grid.front, grid.back].
    Eigen::VectorXd operator()(double t) const;
    void eval_into(double t, Eigen::Ref<Eigen::VectorXd> out) const;
    double component(double t, int k) const;

private:
    int locate(double t) const;

    std::vector<double> grid_;   // ascending
    Eigen::MatrixXd values_;     // dim x nodes, one column per node
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

// Uniform N-step grid on [0, T] with the given breakpoints inserted as nodes,
// so a piecewise-constant RHS is smooth within every step.
std::vector<double> make_grid(double horizon, int n_steps, const std::vector<double>& breakpoints = {});

// Classical fixed-step RK4 from grid.back() down to grid.front();
// values at grid.back() equal `terminal` exactly.
//
// Stage times that fall on a step's lower node are nudged one ulp into the
// step: left-continuous coefficient tables then resolve to the segment the
// step actually lies in. For an rhs smooth in t the nudge is a no-op.
GridFunction integrate_backward(const OdeRhs& rhs, const Eigen::VectorXd& terminal,
                                const std::vector<double>& grid);

// Same scheme run forward from grid.front(); used for the regime marginal law.
GridFunction integrate_forward(const OdeRhs& rhs, const Eigen::VectorXd& initial,
                               const std::vector<double>& grid);

// Max-norm discrepancy at t = 0 between the given grid and its half-step
// refinement; convergence diagnostic.
double richardson_error(const OdeRhs& rhs, const Eigen::VectorXd& terminal,
                        const std::vector<double>& grid);

} // namespace regime_mv

#endif
