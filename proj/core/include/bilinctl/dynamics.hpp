#pragma once

// Time integration of state, linearized state, costate and perturbation
// equations in coefficient space.
//
// Controls are nodal and piecewise linear; each step [t_i, t_{i+1}] sees the
// interval mean c_i = (u_i + u_{i+1}) / 2. For y' + A y = c K y + b the step is
//   y_{i+1} = E (y_i + h/2 (c_i K y_i + b_i^L)) + h/2 (c_i K y_{i+1} + b_i^R),
// with E = exp(-h A) and per-step sources b^L, b^R at the two ends. The
// implicit dependence on y_{i+1} is resolved by fixed-point iteration.
//
// The backward solver is the exact discrete adjoint of this scheme. It yields
// the step multipliers (used for exact discrete gradients) and a nodal costate
// p that approximates -p' + A^T p = c K^T p + g, p(T) = pT, to second order.

#include "bilinctl/grid.hpp"
#include "bilinctl/problem.hpp"
#include "bilinctl/spectral.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bilinctl {

struct IntegratorOptions {
    int max_fixed_point_iterations = 20;
    double fixed_point_tolerance = 1e-12;
    int max_step_halvings = 3;
};

// Nodal values; an empty vector stands for zero.
using NodalSource = std::vector<Eigen::VectorXd>;

// Step sources: step i uses left[i] at t_i and right[i] at t_{i+1}.
// Empty vectors stand for zero.
struct StepSource {
    std::vector<Eigen::VectorXd> left;
    std::vector<Eigen::VectorXd> right;

    bool empty() const { return left.empty(); }
    static StepSource from_nodal(const NodalSource& b);
};

// Interval means (u_i + u_{i+1}) / 2, one per step.
Eigen::VectorXd step_means(const Eigen::VectorXd& nodal);

// Substeps per interval: the smallest power of two (at most 2^max_step_halvings)
// for which the implicit stage contracts with ratio <= 1/4. Throws a step-size
// error when even the finest subdivision does not contract.
std::vector<int> substep_counts(const TimeGrid& grid, const Eigen::VectorXd& c, double k_norm,
                                const IntegratorOptions& options = {});

// y' + A y = c K y + b, y(0) = y0. k_norm bounds the spectral norm of K.
Trajectory integrate_forward(const SpectralOperator& op, const TimeGrid& grid, const Eigen::MatrixXd& K,
                             double k_norm, const Eigen::VectorXd& c, const StepSource& b,
                             const Eigen::VectorXd& y0, const IntegratorOptions& options = {});

struct AdjointSolution {
    Trajectory p;           // nodal costate
    Trajectory multiplier;  // multiplier[i + 1] belongs to step i; multiplier[0] is unused (zero)
};

// Adjoint of the functional sum_i w_i <g_i, y_i> + <pT, y_M> (trapezoid weights w_i).
AdjointSolution integrate_backward(const SpectralOperator& op, const TimeGrid& grid, const Eigen::MatrixXd& K,
                                   double k_norm, const Eigen::VectorXd& c, const NodalSource& g,
                                   const Eigen::VectorXd& pT, const IntegratorOptions& options = {});

Trajectory solve_state(const ProblemInstance& prob, const ControlSignal& u);

// z' + A z = u_hat B2 z + v (B1 + B2 psi_hat), z(0) = 0.
Trajectory solve_linearized(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                            const ControlSignal& v);

// -p' + A^T p = Q (psi - target) + u B2^T p, p(T) = Q_T (psi(T) - terminal target).
AdjointSolution solve_adjoint(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat);
Trajectory solve_costate(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat);

// Derivative of the state-dependent part of the discrete cost with respect to
// each interval mean c_i, given the step multipliers of solve_adjoint.
Eigen::VectorXd step_sensitivity(const ProblemInstance& prob, const ControlSignal& u, const Trajectory& psi,
                                 const Trajectory& multiplier);

// Nodal running-cost gradients Q (psi_i - target(t_i)).
NodalSource tracking_source(const ProblemInstance& prob, const Trajectory& psi);
Eigen::VectorXd terminal_costate(const ProblemInstance& prob, const Trajectory& psi);

struct Perturbations {
    Trajectory delta;  // psi[u] - psi[u_hat]
    Trajectory eta;    // delta - z[u - u_hat]
};

Perturbations perturbations(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& u);

// |<p(T), y(T)> + int <g, y> - <p(0), y(0)> - int <p, b>| with trapezoid integrals.
double ibp_residual(const Trajectory& y, const NodalSource& b, const Trajectory& p, const NodalSource& g);

struct AprioriReport {
    double lhs = 0.0;  // sup_t |psi(t)|
    double rhs = 0.0;  // explicit Gronwall bound with c = 1, lambda = max(0, -gamma)
    bool holds = true;
};

AprioriReport apriori_bound_check(const ProblemInstance& prob, const ControlSignal& u);

// Pointwise v = u - u_hat on a shared grid.
ControlSignal difference(const ControlSignal& u, const ControlSignal& u_hat);

}  // namespace bilinctl
