#pragma once

// Reduced cost, switching function, second-order forms before and after the
// Goh transform, and residuals of the exact identities that connect them.

#include "bilinctl/dynamics.hpp"
#include "bilinctl/problem.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bilinctl {

double cost(const ProblemInstance& prob, const ControlSignal& u);
double cost_of_state(const ProblemInstance& prob, const ControlSignal& u, const Trajectory& psi);

// alpha + <p_i, B1 + B2 psi_i> at each node.
Eigen::VectorXd switching_function(const ProblemInstance& prob, const Trajectory& psi, const Trajectory& p);

// Exact derivative of the discrete reduced cost with respect to u_i, divided by
// the trapezoid weight. multiplier comes from solve_adjoint. Approximates the
// switching function to O(dt^2) at interior nodes and O(dt) at t = 0 and t = T.
Eigen::VectorXd discrete_gradient_density(const ProblemInstance& prob, const ControlSignal& u,
                                          const Trajectory& psi, const Trajectory& multiplier);

// State, costate and switching function at a reference control.
struct Reference {
    ControlSignal u;
    Trajectory psi;
    Trajectory p;
    Trajectory multiplier;
    Eigen::VectorXd lambda;
    double cost = 0.0;
};

Reference make_reference(const ProblemInstance& prob, const ControlSignal& u);

struct GradientCheck {
    double analytic = 0.0;   // sum_i w_i g_i v_i with the discrete gradient density g
    double fd = 0.0;         // Richardson-extrapolated central difference
    double rel_err = 0.0;    // |analytic - fd| / max(1, |analytic|)
    double switching = 0.0;  // int Lambda v with the nodal switching function
    double switching_rel_err = 0.0;
    bool both_zero = false;
};

// Compares the directional derivative from the discrete gradient density, and
// from the nodal switching function, with finite differences of the cost.
GradientCheck gradient_check(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& v,
                             double sigma = 1e-2);

// int (q(z) + 2 v <p, B2 z>) + q_T(z(T)).
double quad_form_Q(const ProblemInstance& prob, const Trajectory& p_hat, const Trajectory& z, const ControlSignal& v);

double taylor_identity_residual(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& u);

struct GohTransform {
    Eigen::VectorXd w;
    double h = 0.0;
};

GohTransform goh_transform(const ControlSignal& v);

// xi' + A xi = u_hat B2 xi + w (-B2 f - M1 psi_hat - A B1), xi(0) = 0.
Trajectory solve_xi(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                    const Eigen::VectorXd& w);

// Weight of w^2 in the transformed form, from the truncated operators.
double r_abstract(const ProblemInstance& prob, double t, const Eigen::VectorXd& psi, const Eigen::VectorXd& p);
Eigen::VectorXd r_series(const ProblemInstance& prob, const Trajectory& psi, const Trajectory& p);

struct QuadReport {
    double Q_value = 0.0;  // filled by goh_equivalence; NaN otherwise
    double Qhat_T = 0.0;
    double Qhat_a = 0.0;
    double Qhat_b = 0.0;
    double Qhat_total = 0.0;
    double equivalence_residual = 0.0;
    // max_i |R_abstract - R_specialized|; NaN when no specialization exists.
    double r_discrepancy = 0.0;
    Eigen::VectorXd R;
};

QuadReport quad_form_Qhat(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                          const Trajectory& p_hat, const Trajectory& xi, const Eigen::VectorXd& w, double h,
                          bool cross_check_r = true);

// Same form with R supplied (no cross-check), for repeated evaluation.
double qhat_value(const ProblemInstance& prob, const Trajectory& psi_hat, const Trajectory& p_hat,
                  const Eigen::VectorXd& R, const Trajectory& xi, const Eigen::VectorXd& w, double h);

QuadReport goh_equivalence(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& v);

struct ExpansionReport {
    std::vector<double> sigma;
    std::vector<double> remainder_w;      // remainder of the Goh-form expansion
    std::vector<double> quadratic_scale;  // sigma^2 (|w|_2^2 + h^2)
    std::vector<double> remainder_cubic;  // remainder of the expansion with Q(z, v)
    double slope_w = 0.0;                 // log-log slope of remainder_w vs quadratic_scale
    double slope_cubic = 0.0;             // log-log slope of remainder_cubic vs sigma
    double max_cubic_ratio = 0.0;         // max remainder_cubic / sigma^3
    double min_cubic_ratio = 0.0;
    bool identically_zero = false;
};

ExpansionReport expansion_w_residual(const ProblemInstance& prob, const ControlSignal& u_hat,
                                     const ControlSignal& v, const std::vector<double>& sigmas);

// Least-squares slope of log(y) against log(x); nonpositive entries are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bilinctl
