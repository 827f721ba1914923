#include "bilinctl/objective.hpp"

#include "bilinctl/errors.hpp"
#include "bilinctl/problems.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace bilinctl {

namespace {

double quadratic(const Eigen::MatrixXd& weight, const Eigen::VectorXd& y)
{
    return y.dot(weight * y);
}

Eigen::VectorXd tracking_error(const ProblemInstance& prob, const Trajectory& psi, int i)
{
    return psi[i] - prob.cost.target_at(prob.grid.node(i), prob.dim());
}

ControlSignal shifted(const ControlSignal& u, double s, const ControlSignal& v)
{
    return ControlSignal(u.grid, Eigen::VectorXd(u.u + s * v.u));
}

}  // namespace

double cost_of_state(const ProblemInstance& prob, const ControlSignal& u, const Trajectory& psi)
{
    const TimeGrid& grid = prob.grid;
    Eigen::VectorXd running(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        running[i] = quadratic(prob.cost.running_weight, tracking_error(prob, psi, i));
    }
    const Eigen::VectorXd terminal = psi[grid.M] - prob.cost.terminal_target;
    return prob.cost.alpha * trapezoid(grid, u.u) + 0.5 * trapezoid(grid, running) +
           0.5 * quadratic(prob.cost.terminal_weight, terminal);
}

double cost(const ProblemInstance& prob, const ControlSignal& u)
{
    return cost_of_state(prob, u, solve_state(prob, u));
}

Eigen::VectorXd switching_function(const ProblemInstance& prob, const Trajectory& psi, const Trajectory& p)
{
    Eigen::VectorXd lambda(prob.grid.nodes());
    for (int i = 0; i <= prob.grid.M; ++i) {
        lambda[i] = prob.cost.alpha + p[i].dot(prob.B1 + prob.B2 * psi[i]);
    }
    return lambda;
}

Eigen::VectorXd discrete_gradient_density(const ProblemInstance& prob, const ControlSignal& u,
                                          const Trajectory& psi, const Trajectory& multiplier)
{
    const TimeGrid& grid = prob.grid;
    const Eigen::VectorXd s = step_sensitivity(prob, u, psi, multiplier);
    Eigen::VectorXd density(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        const double left = i > 0 ? s[i - 1] : 0.0;
        const double right = i < grid.M ? s[i] : 0.0;
        density[i] = prob.cost.alpha + 0.5 * (left + right) / grid.weight(i);
    }
    return density;
}

Reference make_reference(const ProblemInstance& prob, const ControlSignal& u)
{
    Reference ref;
    ref.u = u;
    ref.psi = solve_state(prob, u);
    AdjointSolution adjoint = solve_adjoint(prob, u, ref.psi);
    ref.p = std::move(adjoint.p);
    ref.multiplier = std::move(adjoint.multiplier);
    ref.lambda = switching_function(prob, ref.psi, ref.p);
    ref.cost = cost_of_state(prob, u, ref.psi);
    return ref;
}

GradientCheck gradient_check(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& v,
                             double sigma)
{
    const Reference ref = make_reference(prob, u_hat);
    GradientCheck check;
    const Eigen::VectorXd density = discrete_gradient_density(prob, u_hat, ref.psi, ref.multiplier);
    check.analytic = trapezoid(prob.grid, Eigen::VectorXd(density.cwiseProduct(v.u)));
    check.switching = trapezoid(prob.grid, Eigen::VectorXd(ref.lambda.cwiseProduct(v.u)));

    auto central = [&](double s) {
        return (cost(prob, shifted(u_hat, s, v)) - cost(prob, shifted(u_hat, -s, v))) / (2.0 * s);
    };
    const double d1 = central(sigma);
    const double d2 = central(0.5 * sigma);
    const double d4 = central(0.25 * sigma);
    const double r1 = (4.0 * d2 - d1) / 3.0;
    const double r2 = (4.0 * d4 - d2) / 3.0;
    check.fd = (16.0 * r2 - r1) / 15.0;

    if (std::abs(check.analytic) < 1e-14 && std::abs(check.fd) < 1e-14) {
        check.both_zero = true;
        check.rel_err = 0.0;
        return check;
    }
    check.rel_err = std::abs(check.analytic - check.fd) / std::max(1.0, std::abs(check.analytic));
    check.switching_rel_err = std::abs(check.switching - check.fd) / std::max(1.0, std::abs(check.switching));
    return check;
}

double quad_form_Q(const ProblemInstance& prob, const Trajectory& p_hat, const Trajectory& z, const ControlSignal& v)
{
    const TimeGrid& grid = prob.grid;
    Eigen::VectorXd integrand(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        integrand[i] = quadratic(prob.cost.running_weight, z[i]) + 2.0 * v[i] * p_hat[i].dot(prob.B2 * z[i]);
    }
    return trapezoid(grid, integrand) + quadratic(prob.cost.terminal_weight, z[grid.M]);
}

double taylor_identity_residual(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& u)
{
    const Reference ref = make_reference(prob, u_hat);
    const ControlSignal v = difference(u, u_hat);
    const Trajectory psi = solve_state(prob, u);
    const Trajectory delta = psi - ref.psi;
    const double first = trapezoid(prob.grid, Eigen::VectorXd(ref.lambda.cwiseProduct(v.u)));
    const double second = 0.5 * quad_form_Q(prob, ref.p, delta, v);
    return std::abs(cost_of_state(prob, u, psi) - ref.cost - first - second);
}

GohTransform goh_transform(const ControlSignal& v)
{
    GohTransform out;
    out.w = cumulative_trapezoid(v.grid, v.u);
    out.h = out.w[v.grid.M];
    return out;
}

Trajectory solve_xi(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                    const Eigen::VectorXd& w)
{
    const TimeGrid& grid = prob.grid;
    if (w.size() != grid.nodes()) {
        throw Error(ErrorKind::Structural, "w does not match the grid");
    }
    NodalSource b(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        const Eigen::VectorXd source =
            -prob.B2 * prob.forcing_at(grid.node(i)) - prob.M1 * psi_hat[i] - prob.AB1;
        b[i] = w[i] * source;
    }
    return integrate_forward(prob.op, grid, prob.B2, prob.B2_norm, step_means(u_hat.u), StepSource::from_nodal(b),
                             Eigen::VectorXd::Zero(prob.dim()));
}

double r_abstract(const ProblemInstance& prob, double t, const Eigen::VectorXd& psi, const Eigen::VectorXd& p)
{
    const Eigen::VectorXd b_hat = prob.B1 + prob.B2 * psi;
    const Eigen::VectorXd error = psi - prob.cost.target_at(t, prob.dim());
    const Eigen::VectorXd b2_b1 = prob.B2 * prob.B1;
    const Eigen::VectorXd source = prob.B2 * (prob.B2 * prob.forcing_at(t)) - prob.A * b2_b1 +
                                   2.0 * (prob.B2 * prob.AB1) - prob.bracket * psi;
    return quadratic(prob.cost.running_weight, b_hat) + error.dot(prob.cost.running_weight * (prob.B2 * b_hat)) +
           p.dot(source);
}

Eigen::VectorXd r_series(const ProblemInstance& prob, const Trajectory& psi, const Trajectory& p)
{
    Eigen::VectorXd R(prob.grid.nodes());
    for (int i = 0; i <= prob.grid.M; ++i) {
        R[i] = r_abstract(prob, prob.grid.node(i), psi[i], p[i]);
    }
    return R;
}

double qhat_value(const ProblemInstance& prob, const Trajectory& psi_hat, const Trajectory& p_hat,
                  const Eigen::VectorXd& R, const Trajectory& xi, const Eigen::VectorXd& w, double h)
{
    QuadReport report;
    const TimeGrid& grid = prob.grid;
    const int m = grid.M;
    const Eigen::MatrixXd& Q = prob.cost.running_weight;

    const Eigen::VectorXd b_hat_T = prob.B1 + prob.B2 * psi_hat[m];
    const double terminal = quadratic(prob.cost.terminal_weight, xi[m] + h * b_hat_T) +
                            h * h * p_hat[m].dot(prob.B2 * b_hat_T) + 2.0 * h * p_hat[m].dot(prob.B2 * xi[m]);

    Eigen::VectorXd a_integrand(grid.nodes());
    Eigen::VectorXd b_integrand(grid.nodes());
    for (int i = 0; i <= m; ++i) {
        const Eigen::VectorXd b_hat = prob.B1 + prob.B2 * psi_hat[i];
        const Eigen::VectorXd error = tracking_error(prob, psi_hat, i);
        const Eigen::VectorXd q_xi = Q * xi[i];
        a_integrand[i] = xi[i].dot(q_xi) + 2.0 * w[i] * q_xi.dot(b_hat) +
                         2.0 * w[i] * (Q * error).dot(prob.B2 * xi[i]) - 2.0 * w[i] * p_hat[i].dot(prob.M1 * xi[i]);
        b_integrand[i] = w[i] * w[i] * R[i];
    }
    return terminal + trapezoid(grid, a_integrand) + trapezoid(grid, b_integrand);
}

QuadReport quad_form_Qhat(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                          const Trajectory& p_hat, const Trajectory& xi, const Eigen::VectorXd& w, double h,
                          bool cross_check_r)
{
    (void)u_hat;
    const TimeGrid& grid = prob.grid;
    const int m = grid.M;
    const Eigen::MatrixXd& Q = prob.cost.running_weight;
    QuadReport report;
    report.Q_value = std::numeric_limits<double>::quiet_NaN();
    report.equivalence_residual = std::numeric_limits<double>::quiet_NaN();
    report.R = r_series(prob, psi_hat, p_hat);

    const Eigen::VectorXd b_hat_T = prob.B1 + prob.B2 * psi_hat[m];
    report.Qhat_T = quadratic(prob.cost.terminal_weight, xi[m] + h * b_hat_T) +
                    h * h * p_hat[m].dot(prob.B2 * b_hat_T) + 2.0 * h * p_hat[m].dot(prob.B2 * xi[m]);

    Eigen::VectorXd a_integrand(grid.nodes());
    Eigen::VectorXd b_integrand(grid.nodes());
    for (int i = 0; i <= m; ++i) {
        const Eigen::VectorXd b_hat = prob.B1 + prob.B2 * psi_hat[i];
        const Eigen::VectorXd error = tracking_error(prob, psi_hat, i);
        const Eigen::VectorXd q_xi = Q * xi[i];
        a_integrand[i] = xi[i].dot(q_xi) + 2.0 * w[i] * q_xi.dot(b_hat) +
                         2.0 * w[i] * (Q * error).dot(prob.B2 * xi[i]) - 2.0 * w[i] * p_hat[i].dot(prob.M1 * xi[i]);
        b_integrand[i] = w[i] * w[i] * report.R[i];
    }
    report.Qhat_a = trapezoid(grid, a_integrand);
    report.Qhat_b = trapezoid(grid, b_integrand);
    report.Qhat_total = report.Qhat_T + report.Qhat_a + report.Qhat_b;

    report.r_discrepancy = std::numeric_limits<double>::quiet_NaN();
    if (cross_check_r && prob.family_data.has_r_specialization) {
        double worst = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double special = r_specialized(prob, grid.node(i), psi_hat[i], p_hat[i]);
            worst = std::max(worst, std::abs(special - report.R[i]));
        }
        report.r_discrepancy = worst;
    }
    return report;
}

QuadReport goh_equivalence(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& v)
{
    const Reference ref = make_reference(prob, u_hat);
    const Trajectory z = solve_linearized(prob, u_hat, ref.psi, v);
    const GohTransform goh = goh_transform(v);
    const Trajectory xi = solve_xi(prob, u_hat, ref.psi, goh.w);
    QuadReport report = quad_form_Qhat(prob, u_hat, ref.psi, ref.p, xi, goh.w, goh.h);
    report.Q_value = quad_form_Q(prob, ref.p, z, v);
    report.equivalence_residual = std::abs(report.Q_value - report.Qhat_total);
    return report;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            const double lx = std::log(x[i]);
            const double ly = std::log(y[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n;
        }
    }
    if (n < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double denom = n * sxx - sx * sx;
    return denom == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / denom;
}

ExpansionReport expansion_w_residual(const ProblemInstance& prob, const ControlSignal& u_hat,
                                     const ControlSignal& v, const std::vector<double>& sigmas)
{
    const Reference ref = make_reference(prob, u_hat);
    const TimeGrid& grid = prob.grid;
    const double first = trapezoid(grid, Eigen::VectorXd(ref.lambda.cwiseProduct(v.u)));
    const Trajectory z = solve_linearized(prob, u_hat, ref.psi, v);
    const double q_value = quad_form_Q(prob, ref.p, z, v);
    const GohTransform goh = goh_transform(v);
    const Trajectory xi = solve_xi(prob, u_hat, ref.psi, goh.w);
    const Eigen::VectorXd R = r_series(prob, ref.psi, ref.p);
    const double qhat = qhat_value(prob, ref.psi, ref.p, R, xi, goh.w, goh.h);
    const double w_norm2 = trapezoid(grid, Eigen::VectorXd(goh.w.cwiseProduct(goh.w))) + goh.h * goh.h;

    ExpansionReport report;
    report.min_cubic_ratio = std::numeric_limits<double>::infinity();
    bool all_tiny = true;
    for (double s : sigmas) {
        const double delta_f = cost(prob, shifted(u_hat, s, v)) - ref.cost;
        const double rw = std::abs(delta_f - s * first - 0.5 * s * s * qhat);
        const double rc = std::abs(delta_f - s * first - 0.5 * s * s * q_value);
        report.sigma.push_back(s);
        report.remainder_w.push_back(rw);
        report.quadratic_scale.push_back(s * s * w_norm2);
        report.remainder_cubic.push_back(rc);
        const double ratio = rc / (s * s * s);
        report.max_cubic_ratio = std::max(report.max_cubic_ratio, ratio);
        report.min_cubic_ratio = std::min(report.min_cubic_ratio, ratio);
        all_tiny = all_tiny && rw < 1e-13;
    }
    report.identically_zero = all_tiny && !sigmas.empty();
    report.slope_w = loglog_slope(report.quadratic_scale, report.remainder_w);
    report.slope_cubic = loglog_slope(report.sigma, report.remainder_cubic);
    return report;
}

}  // namespace bilinctl
