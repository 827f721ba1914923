#include "bilinctl/dynamics.hpp"
#include "bilinctl/errors.hpp"
#include "bilinctl/objective.hpp"
#include "bilinctl/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bilinctl;

namespace {

ProblemInstance toy(int M, double b1 = 0.0, double b2 = 1.0)
{
    ToyConfig c;
    c.M = M;
    c.b1 = b1;
    c.b2 = b2;
    return build_scalar_toy(c);
}

}  // namespace

TEST_CASE("heat mode decays without control terms")
{
    HeatConfig c;
    c.b2 = {"zero", 1.0};
    c.T = 0.1;
    c.M = 64;
    const ProblemInstance p = build_heat(c);
    const Trajectory psi = solve_state(p, ControlSignal(p.grid, 0.7));
    // Oracle: exp(-pi^2 0.1) = 0.372707838853438.
    CHECK(psi[p.grid.M][0] == doctest::Approx(0.372707838853438).epsilon(1e-13));
}

TEST_CASE("scalar toy state with constant control")
{
    // Oracle: psi' = -psi/2, psi(1) = 0.606530659712635.
    const double h1 = std::abs(solve_state(toy(256), ControlSignal(toy(256).grid, 0.5))[256][0] - 0.606530659712635);
    const double h2 = std::abs(solve_state(toy(512), ControlSignal(toy(512).grid, 0.5))[512][0] - 0.606530659712635);
    CHECK(h1 <= 1e-6);
    CHECK(h1 / h2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("zero state stays zero")
{
    ToyConfig c;
    c.psi0 = 0.0;
    c.M = 32;
    const ProblemInstance p = build_scalar_toy(c);
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(33, -1.0, 1.0);
    CHECK(solve_state(p, ControlSignal(p.grid, u)).sup_norm() == 0.0);
}

TEST_CASE("linearized state")
{
    const ProblemInstance p = toy(1024);
    const ControlSignal u_hat(p.grid, 0.0);
    const Trajectory psi = solve_state(p, u_hat);
    CHECK(solve_linearized(p, u_hat, psi, ControlSignal(p.grid, 0.0)).sup_norm() == 0.0);
    const Trajectory z = solve_linearized(p, u_hat, psi, ControlSignal(p.grid, 1.0));
    // Oracle: z = t e^{-t}, z(1) = 0.367879441171442.
    CHECK(z[1024][0] == doctest::Approx(0.367879441171442).epsilon(1e-6));
    const Trajectory z2 = solve_linearized(p, u_hat, psi, ControlSignal(p.grid, 2.0));
    CHECK((z2 - 2.0 * z).sup_norm() <= 1e-12);
}

TEST_CASE("costate")
{
    ToyConfig c;
    c.M = 1024;
    c.terminal_weight = 0.0;
    const ProblemInstance p = build_scalar_toy(c);
    const ControlSignal u_hat(p.grid, 0.0);
    const Trajectory psi = solve_state(p, u_hat);
    const Trajectory costate = solve_costate(p, u_hat, psi);
    // Oracle: p(0) = (1 - e^{-2}) / 2 = 0.432332358381695.
    CHECK(costate[0][0] == doctest::Approx(0.432332358381695).epsilon(1e-6));
    CHECK(costate[1024][0] == 0.0);

    // State on target gives a zero costate.
    ToyConfig on_target;
    on_target.M = 64;
    on_target.psi0 = 0.0;
    const ProblemInstance q = build_scalar_toy(on_target);
    const ControlSignal u(q.grid, 0.3);
    CHECK(solve_costate(q, u, solve_state(q, u)).sup_norm() == 0.0);
}

TEST_CASE("discrete adjoint gives the exact derivative of the discrete functional")
{
    HeatConfig c;
    c.M = 64;
    c.b2 = {"poly2", 30.0};
    const ProblemInstance p = build_heat(c);
    Eigen::VectorXd u(65);
    for (int i = 0; i <= 64; ++i) {
        u[i] = 0.3 * std::sin(4.0 * p.grid.node(i));
    }
    const ControlSignal uc(p.grid, u);
    const Trajectory psi = solve_state(p, uc);
    const AdjointSolution adj = solve_adjoint(p, uc, psi);
    const Eigen::VectorXd s = step_sensitivity(p, uc, psi, adj.multiplier);
    // Perturb one interval mean through a single node and compare.
    const int node = 20;
    const double eps = 1e-6;
    Eigen::VectorXd up = u, dn = u;
    up[node] += eps;
    dn[node] -= eps;
    const double fd = (cost_of_state(p, ControlSignal(p.grid, up), solve_state(p, ControlSignal(p.grid, up))) -
                       cost_of_state(p, ControlSignal(p.grid, dn), solve_state(p, ControlSignal(p.grid, dn)))) /
                      (2.0 * eps);
    const double predicted = 0.5 * (s[node - 1] + s[node]) + p.cost.alpha * p.grid.weight(node);
    CHECK(predicted == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("perturbations")
{
    const ProblemInstance p = toy(256);
    const ControlSignal u_hat(p.grid, 0.2);
    const Perturbations same = perturbations(p, u_hat, u_hat);
    CHECK(same.delta.sup_norm() == 0.0);
    CHECK(same.eta.sup_norm() == 0.0);

    // Linear dynamics: the linearization is exact.
    const ProblemInstance lin = toy(256, 1.0, 0.0);
    const Perturbations exact = perturbations(lin, ControlSignal(lin.grid, 0.2), ControlSignal(lin.grid, 0.9));
    CHECK(exact.delta.sup_norm() > 0.1);
    CHECK(exact.eta.sup_norm() <= 1e-14);

    // eta is quadratic in the perturbation size.
    std::vector<double> sigma, eta;
    for (double s : {1.0, 0.5, 0.25, 0.125}) {
        Eigen::VectorXd u = u_hat.u;
        for (int i = 0; i <= 256; ++i) {
            u[i] += s * std::cos(3.0 * p.grid.node(i));
        }
        sigma.push_back(s);
        eta.push_back(perturbations(p, u_hat, ControlSignal(p.grid, u)).eta.sup_norm());
    }
    const double slope = std::log(eta.front() / eta.back()) / std::log(sigma.front() / sigma.back());
    CHECK(slope >= 1.9);
}

TEST_CASE("integration by parts residual")
{
    CHECK(ibp_residual(Trajectory(TimeGrid(1.0, 8), 1), {}, Trajectory(TimeGrid(1.0, 8), 1), {}) == 0.0);

    // y' + y = 1, y(0) = 0 and -p' + p = cos t, p(1) = 0: the residual is second order in h.
    // (With g = 1 the pair is symmetric under t -> 1 - t and the residual vanishes identically.)
    std::vector<double> residuals;
    for (int M : {64, 128, 256}) {
        const ProblemInstance p = toy(M);
        const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(1, 1);
        const Eigen::VectorXd c = Eigen::VectorXd::Zero(M);
        NodalSource ones(M + 1, Eigen::VectorXd::Ones(1));
        NodalSource g(M + 1);
        for (int i = 0; i <= M; ++i) {
            g[i] = Eigen::VectorXd::Constant(1, std::cos(p.grid.node(i)));
        }
        const Trajectory y =
            integrate_forward(p.op, p.grid, K, 0.0, c, StepSource::from_nodal(ones), Eigen::VectorXd::Zero(1));
        const Trajectory costate = integrate_backward(p.op, p.grid, K, 0.0, c, g, Eigen::VectorXd::Zero(1)).p;
        residuals.push_back(ibp_residual(y, ones, costate, g));
    }
    CHECK(residuals[0] / residuals[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(residuals[1] / residuals[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("a priori bound")
{
    ToyConfig zero;
    zero.psi0 = 0.0;
    zero.M = 32;
    const ProblemInstance pz = build_scalar_toy(zero);
    const AprioriReport rz = apriori_bound_check(pz, ControlSignal(pz.grid, 0.4));
    CHECK(rz.lhs == 0.0);
    CHECK(rz.holds);

    const ProblemInstance p = toy(512);
    const AprioriReport r = apriori_bound_check(p, ControlSignal(p.grid, 1.0));
    CHECK(r.lhs == doctest::Approx(1.0).epsilon(1e-5));  // the scheme is second order, not exact
    CHECK(r.rhs == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(r.holds);
}

TEST_CASE("step size control")
{
    // h = 1/4: the stage contracts with ratio |c| (h/n)/2 <= 1/4.
    const TimeGrid grid(1.0, 4);
    Eigen::VectorXd c(4);
    c << 0.0, 1.0, 4.0, 16.0;
    CHECK(substep_counts(grid, c, 1.0) == std::vector<int>{1, 1, 2, 8});
    c[3] = 100.0;
    CHECK_THROWS_AS(substep_counts(grid, c, 1.0), Error);
}

TEST_CASE("grid mismatch is a structural error")
{
    const ProblemInstance p = toy(16);
    CHECK_THROWS_AS(solve_state(p, ControlSignal(TimeGrid(1.0, 8), 0.0)), Error);
}
