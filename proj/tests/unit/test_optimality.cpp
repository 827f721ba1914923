#include "bilinctl/errors.hpp"
#include "bilinctl/optimality.hpp"
#include "bilinctl/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace bilinctl;

namespace {

const Bounds kBounds{-1.0, 1.0};

ProblemInstance no_control_toy(double alpha, int M = 64)
{
    ToyConfig c;
    c.M = M;
    c.b1 = 0.0;
    c.b2 = 0.0;
    c.alpha = alpha;
    return build_scalar_toy(c);
}

}  // namespace

TEST_CASE("arc detection")
{
    const TimeGrid g(1.0, 16);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(17);

    const ArcStructure lower = detect_arcs(ControlSignal(g, -1.0), kBounds, zero);
    REQUIRE(lower.arcs.size() == 1);
    CHECK(lower.arcs[0].kind == ArcKind::Lower);
    CHECK(lower.arcs[0].t_start == 0.0);
    CHECK(lower.arcs[0].t_end == 1.0);
    CHECK(lower.bang_bang.empty());

    Eigen::VectorXd step(17);
    for (int i = 0; i <= 16; ++i) {
        step[i] = i < 8 ? -1.0 : 1.0;
    }
    const ArcStructure bb = detect_arcs(ControlSignal(g, step), kBounds, zero);
    REQUIRE(bb.arcs.size() == 2);
    CHECK(bb.junctions == std::vector<double>{0.5});
    CHECK(bb.bang_bang == std::vector<double>{0.5});

    const ArcStructure singular = detect_arcs(ControlSignal(g, 0.0), kBounds, zero);
    REQUIRE(singular.arcs.size() == 1);
    CHECK(singular.arcs[0].kind == ArcKind::Singular);
    CHECK(singular.has_singular());

    // Runs shorter than three nodes are absorbed by a neighbour.
    Eigen::VectorXd blip = Eigen::VectorXd::Constant(17, -1.0);
    blip[5] = 0.0;
    blip[6] = 0.0;
    CHECK(detect_arcs(ControlSignal(g, blip), kBounds, zero).arcs.size() == 1);

    CHECK_THROWS_AS(detect_arcs(ControlSignal(), kBounds, Eigen::VectorXd()), Error);
}

TEST_CASE("first-order residual")
{
    const TimeGrid g(1.0, 8);
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(9, 0.3);
    CHECK(first_order_residual(ControlSignal(g, -1.0), kBounds, lambda) == 0.0);
    CHECK(first_order_residual(ControlSignal(g, 1.0), kBounds, lambda) == doctest::Approx(0.3));
    CHECK(lambda_scale(lambda) == doctest::Approx(0.3));
}

TEST_CASE("PC2 projection and sampling")
{
    const TimeGrid g(1.0, 32);
    const ArcStructure singular = arcs_from_kinds(g, std::vector<ArcKind>(33, ArcKind::Singular));
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(33, 0.0, 2.0);
    const CriticalDirection same = project_pc2(singular, w);
    CHECK((same.w - w).norm() == 0.0);
    CHECK(same.h == 2.0);

    const ArcStructure lower = arcs_from_kinds(g, std::vector<ArcKind>(33, ArcKind::Lower));
    const CriticalDirection zero = project_pc2(lower, w);
    CHECK(zero.w.norm() == 0.0);
    CHECK(zero.h == 0.0);

    // singular / upper: constant on the final boundary arc, equal to h.
    std::vector<ArcKind> kinds(33, ArcKind::Singular);
    for (int i = 20; i <= 32; ++i) {
        kinds[i] = ArcKind::Upper;
    }
    const ArcStructure su = arcs_from_kinds(g, kinds);
    const CriticalDirection d = project_pc2(su, w);
    CHECK(d.w.tail(13).maxCoeff() == d.w.tail(13).minCoeff());
    CHECK(d.h == d.w[32]);
    CHECK((d.w.head(20) - w.head(20)).norm() == 0.0);

    // lower / upper / lower joined by bang-bang junctions: w has one constant, zero from the start.
    std::vector<ArcKind> bb(33, ArcKind::Lower);
    for (int i = 10; i <= 20; ++i) {
        bb[i] = ArcKind::Upper;
    }
    const CriticalDirection none = project_pc2(arcs_from_kinds(g, bb), w);
    CHECK(none.w.norm() == 0.0);
    CHECK(none.h == 0.0);

    const auto a = sample_pc2(su, g, 8, 42);
    const auto b = sample_pc2(su, g, 8, 42);
    REQUIRE(a.size() == 8);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK((a[k].w - b[k].w).norm() == 0.0);
        CHECK(a[k].h == b[k].h);
    }
    CHECK((sample_pc2(su, g, 1, 43)[0].w - a[0].w).norm() > 0.0);
}

TEST_CASE("necessary scan and singular R check")
{
    HeatConfig c;
    c.M = 128;
    const ProblemInstance p = build_heat(c);
    const Reference ref = make_reference(p, ControlSignal(p.grid, 0.0));
    CriticalDirection zero;
    zero.w = Eigen::VectorXd::Zero(129);
    const NecessaryScan scan = necessary_scan(p, ref, {zero});
    CHECK(scan.min_qhat == 0.0);
    CHECK(scan.argmin == 0);

    const TimeGrid& g = p.grid;
    const ArcStructure bang = arcs_from_kinds(g, std::vector<ArcKind>(129, ArcKind::Upper));
    CHECK_FALSE(singular_r_check(Eigen::VectorXd::Ones(129), bang).applicable);
    const ArcStructure sing = arcs_from_kinds(g, std::vector<ArcKind>(129, ArcKind::Singular));
    Eigen::VectorXd R = Eigen::VectorXd::Constant(129, 2.0);
    R[64] = -0.5;
    const SingularRCheck r = singular_r_check(R, sing);
    CHECK(r.applicable);
    CHECK(r.min_r == -0.5);
    CHECK(r.scale == 2.0);

    HeatConfig flat = c;
    flat.b2 = {"zero", 1.0};
    const ProblemInstance pf = build_heat(flat);
    const Reference rf = make_reference(pf, ControlSignal(pf.grid, 0.0));
    CHECK(singular_r_check(r_series(pf, rf.psi, rf.p), sing).min_r == 0.0);
}

TEST_CASE("coercivity estimate")
{
    HeatConfig c;
    c.M = 128;
    c.b2 = {"zero", 1.0};
    const ProblemInstance p = build_heat(c);
    const Reference ref = make_reference(p, ControlSignal(p.grid, 0.0));
    const ArcStructure sing = arcs_from_kinds(p.grid, std::vector<ArcKind>(129, ArcKind::Singular));
    const CoercivityReport flat = coercivity_estimate(p, ref, sing, 8);
    CHECK(flat.alpha_hat >= -1e-8);
    CHECK(flat.diagonal_error <= 1e-10);

    HeatConfig d;
    d.M = 128;
    d.b2 = {"poly2", 20.0};
    const ProblemInstance q = build_heat(d);
    const Reference rq = make_reference(q, ControlSignal(q.grid, 0.2));
    CriticalDirection pure_h;
    pure_h.w = Eigen::VectorXd::Zero(129);
    pure_h.h = 1.0;
    const CoercivityReport one = coercivity_on_basis(q, rq, {pure_h});
    // Terminal term with xi = 0: q_T(B(T)) + <p(T), B2 B1 + B2^2 psi(T)> with B1 = 0.
    const Eigen::VectorXd bt = q.B1 + q.B2 * rq.psi[128];
    const double expected = bt.dot(q.cost.terminal_weight * bt) + rq.p[128].dot(q.B2 * q.B1 + q.B2 * q.B2 * rq.psi[128]);
    CHECK(one.alpha_hat == doctest::Approx(expected).epsilon(1e-12));

    const CoercivityReport full = coercivity_estimate(q, rq, sing, 6);
    CHECK(full.diagonal_error <= 1e-10 * std::max(1.0, full.form.cwiseAbs().maxCoeff()));
    CHECK(full.symmetry_error <= 1e-10 * std::max(1.0, full.form.cwiseAbs().maxCoeff()));
}

TEST_CASE("growth probe")
{
    ToyConfig c;
    c.M = 128;
    const ProblemInstance p = build_scalar_toy(c);
    const Reference ref = make_reference(p, ControlSignal(p.grid, 0.0));
    const GrowthReport none = growth_probe(p, ref, 4, {0.0}, 1);
    CHECK(none.evaluated == 0);
    CHECK(none.skipped == 4);

    // Without control terms the cost is independent of u.
    const ProblemInstance q = no_control_toy(0.0, 128);
    const Reference rq = make_reference(q, ControlSignal(q.grid, 0.0));
    const GrowthReport flat = growth_probe(q, rq, 10, {0.1, 0.05}, 3);
    CHECK(flat.evaluated == 20);
    CHECK(std::abs(flat.ratio_min) <= 1e-10);
}

TEST_CASE("structural hypotheses")
{
    const TimeGrid g(1.0, 32);
    const Eigen::VectorXd R = Eigen::VectorXd::Ones(33);
    const ArcStructure sing = arcs_from_kinds(g, std::vector<ArcKind>(33, ArcKind::Singular));
    const HypothesesReport s = structural_hypotheses_check(ControlSignal(g, 0.0), Eigen::VectorXd::Zero(33), R, sing, 1e-8);
    CHECK(s.passes);
    CHECK_FALSE(s.has_boundary_arcs);
    CHECK_FALSE(s.min_r_bang_bang.has_value());

    std::vector<ArcKind> kinds(33, ArcKind::Lower);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(33, -1.0);
    Eigen::VectorXd lambda(33);
    for (int i = 0; i <= 32; ++i) {
        lambda[i] = 0.5 - g.node(i);  // positive on the lower arc, negative on the upper arc
        if (i >= 16) {
            kinds[i] = ArcKind::Upper;
            u[i] = 1.0;
        }
    }
    const HypothesesReport bb =
        structural_hypotheses_check(ControlSignal(g, u), lambda, R, arcs_from_kinds(g, kinds), 1e-8);
    CHECK(bb.passes);
    CHECK(bb.has_boundary_arcs);
    CHECK(bb.min_boundary_lambda > 0.0);
    REQUIRE(bb.min_r_bang_bang.has_value());
    CHECK(*bb.min_r_bang_bang == 1.0);
}

TEST_CASE("solver on problems without control terms")
{
    const ProblemInstance pos = no_control_toy(0.5);
    const SolverResult lo = projected_gradient_solve(pos, ControlSignal(pos.grid, 0.0));
    CHECK(lo.converged);
    CHECK(lo.history.back().iteration <= 2);
    CHECK((lo.u.u.array() + 1.0).abs().maxCoeff() == 0.0);

    const ProblemInstance neg = no_control_toy(-0.5);
    const SolverResult hi = projected_gradient_solve(neg, ControlSignal(neg.grid, 0.0));
    CHECK(hi.converged);
    CHECK((hi.u.u.array() - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("solver on the heat benchmark")
{
    HeatConfig c;
    const ProblemInstance p = build_heat(c);
    const SolverResult res = projected_gradient_solve(p, ControlSignal(p.grid, 0.0));
    CHECK(res.converged);
    const Reference ref = make_reference(p, res.u);
    const Eigen::VectorXd density = discrete_gradient_density(p, res.u, ref.psi, ref.multiplier);
    CHECK(first_order_residual(res.u, p.bounds, density) <= 1e-6 * lambda_scale(density));
    CHECK(res.u.feasible());
}

TEST_CASE("clip")
{
    const TimeGrid g(1.0, 2);
    Eigen::VectorXd u(3);
    u << -3.0, 0.2, 5.0;
    const ControlSignal c = clip(ControlSignal(g, u), kBounds);
    CHECK(c.u[0] == -1.0);
    CHECK(c.u[1] == 0.2);
    CHECK(c.u[2] == 1.0);
}
