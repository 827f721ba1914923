#include "bilinctl/errors.hpp"
#include "bilinctl/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bilinctl;

namespace {
constexpr double kPi = std::numbers::pi;

double max_abs(const Eigen::MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}
}  // namespace

TEST_CASE("heat with b2 = 0 has no bilinear terms")
{
    HeatConfig c;
    c.b2 = {"zero", 1.0};
    c.M = 16;
    const ProblemInstance p = build_heat(c);
    CHECK(max_abs(p.B2) == 0.0);
    CHECK(max_abs(p.M1) == 0.0);
    CHECK(max_abs(p.M2) == 0.0);
}

TEST_CASE("heat generator has the Dirichlet eigenvalues")
{
    HeatConfig c;
    c.M = 16;
    const ProblemInstance p = build_heat(c);
    const Eigen::VectorXd Ae1 = p.A * Eigen::VectorXd::Unit(p.dim(), 0);
    CHECK(Ae1[0] == doctest::Approx(kPi * kPi).epsilon(1e-14));
    CHECK(Ae1.tail(p.dim() - 1).norm() == 0.0);
    CHECK(p.dim() == 8);
}

TEST_CASE("heat commutator: closed form agrees with the truncated commutator and improves with N")
{
    double previous = 1.0;
    for (int n : {8, 16, 32}) {
        HeatConfig c;
        c.N = n;
        c.M = 16;
        c.b2 = {"sin2", 1.0};
        const ProblemInstance p = build_heat(c);
        const double d = p.family_data.commutator_discrepancy;
        if (n == 16) {
            CHECK(d <= 1e-3);
        }
        CHECK(d < previous);
        previous = d;
    }
}

TEST_CASE("heat builder rejects profiles that do not vanish on the boundary")
{
    HeatConfig c;
    c.b2 = {"constant", 1.0};
    CHECK_THROWS_AS(build_heat(c), Error);
    c.b2 = {"nosuch", 1.0};
    CHECK_THROWS_AS(build_heat(c), Error);
}

TEST_CASE("wave: free flow conserves energy and B2 is nilpotent")
{
    WaveConfig c;
    c.b2 = {"zero", 1.0};
    c.N = 6;
    c.M = 16;
    const ProblemInstance free = build_wave(c);
    CHECK(max_abs(free.B2) == 0.0);
    const Eigen::VectorXd y0 = Eigen::VectorXd::LinSpaced(free.dim(), 1.0, -1.0);
    CHECK(std::abs(free.op.semigroup(1.0, y0).norm() - y0.norm()) <= 1e-10);

    WaveConfig d;
    d.N = 16;
    d.M = 16;
    const ProblemInstance p = build_wave(d);
    CHECK(max_abs(p.B2 * p.B2) == 0.0);
    CHECK(max_abs(p.M2) == 0.0);
    CHECK(p.family_data.commutator_discrepancy <= 1e-3);

    WaveConfig e = d;
    e.N = 32;
    CHECK(build_wave(e).family_data.commutator_discrepancy <= std::max(p.family_data.commutator_discrepancy, 1e-14));
}

TEST_CASE("scalar toy with scalar coefficients")
{
    ToyConfig c;
    c.M = 8;
    const ProblemInstance p = build_scalar_toy(c);
    CHECK(p.dim() == 1);
    CHECK(p.B2(0, 0) == 1.0);
    CHECK(p.M1(0, 0) == 0.0);
    CHECK(p.A(0, 0) == 1.0);
}

TEST_CASE("profiles")
{
    for (const auto& name : profile_names()) {
        const ProfileFunctions f = make_profile({name, 2.0});
        if (f.is_zero) {
            continue;
        }
        // Finite-difference check of the first and second derivatives at an interior point.
        const double x = 0.37;
        const double h = 1e-4;
        CHECK(f.first(x) == doctest::Approx((f.value(x + h) - f.value(x - h)) / (2 * h)).epsilon(1e-6));
        CHECK(f.second(x) == doctest::Approx((f.first(x + h) - f.first(x - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("instance validation catches shape errors")
{
    HeatConfig c;
    c.M = 8;
    ProblemInstance p = build_heat(c);
    p.B1 = Eigen::VectorXd::Zero(p.dim() + 1);
    CHECK_THROWS_AS(p.validate(), Error);
}
