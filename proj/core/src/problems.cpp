#include "bilinctl/problems.hpp"

#include "bilinctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bilinctl {

const char* to_string(Family family)
{
    switch (family) {
    case Family::Heat: return "heat";
    case Family::Wave: return "wave";
    case Family::ScalarToy: return "scalar_toy";
    }
    return "unknown";
}

Eigen::VectorXd CostSpec::target_at(double t, int dim) const
{
    return target ? target(t) : Eigen::VectorXd::Zero(dim);
}

Eigen::VectorXd ProblemInstance::forcing_at(double t) const
{
    return forcing ? forcing(t) : Eigen::VectorXd::Zero(dim());
}

void ProblemInstance::assemble_commutators()
{
    const Eigen::MatrixXd b2_squared = B2 * B2;
    M1 = A * B2 - B2 * A;
    M2 = A * b2_squared - b2_squared * A;
    bracket = M1 * B2 - B2 * M1;
    AB1 = A * B1;
    B2_norm = B2.size() == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(B2).singularValues()(0);
}

void ProblemInstance::validate() const
{
    const int n = dim();
    auto square = [n](const Eigen::MatrixXd& m) { return m.rows() == n && m.cols() == n; };
    if (A.rows() != n || !square(A) || !square(B2) || B1.size() != n || psi0.size() != n ||
        !square(cost.running_weight) || !square(cost.terminal_weight) || cost.terminal_target.size() != n) {
        throw Error(ErrorKind::Structural, "problem data dimensions disagree with the operator");
    }
    auto symmetric = [](const Eigen::MatrixXd& m) {
        return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
    };
    if (!symmetric(cost.running_weight) || !symmetric(cost.terminal_weight)) {
        throw Error(ErrorKind::Validation, "cost weights must be symmetric");
    }
    if (!(bounds.lower < bounds.upper)) {
        throw Error(ErrorKind::Validation, "control bounds need lower < upper");
    }
}

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd padded(const std::vector<double>& values, int n, const char* field)
{
    if (static_cast<int>(values.size()) > n) {
        throw Error(ErrorKind::Validation, std::string(field) + " has more coefficients than modes");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < values.size(); ++k) {
        out[k] = values[k];
    }
    return out;
}

void require_vanishing(const ProfileFunctions& f, const char* what)
{
    const double scale = 1.0 + std::abs(f.value(0.5));
    if (std::abs(f.value(0.0)) > 1e-12 * scale || std::abs(f.value(1.0)) > 1e-12 * scale) {
        throw Error(ErrorKind::Validation, std::string(what) + " profile must vanish at x = 0 and x = 1");
    }
}

double leading_block_discrepancy(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other, int block)
{
    const Eigen::MatrixXd r = reference.topLeftCorner(block, block);
    const Eigen::MatrixXd o = other.topLeftCorner(block, block);
    const double scale = r.cwiseAbs().maxCoeff();
    const double diff = (r - o).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

// The truncated bracket M1 B2 - B2 M1 is polluted by the missing modes, so the
// sign is decided on the leading block of a finer truncation.
int heat_bracket_sign(const ProfileFunctions& b2, int n)
{
    const int fine = std::max(4 * n, 32);
    const int block = std::min(n, 4);
    const int qp = default_quad_points(fine);
    const Eigen::MatrixXd A = SpectralOperator::diagonal(dirichlet_eigenvalues(fine)).generator_matrix();
    const Eigen::MatrixXd B2 = mult_matrix(sine_basis, b2.value, fine, qp);
    const Eigen::MatrixXd M1 = A * B2 - B2 * A;
    const Eigen::MatrixXd bracket = M1 * B2 - B2 * M1;
    const Eigen::MatrixXd grad_sq =
        mult_matrix(sine_basis, [&](double x) { return 2.0 * b2.first(x) * b2.first(x); }, fine, qp);
    const double plus = leading_block_discrepancy(grad_sq, bracket, block);
    const double minus = leading_block_discrepancy(grad_sq, -bracket, block);
    return plus <= minus ? 1 : -1;
}

TimeField constant_field(Eigen::VectorXd value)
{
    return [value = std::move(value)](double) { return value; };
}

}  // namespace

const std::vector<std::string>& profile_names()
{
    static const std::vector<std::string> names{"zero", "constant", "sin", "sin2", "poly1", "poly2"};
    return names;
}

ProfileFunctions make_profile(const Profile& profile)
{
    const double a = profile.amplitude;
    ProfileFunctions f;
    if (profile.name == "zero" || a == 0.0) {
        f.value = f.first = f.second = [](double) { return 0.0; };
        f.is_zero = true;
    } else if (profile.name == "constant") {
        f.value = [a](double) { return a; };
        f.first = f.second = [](double) { return 0.0; };
    } else if (profile.name == "sin") {
        f.value = [a](double x) { return a * std::sin(kPi * x); };
        f.first = [a](double x) { return a * kPi * std::cos(kPi * x); };
        f.second = [a](double x) { return -a * kPi * kPi * std::sin(kPi * x); };
    } else if (profile.name == "sin2") {
        f.value = [a](double x) { return a * std::sin(kPi * x) * std::sin(kPi * x); };
        f.first = [a](double x) { return a * kPi * std::sin(2.0 * kPi * x); };
        f.second = [a](double x) { return 2.0 * a * kPi * kPi * std::cos(2.0 * kPi * x); };
    } else if (profile.name == "poly1") {
        f.value = [a](double x) { return a * x * (1.0 - x); };
        f.first = [a](double x) { return a * (1.0 - 2.0 * x); };
        f.second = [a](double) { return -2.0 * a; };
    } else if (profile.name == "poly2") {
        f.value = [a](double x) { return a * x * x * (1.0 - x) * (1.0 - x); };
        f.first = [a](double x) { return 2.0 * a * x * (1.0 - x) * (1.0 - 2.0 * x); };
        f.second = [a](double x) { return 2.0 * a * (1.0 - 6.0 * x + 6.0 * x * x); };
    } else {
        throw Error(ErrorKind::Validation, "unknown profile '" + profile.name + "'");
    }
    return f;
}

ProblemInstance build_heat(const HeatConfig& config)
{
    if (config.N < 1) {
        throw Error(ErrorKind::Validation, "N must be at least 1");
    }
    const int n = config.N;
    const int qp = config.quad_points > 0 ? config.quad_points : default_quad_points(n);

    const ProfileFunctions b2 = make_profile(config.b2);
    const ProfileFunctions b1 = make_profile(config.b1);
    const ProfileFunctions f = make_profile(config.f);
    require_vanishing(b2, "b2");
    require_vanishing(b1, "b1");

    ProblemInstance prob;
    prob.family = Family::Heat;
    prob.op = SpectralOperator::diagonal(dirichlet_eigenvalues(n));
    prob.grid = TimeGrid(config.T, config.M);
    prob.A = prob.op.generator_matrix();
    prob.B2 = b2.is_zero ? Eigen::MatrixXd::Zero(n, n) : mult_matrix(sine_basis, b2.value, n, qp);
    prob.B1 = b1.is_zero ? Eigen::VectorXd::Zero(n) : project(sine_basis, b1.value, n, qp);
    if (!f.is_zero) {
        prob.forcing = constant_field(project(sine_basis, f.value, n, qp));
    }
    prob.assemble_commutators();

    prob.psi0 = padded(config.psi0, n, "psi0");
    prob.cost.alpha = config.alpha;
    prob.cost.running_weight = config.running_weight * Eigen::MatrixXd::Identity(n, n);
    prob.cost.terminal_weight = config.terminal_weight * Eigen::MatrixXd::Identity(n, n);
    prob.cost.target = constant_field(padded(config.target, n, "target"));
    prob.cost.terminal_target = padded(config.terminal_target, n, "terminal_target");
    prob.bounds = config.bounds;

    // Closed-form commutator y -> -(2 b2' y' + b2'' y), i.e. (A B2 - B2 A) with A = -d^2/dx^2.
    FamilyData& data = prob.family_data;
    const int block = std::min(n, 8);
    if (b2.is_zero) {
        data.commutator_analytic = Eigen::MatrixXd::Zero(n, n);
        data.bracket_analytic = Eigen::MatrixXd::Zero(n, n);
        data.mult_b2_squared = Eigen::MatrixXd::Zero(n, n);
    } else {
        const Eigen::MatrixXd gradient_part = galerkin_matrix(sine_basis, sine_basis_derivative, b2.first, n, qp);
        const Eigen::MatrixXd curvature_part = galerkin_matrix(sine_basis, sine_basis, b2.second, n, qp);
        data.commutator_analytic = -(2.0 * gradient_part + curvature_part);
        const Eigen::MatrixXd grad_sq = mult_matrix(
            sine_basis, [&](double x) { return 2.0 * b2.first(x) * b2.first(x); }, n, qp);
        data.bracket_sign = heat_bracket_sign(b2, n);
        data.bracket_analytic = data.bracket_sign * grad_sq;
        data.mult_b2_squared = mult_matrix(
            sine_basis, [&](double x) { return b2.value(x) * b2.value(x); }, n, qp);
    }
    data.commutator_discrepancy = leading_block_discrepancy(data.commutator_analytic, prob.M1, block);
    data.bracket_discrepancy =
        leading_block_discrepancy(data.bracket_analytic, prob.bracket, std::max(1, std::min(n / 2, 8)));
    data.mult_b2 = prob.B2;
    data.has_r_specialization = b1.is_zero;
    data.running_weight = config.running_weight;

    prob.validate();
    return prob;
}

ProblemInstance build_wave(const WaveConfig& config)
{
    if (config.N < 1) {
        throw Error(ErrorKind::Validation, "N must be at least 1");
    }
    const ProfileFunctions b1 = make_profile(config.b1);
    if (!b1.is_zero) {
        throw Error(ErrorKind::Unsupported, "wave family requires b1 = 0");
    }
    const int n = config.N;
    const int qp = config.quad_points > 0 ? config.quad_points : default_quad_points(n);
    const ProfileFunctions b2 = make_profile(config.b2);
    const ProfileFunctions f = make_profile(config.f);
    require_vanishing(b2, "b2");

    ProblemInstance prob;
    prob.family = Family::Wave;
    prob.op = SpectralOperator::wave_blocks(dirichlet_eigenvalues(n));
    prob.grid = TimeGrid(config.T, config.M);
    prob.A = prob.op.generator_matrix();

    Eigen::VectorXd omega(n);
    for (int k = 0; k < n; ++k) {
        omega[k] = std::sqrt(prob.op.eigenvalues()[k]);
    }
    const Eigen::MatrixXd g = b2.is_zero ? Eigen::MatrixXd::Zero(n, n) : mult_matrix(sine_basis, b2.value, n, qp);
    const Eigen::MatrixXd g2 = b2.is_zero ? Eigen::MatrixXd::Zero(n, n)
                                          : mult_matrix(
                                                sine_basis, [&](double x) { return b2.value(x) * b2.value(x); }, n, qp);

    // Velocity equation gains b2 y1; y1 = a / omega in sine coefficients.
    prob.B2 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            prob.B2(2 * j + 1, 2 * k) = g(j, k) / omega[k];
        }
    }
    prob.B1 = Eigen::VectorXd::Zero(2 * n);
    if (!f.is_zero) {
        const Eigen::VectorXd fk = project(sine_basis, f.value, n, qp);
        Eigen::VectorXd forcing = Eigen::VectorXd::Zero(2 * n);
        for (int k = 0; k < n; ++k) {
            forcing[2 * k + 1] = fk[k];
        }
        prob.forcing = constant_field(forcing);
    }
    prob.assemble_commutators();

    auto energy = [&](const std::vector<double>& disp, const std::vector<double>& vel, const char* field) {
        const Eigen::VectorXd c = padded(disp, n, field);
        const Eigen::VectorXd d = padded(vel, n, field);
        Eigen::VectorXd out(2 * n);
        for (int k = 0; k < n; ++k) {
            out[2 * k] = omega[k] * c[k];
            out[2 * k + 1] = d[k];
        }
        return out;
    };
    prob.psi0 = energy(config.displacement0, config.velocity0, "initial state");
    prob.cost.alpha = config.alpha;
    prob.cost.running_weight = config.running_weight * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    prob.cost.terminal_weight = config.terminal_weight * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    prob.cost.target = constant_field(energy(config.target_displacement, config.target_velocity, "target"));
    prob.cost.terminal_target = energy(config.terminal_displacement, config.terminal_velocity, "terminal target");
    prob.bounds = config.bounds;

    // Closed-form blocks: M1 = diag(-b2 on the displacement, +b2 on the velocity),
    // [M1, B2] maps the displacement to 2 b2^2 y1 in the velocity equation.
    FamilyData& data = prob.family_data;
    data.commutator_analytic = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    data.bracket_analytic = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            data.commutator_analytic(2 * j, 2 * k) = -omega[j] * g(j, k) / omega[k];
            data.commutator_analytic(2 * j + 1, 2 * k + 1) = g(j, k);
            data.bracket_analytic(2 * j + 1, 2 * k) = 2.0 * g2(j, k) / omega[k];
        }
    }
    const int block = 2 * std::min(n, 8);
    data.commutator_discrepancy = leading_block_discrepancy(data.commutator_analytic, prob.M1, block);
    data.bracket_discrepancy = leading_block_discrepancy(data.bracket_analytic, prob.bracket, block);
    data.bracket_sign = 1;
    data.mult_b2 = g;
    data.mult_b2_squared = g2;
    data.has_r_specialization = true;
    data.running_weight = config.running_weight;

    prob.validate();
    return prob;
}

ProblemInstance build_scalar_toy(const ToyConfig& config)
{
    ProblemInstance prob;
    prob.family = Family::ScalarToy;
    prob.op = SpectralOperator::diagonal({config.mu});
    prob.grid = TimeGrid(config.T, config.M);
    prob.A = prob.op.generator_matrix();
    prob.B1 = Eigen::VectorXd::Constant(1, config.b1);
    prob.B2 = Eigen::MatrixXd::Constant(1, 1, config.b2);
    if (config.f != 0.0) {
        prob.forcing = constant_field(Eigen::VectorXd::Constant(1, config.f));
    }
    prob.assemble_commutators();
    prob.psi0 = Eigen::VectorXd::Constant(1, config.psi0);
    prob.cost.alpha = config.alpha;
    prob.cost.running_weight = Eigen::MatrixXd::Constant(1, 1, config.running_weight);
    prob.cost.terminal_weight = Eigen::MatrixXd::Constant(1, 1, config.terminal_weight);
    if (config.target != 0.0) {
        prob.cost.target = constant_field(Eigen::VectorXd::Constant(1, config.target));
    }
    prob.cost.terminal_target = Eigen::VectorXd::Constant(1, config.terminal_target);
    prob.bounds = config.bounds;
    prob.family_data.commutator_analytic = Eigen::MatrixXd::Zero(1, 1);
    prob.family_data.bracket_analytic = Eigen::MatrixXd::Zero(1, 1);
    prob.validate();
    return prob;
}

Eigen::VectorXd wave_displacement(const ProblemInstance& prob, const Eigen::VectorXd& state)
{
    const int n = prob.op.modes();
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) {
        c[k] = state[2 * k] / std::sqrt(prob.op.eigenvalues()[k]);
    }
    return c;
}

Eigen::VectorXd wave_velocity(const Eigen::VectorXd& state)
{
    const int n = static_cast<int>(state.size()) / 2;
    Eigen::VectorXd d(n);
    for (int k = 0; k < n; ++k) {
        d[k] = state[2 * k + 1];
    }
    return d;
}

double r_specialized(const ProblemInstance& prob, double t, const Eigen::VectorXd& psi, const Eigen::VectorXd& p)
{
    const FamilyData& data = prob.family_data;
    if (!data.has_r_specialization) {
        throw Error(ErrorKind::Unsupported, "no closed-form R for this problem");
    }
    const double w = data.running_weight;
    const Eigen::MatrixXd& g2 = data.mult_b2_squared;
    if (prob.family == Family::Heat) {
        // w |b2 y|^2 + w (y - y_d, b2^2 y) + (p, b2^2 f - [M1,B2] y).
        const Eigen::VectorXd error = psi - prob.cost.target_at(t, prob.dim());
        const Eigen::VectorXd g2y = g2 * psi;
        return w * psi.dot(g2y) + w * error.dot(g2y) +
               p.dot(g2 * prob.forcing_at(t) - data.bracket_analytic * psi);
    }
    if (prob.family == Family::Wave) {
        // w |b2 y1|^2 - 2 (p2, b2^2 y1); B2^2 = 0 removes the other terms.
        const Eigen::VectorXd y1 = wave_displacement(prob, psi);
        const Eigen::VectorXd p2 = wave_velocity(p);
        return w * y1.dot(g2 * y1) - 2.0 * p2.dot(g2 * y1);
    }
    throw Error(ErrorKind::Unsupported, "no closed-form R for this family");
}

}  // namespace bilinctl
