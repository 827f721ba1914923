#include "bilinctl/spectral.hpp"

#include "bilinctl/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bilinctl {

SpectralOperator::SpectralOperator(OperatorKind kind, std::vector<double> eigenvalues)
    : kind_(kind), eigenvalues_(std::move(eigenvalues))
{
    if (eigenvalues_.empty()) {
        throw Error(ErrorKind::Structural, "operator needs at least one mode");
    }
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
        if (!std::isfinite(eigenvalues_[k])) {
            throw Error(ErrorKind::Validation, "eigenvalue " + std::to_string(k + 1) + " is not finite");
        }
        if (k > 0 && std::abs(eigenvalues_[k]) < std::abs(eigenvalues_[k - 1])) {
            throw Error(ErrorKind::Validation, "eigenvalues must be sorted by modulus");
        }
    }
    if (kind_ == OperatorKind::Diagonal) {
        growth_bound_ = *std::min_element(eigenvalues_.begin(), eigenvalues_.end());
    } else {
        for (double mu : eigenvalues_) {
            if (mu <= 0.0) {
                throw Error(ErrorKind::Validation, "wave block eigenvalues must be positive");
            }
        }
        growth_bound_ = 0.0;
    }
}

SpectralOperator SpectralOperator::diagonal(std::vector<double> eigenvalues)
{
    return SpectralOperator(OperatorKind::Diagonal, std::move(eigenvalues));
}

SpectralOperator SpectralOperator::wave_blocks(std::vector<double> eigenvalues)
{
    return SpectralOperator(OperatorKind::WaveBlocks, std::move(eigenvalues));
}

void SpectralOperator::check_conforms(const Eigen::VectorXd& v) const
{
    if (v.size() != dim()) {
        throw Error(ErrorKind::Structural, "coefficient vector has length " + std::to_string(v.size()) +
                                               ", operator expects " + std::to_string(dim()));
    }
}

namespace {

Eigen::VectorXd rotate_blocks(const std::vector<double>& mu, double t, const Eigen::VectorXd& v, double sign)
{
    Eigen::VectorXd out(v.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double angle = std::sqrt(mu[k]) * t;
        const double c = std::cos(angle);
        const double s = sign * std::sin(angle);
        const double a = v[2 * k];
        const double b = v[2 * k + 1];
        out[2 * k] = a * c + b * s;
        out[2 * k + 1] = -a * s + b * c;
    }
    return out;
}

}  // namespace

Eigen::VectorXd SpectralOperator::semigroup(double t, const Eigen::VectorXd& v) const
{
    check_conforms(v);
    if (t < 0.0) {
        throw Error(ErrorKind::Validation, "semigroup time must be nonnegative");
    }
    if (kind_ == OperatorKind::WaveBlocks) {
        return rotate_blocks(eigenvalues_, t, v, 1.0);
    }
    Eigen::VectorXd out(v.size());
    for (int k = 0; k < modes(); ++k) {
        out[k] = std::exp(-eigenvalues_[k] * t) * v[k];
    }
    return out;
}

Eigen::VectorXd SpectralOperator::semigroup_adjoint(double t, const Eigen::VectorXd& v) const
{
    if (kind_ == OperatorKind::WaveBlocks) {
        check_conforms(v);
        if (t < 0.0) {
            throw Error(ErrorKind::Validation, "semigroup time must be nonnegative");
        }
        return rotate_blocks(eigenvalues_, t, v, -1.0);
    }
    return semigroup(t, v);
}

Eigen::MatrixXd SpectralOperator::generator_matrix() const
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim(), dim());
    for (int k = 0; k < modes(); ++k) {
        if (kind_ == OperatorKind::Diagonal) {
            a(k, k) = eigenvalues_[k];
        } else {
            const double omega = std::sqrt(eigenvalues_[k]);
            a(2 * k, 2 * k + 1) = -omega;
            a(2 * k + 1, 2 * k) = omega;
        }
    }
    return a;
}

double hq_norm(const SpectralOperator& op, const Eigen::VectorXd& v, double q)
{
    op.check_conforms(v);
    if (!(q > 0.0)) {
        throw Error(ErrorKind::Validation, "H^q norm needs q > 0");
    }
    double sum = 0.0;
    for (int k = 0; k < op.modes(); ++k) {
        const double weight = 1.0 + std::pow(std::abs(op.eigenvalues()[k]), q);
        double mag2 = 0.0;
        if (op.kind() == OperatorKind::Diagonal) {
            mag2 = v[k] * v[k];
        } else {
            mag2 = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
        }
        sum += weight * mag2;
    }
    return std::sqrt(sum);
}

ContractionReport contraction_check(const SpectralOperator& op, const std::vector<double>& t_samples)
{
    ContractionReport report;
    report.max_ratio = 0.0;
    report.min_ratio = std::numeric_limits<double>::infinity();
    for (double t : t_samples) {
        for (int i = 0; i < op.dim(); ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Unit(op.dim(), i);
            const double norm = op.semigroup(t, e).norm();
            const double ratio =
                op.kind() == OperatorKind::Diagonal ? norm / std::exp(-op.growth_bound() * t) : norm;
            report.max_ratio = std::max(report.max_ratio, ratio);
            report.min_ratio = std::min(report.min_ratio, ratio);
        }
    }
    if (t_samples.empty()) {
        report.min_ratio = 0.0;
    }
    return report;
}

QuadratureRule composite_gauss_legendre(double a, double b, int panels)
{
    if (panels < 1) {
        throw Error(ErrorKind::Validation, "quadrature needs at least one panel");
    }
    using Rule = boost::math::quadrature::gauss<double, kPointsPerPanel>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();

    // Reference nodes on [-1, 1] in increasing order.
    std::vector<double> ref_x;
    std::vector<double> ref_w;
    for (std::size_t i = abscissa.size(); i-- > 0;) {
        if (abscissa[i] != 0.0) {
            ref_x.push_back(-abscissa[i]);
            ref_w.push_back(weights[i]);
        }
    }
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        ref_x.push_back(abscissa[i]);
        ref_w.push_back(weights[i]);
    }

    QuadratureRule rule;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * width;
        for (std::size_t i = 0; i < ref_x.size(); ++i) {
            rule.nodes.push_back(mid + 0.5 * width * ref_x[i]);
            rule.weights.push_back(0.5 * width * ref_w[i]);
        }
    }
    return rule;
}

int default_quad_points(int modes)
{
    return 4 * modes;
}

namespace {

QuadratureRule rule_for(int modes, int quad_points)
{
    if (modes < 1) {
        throw Error(ErrorKind::Structural, "need at least one mode");
    }
    if (quad_points < 4 * modes) {
        throw Error(ErrorKind::Resolution, "quad_points = " + std::to_string(quad_points) +
                                               " below 4*N = " + std::to_string(4 * modes));
    }
    const int panels = (quad_points + kPointsPerPanel - 1) / kPointsPerPanel;
    return composite_gauss_legendre(0.0, 1.0, panels);
}

}  // namespace

Eigen::MatrixXd galerkin_matrix(const BasisEval& test, const BasisEval& trial, const ScalarField& weight,
                                int modes, int quad_points)
{
    const QuadratureRule rule = rule_for(modes, quad_points);
    const std::size_t nq = rule.nodes.size();
    Eigen::MatrixXd phi(nq, modes);
    Eigen::MatrixXd psi(nq, modes);
    for (std::size_t q = 0; q < nq; ++q) {
        const double x = rule.nodes[q];
        const double wq = rule.weights[q] * weight(x);
        for (int k = 0; k < modes; ++k) {
            phi(q, k) = wq * test(k + 1, x);
            psi(q, k) = trial(k + 1, x);
        }
    }
    return phi.transpose() * psi;
}

Eigen::MatrixXd mult_matrix(const BasisEval& basis, const ScalarField& b, int modes, int quad_points)
{
    const Eigen::MatrixXd g = galerkin_matrix(basis, basis, b, modes, quad_points);
    return 0.5 * (g + g.transpose());
}

Eigen::VectorXd project(const BasisEval& basis, const ScalarField& g, int modes, int quad_points)
{
    const QuadratureRule rule = rule_for(modes, quad_points);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(modes);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = rule.nodes[q];
        const double gw = rule.weights[q] * g(x);
        for (int k = 0; k < modes; ++k) {
            c[k] += gw * basis(k + 1, x);
        }
    }
    return c;
}

double sine_basis(int k, double x)
{
    return std::numbers::sqrt2 * std::sin(k * std::numbers::pi * x);
}

double sine_basis_derivative(int k, double x)
{
    return std::numbers::sqrt2 * k * std::numbers::pi * std::cos(k * std::numbers::pi * x);
}

std::vector<double> dirichlet_eigenvalues(int modes)
{
    std::vector<double> mu(modes);
    for (int k = 1; k <= modes; ++k) {
        mu[k - 1] = k * k * std::numbers::pi * std::numbers::pi;
    }
    return mu;
}

}  // namespace bilinctl
