#pragma once

// Truncated eigenbasis representation of diagonalizable generators, their
// semigroups, and Galerkin matrices of multiplication operators.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace bilinctl {

enum class OperatorKind { Diagonal, WaveBlocks };

// Generator A of the evolution y' + A y = ... in a truncated eigenbasis.
// Diagonal: A e_k = mu_k e_k. WaveBlocks: each mu_k > 0 induces a 2x2 block
// acting on energy coordinates (a_k, b_k), stored interleaved at indices
// 2k and 2k+1, so that exp(-tA) is a rotation by omega_k t, omega_k = sqrt(mu_k).
class SpectralOperator {
public:
    // Single zero mode; placeholder until a builder assigns a real operator.
    SpectralOperator() : SpectralOperator(OperatorKind::Diagonal, {0.0}) {}
    static SpectralOperator diagonal(std::vector<double> eigenvalues);
    static SpectralOperator wave_blocks(std::vector<double> eigenvalues);

    OperatorKind kind() const { return kind_; }
    int modes() const { return static_cast<int>(eigenvalues_.size()); }
    // Length of a coefficient vector: N (Diagonal) or 2N (WaveBlocks).
    int dim() const { return kind_ == OperatorKind::Diagonal ? modes() : 2 * modes(); }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    double growth_bound() const { return growth_bound_; }

    // exp(-tA) v, t >= 0.
    Eigen::VectorXd semigroup(double t, const Eigen::VectorXd& v) const;
    // exp(-tA)^T v, the dual semigroup in coefficient space.
    Eigen::VectorXd semigroup_adjoint(double t, const Eigen::VectorXd& v) const;
    // Dense matrix of A in coefficient coordinates.
    Eigen::MatrixXd generator_matrix() const;

    void check_conforms(const Eigen::VectorXd& v) const;

private:
    SpectralOperator(OperatorKind kind, std::vector<double> eigenvalues);

    OperatorKind kind_;
    std::vector<double> eigenvalues_;
    double growth_bound_ = 0.0;
};

// (sum_k (1 + |mu_k|^q) |v_k|^2)^(1/2); for wave blocks |v_k|^2 = a_k^2 + b_k^2.
double hq_norm(const SpectralOperator& op, const Eigen::VectorXd& v, double q);

struct ContractionReport {
    // Diagonal: max over samples and basis vectors of |exp(-tA) e_k| / exp(-gamma t).
    // WaveBlocks: max of |exp(-tA) e_k| (energy norm), ideally 1.
    double max_ratio = 0.0;
    // WaveBlocks only: min of the same ratio.
    double min_ratio = 0.0;
};

ContractionReport contraction_check(const SpectralOperator& op, const std::vector<double>& t_samples);

// Composite Gauss-Legendre rule with 8 nodes per panel.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline constexpr int kPointsPerPanel = 8;

QuadratureRule composite_gauss_legendre(double a, double b, int panels);

// Default node count: 8 points per smallest basis wavelength 2/N on (0,1).
int default_quad_points(int modes);

using BasisEval = std::function<double(int k, double x)>;
using ScalarField = std::function<double(double x)>;

// G_jk = int_0^1 b e_j e_k dx for j, k = 1..N, symmetrized.
Eigen::MatrixXd mult_matrix(const BasisEval& basis, const ScalarField& b, int modes, int quad_points);

// G_jk = int_0^1 weight(x) test_j(x) trial_k(x) dx, no symmetrization.
Eigen::MatrixXd galerkin_matrix(const BasisEval& test, const BasisEval& trial, const ScalarField& weight,
                                int modes, int quad_points);

// Coefficients c_k = int_0^1 g e_k dx.
Eigen::VectorXd project(const BasisEval& basis, const ScalarField& g, int modes, int quad_points);

// Dirichlet sine basis on (0,1): e_k = sqrt(2) sin(k pi x), k >= 1.
double sine_basis(int k, double x);
double sine_basis_derivative(int k, double x);
// Dirichlet Laplacian eigenvalues k^2 pi^2, k = 1..N.
std::vector<double> dirichlet_eigenvalues(int modes);

}  // namespace bilinctl
