#pragma once

// Problem data shared by the integrators, the objective and the optimality tools.

#include "bilinctl/grid.hpp"
#include "bilinctl/spectral.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace bilinctl {

enum class Family { Heat, Wave, ScalarToy };

const char* to_string(Family family);

using TimeField = std::function<Eigen::VectorXd(double t)>;

// J(u) = alpha int u + 1/2 int q(Psi - target) + 1/2 q_T(Psi(T) - terminal_target),
// q(y) = <y, Q y>, q_T(y) = <y, Q_T y>.
struct CostSpec {
    double alpha = 0.0;
    Eigen::MatrixXd running_weight;
    Eigen::MatrixXd terminal_weight;
    TimeField target;  // empty means zero
    Eigen::VectorXd terminal_target;

    Eigen::VectorXd target_at(double t, int dim) const;
};

// Family-specific closed-form data kept alongside the truncated operators,
// used for cross-checks only.
struct FamilyData {
    // Heat: Galerkin matrix of the analytic first-order commutator.
    // Wave: analytic block form in energy coordinates.
    Eigen::MatrixXd commutator_analytic;
    // Max abs difference between the analytic and the truncated commutator on
    // the leading block, relative to the max abs entry of the analytic one.
    double commutator_discrepancy = 0.0;
    // Heat: +1 or -1 such that [M1, B2] ~ sign * 2 |b2'|^2; wave: +1.
    int bracket_sign = 1;
    // Multiplication matrix of the analytic bracket, sign included.
    Eigen::MatrixXd bracket_analytic;
    // Heat: measured on the leading min(N/2, 8) block, since the product of two
    // truncated operators is inaccurate in the highest modes.
    double bracket_discrepancy = 0.0;
    // Multiplication matrices of b2 and b2^2 in the scalar sine basis (heat, wave).
    Eigen::MatrixXd mult_b2;
    Eigen::MatrixXd mult_b2_squared;
    // Whether the R specialization applies (b1 = 0, identity weights).
    bool has_r_specialization = false;
    // Q = running_weight * I when the specialization applies.
    double running_weight = 1.0;
};

struct ProblemInstance {
    Family family = Family::ScalarToy;
    SpectralOperator op;
    TimeGrid grid;

    Eigen::MatrixXd A;        // generator in coefficient coordinates
    Eigen::VectorXd B1;
    Eigen::MatrixXd B2;
    Eigen::MatrixXd M1;       // A B2 - B2 A in the truncation
    Eigen::MatrixXd M2;       // A B2^2 - B2^2 A
    Eigen::MatrixXd bracket;  // M1 B2 - B2 M1
    Eigen::VectorXd AB1;
    double B2_norm = 0.0;     // spectral norm

    TimeField forcing;  // empty means zero
    Eigen::VectorXd psi0;
    CostSpec cost;
    Bounds bounds;

    FamilyData family_data;

    int dim() const { return op.dim(); }
    Eigen::VectorXd forcing_at(double t) const;
    // Fill M1, M2, bracket, AB1, B2_norm from A, B1, B2.
    void assemble_commutators();
    void validate() const;
};

}  // namespace bilinctl
