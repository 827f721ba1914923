#pragma once

// Arc structure, first- and second-order optimality diagnostics and a
// projected-gradient solver for the box-constrained reduced problem.

#include "bilinctl/grid.hpp"
#include "bilinctl/objective.hpp"
#include "bilinctl/problem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bilinctl {

enum class ArcKind { Lower, Upper, Singular };

const char* to_string(ArcKind kind);

struct Arc {
    ArcKind kind = ArcKind::Singular;
    int first_node = 0;
    int last_node = 0;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct ArcStructure {
    std::vector<Arc> arcs;
    std::vector<double> junctions;      // t_start of every arc after the first
    std::vector<int> junction_nodes;    // first node of every arc after the first
    std::vector<double> bang_bang;      // junctions between a Lower and an Upper arc
    std::vector<int> bang_bang_nodes;

    bool has_singular() const;
    // Per-node classification induced by the arcs.
    std::vector<ArcKind> node_kinds(int nodes) const;
};

struct ArcTolerances {
    double u = 0.0;       // absolute; 0 selects 1e-6 (u_M - u_m)
    double lambda = 0.0;  // absolute; 0 selects 1e-8 max|Lambda|
};

// Classify nodes by distance to the bounds, merge runs and absorb runs shorter
// than three nodes into the longer neighbour (the earlier one on ties).
ArcStructure detect_arcs(const ControlSignal& u, const Bounds& bounds, const Eigen::VectorXd& lambda,
                         const ArcTolerances& tol = {});

// Largest arc structure built directly from a per-node classification.
ArcStructure arcs_from_kinds(const TimeGrid& grid, const std::vector<ArcKind>& kinds);

double lambda_scale(const Eigen::VectorXd& lambda);

// max_i max(0, Lambda_i) [u_i > u_m + tol] + max(0, -Lambda_i) [u_i < u_M - tol].
double first_order_residual(const ControlSignal& u, const Bounds& bounds, const Eigen::VectorXd& lambda,
                            double tol_u = 0.0);

struct CriticalDirection {
    Eigen::VectorXd w;
    double h = 0.0;
};

// Make w constant on boundary arcs, zero on an initial boundary arc and equal
// to h on a final boundary arc. Boundary arcs joined by a bang-bang junction
// share one constant. Without a final boundary arc h = w(T).
CriticalDirection project_pc2(const ArcStructure& arcs, Eigen::VectorXd w);

inline constexpr int kFourierModes = 12;

std::vector<CriticalDirection> sample_pc2(const ArcStructure& arcs, const TimeGrid& grid, int n_samples,
                                          std::uint64_t seed);

struct NecessaryScan {
    double min_qhat = 0.0;
    int argmin = -1;
    double scale = 1.0;  // max(1, max |Qhat|)
    std::vector<double> values;
};

NecessaryScan necessary_scan(const ProblemInstance& prob, const Reference& ref,
                             const std::vector<CriticalDirection>& samples);

// Evaluates Qhat(xi[w], w, h) with R precomputed.
double qhat_direction(const ProblemInstance& prob, const Reference& ref, const Eigen::VectorXd& R,
                      const CriticalDirection& dir);

struct SingularRCheck {
    bool applicable = false;
    double min_r = 0.0;
    double scale = 1.0;  // max(1, max |R|)
    int nodes_checked = 0;
};

// Minimum of R over singular arcs, skipping two nodes at each arc end.
SingularRCheck singular_r_check(const Eigen::VectorXd& R, const ArcStructure& arcs);

struct CoercivityReport {
    double alpha_hat = 0.0;
    int n_basis = 0;
    int rank = 0;
    bool degenerate = false;
    double symmetry_error = 0.0;     // max |H_ij - H_ji| before symmetrization
    double diagonal_error = 0.0;     // max |H_ii - Qhat(e_i)|
    Eigen::MatrixXd form;            // Qhat on the basis
    Eigen::MatrixXd gram;            // |w|_2^2 + h^2 on the basis
};

// Basis of PC2 directions: the pure-h direction first, then the constant and
// the cos/sin Fourier modes on [0,T] in increasing frequency, each projected.
std::vector<CriticalDirection> coercivity_basis(const ArcStructure& arcs, const TimeGrid& grid, int n_basis);

CoercivityReport coercivity_estimate(const ProblemInstance& prob, const Reference& ref, const ArcStructure& arcs,
                                     int n_basis);
CoercivityReport coercivity_on_basis(const ProblemInstance& prob, const Reference& ref,
                                     const std::vector<CriticalDirection>& basis);

struct GrowthReport {
    double ratio_min = 0.0;
    int evaluated = 0;
    int skipped = 0;
    bool degenerate = false;
    std::vector<double> sigma;
    std::vector<double> ratio;
};

GrowthReport growth_probe(const ProblemInstance& prob, const Reference& ref, int n_dirs,
                          const std::vector<double>& sigmas, std::uint64_t seed);

struct HypothesesReport {
    int arc_count = 0;
    bool has_boundary_arcs = false;
    // Minimum of sign-adjusted Lambda (positive means the correct sign) over
    // interior nodes of boundary arcs, two nodes away from junctions.
    double min_boundary_lambda = 0.0;
    bool strict_complementarity = true;
    std::optional<double> lambda_at_start;  // set when an initial boundary arc exists
    std::optional<double> lambda_at_end;    // set when a final boundary arc exists
    bool endpoint_flag = false;             // an endpoint value within tol_lambda of zero
    std::optional<double> min_r_bang_bang;  // unset when there are no bang-bang junctions
    bool passes = true;
};

HypothesesReport structural_hypotheses_check(const ControlSignal& u, const Eigen::VectorXd& lambda,
                                             const Eigen::VectorXd& R, const ArcStructure& arcs,
                                             double tol_lambda);

struct SolverOptions {
    int max_iter = 100;       // projected-gradient iterations
    double armijo_c1 = 1e-4;
    int max_halvings = 40;
    double tolerance = 1e-9;  // on the projected gradient, relative to max(1, max|gradient|)
    double initial_step = 1.0;
    // The gradient phase hands over to projected Newton once the projected
    // gradient falls below newton_switch (same scaling as tolerance) or
    // max_iter is reached. Newton uses a dense Hessian on the free nodes built
    // from central differences of the exact gradient.
    double newton_switch = 1e-2;
    int newton_iterations = 60;
    double hessian_step = 1e-5;
    // Hessian eigenvalues below this fraction of the largest are treated as null directions.
    double null_tolerance = 1e-10;
};

struct SolverIterate {
    int iteration = 0;
    double cost = 0.0;
    double projected_gradient = 0.0;
    double step = 0.0;
    bool newton = false;
};

struct SolverResult {
    ControlSignal u;
    std::vector<SolverIterate> history;
    bool converged = false;
    bool stalled = false;
};

// Projected gradient on the exact discrete gradient with Armijo backtracking
// and Barzilai-Borwein initial steps, followed by trust-region Newton steps.
// Accepted steps never increase the cost.
SolverResult projected_gradient_solve(const ProblemInstance& prob, const ControlSignal& u0,
                                      const SolverOptions& options = {});

ControlSignal clip(const ControlSignal& u, const Bounds& bounds);

}  // namespace bilinctl
