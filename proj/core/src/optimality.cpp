#include "bilinctl/optimality.hpp"

#include "bilinctl/dynamics.hpp"
#include "bilinctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace bilinctl {

const char* to_string(ArcKind kind)
{
    switch (kind) {
    case ArcKind::Lower:
        return "lower";
    case ArcKind::Upper:
        return "upper";
    case ArcKind::Singular:
        return "singular";
    }
    return "unknown";
}

bool ArcStructure::has_singular() const
{
    return std::any_of(arcs.begin(), arcs.end(), [](const Arc& a) { return a.kind == ArcKind::Singular; });
}

std::vector<ArcKind> ArcStructure::node_kinds(int nodes) const
{
    std::vector<ArcKind> kinds(nodes, ArcKind::Singular);
    for (const Arc& arc : arcs) {
        for (int i = arc.first_node; i <= arc.last_node && i < nodes; ++i) {
            kinds[i] = arc.kind;
        }
    }
    return kinds;
}

namespace {

struct Run {
    ArcKind kind;
    int first;
    int last;
    int length() const { return last - first + 1; }
};

std::vector<Run> runs_of(const std::vector<ArcKind>& kinds)
{
    std::vector<Run> runs;
    for (int i = 0; i < static_cast<int>(kinds.size()); ++i) {
        if (!runs.empty() && runs.back().kind == kinds[i]) {
            runs.back().last = i;
        } else {
            runs.push_back({kinds[i], i, i});
        }
    }
    return runs;
}

std::vector<Run> merge_adjacent(const std::vector<Run>& runs)
{
    std::vector<Run> merged;
    for (const Run& r : runs) {
        if (!merged.empty() && merged.back().kind == r.kind) {
            merged.back().last = r.last;
        } else {
            merged.push_back(r);
        }
    }
    return merged;
}

// Absorb the leftmost shortest run below the minimum length until none remain.
std::vector<Run> absorb_short(std::vector<Run> runs, int min_length)
{
    while (runs.size() > 1) {
        int victim = -1;
        for (int k = 0; k < static_cast<int>(runs.size()); ++k) {
            if (runs[k].length() < min_length &&
                (victim < 0 || runs[k].length() < runs[victim].length())) {
                victim = k;
            }
        }
        if (victim < 0) {
            break;
        }
        const bool has_left = victim > 0;
        const bool has_right = victim + 1 < static_cast<int>(runs.size());
        int target;
        if (has_left && has_right) {
            target = runs[victim + 1].length() > runs[victim - 1].length() ? victim + 1 : victim - 1;
        } else {
            target = has_left ? victim - 1 : victim + 1;
        }
        runs[victim].kind = runs[target].kind;
        runs = merge_adjacent(runs);
    }
    return runs;
}

double fourier_mode(int k, double t, double T)
{
    if (k == 0) {
        return 1.0;
    }
    const int freq = (k + 1) / 2;
    const double arg = 2.0 * std::numbers::pi * freq * t / T;
    return (k % 2 == 1) ? std::cos(arg) : std::sin(arg);
}

Eigen::VectorXd fourier_series(const TimeGrid& grid, const std::vector<double>& coeffs)
{
    Eigen::VectorXd w = Eigen::VectorXd::Zero(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            w[i] += coeffs[k] * fourier_mode(static_cast<int>(k), grid.node(i), grid.T);
        }
    }
    return w;
}

bool is_boundary(ArcKind kind) { return kind != ArcKind::Singular; }

double trapezoid_dot(const TimeGrid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return trapezoid(grid, Eigen::VectorXd(a.cwiseProduct(b)));
}

}  // namespace

ArcStructure arcs_from_kinds(const TimeGrid& grid, const std::vector<ArcKind>& kinds)
{
    ArcStructure out;
    for (const Run& r : runs_of(kinds)) {
        Arc arc;
        arc.kind = r.kind;
        arc.first_node = r.first;
        arc.last_node = r.last;
        arc.t_start = grid.node(r.first);
        out.arcs.push_back(arc);
    }
    for (std::size_t k = 0; k < out.arcs.size(); ++k) {
        out.arcs[k].t_end = (k + 1 < out.arcs.size()) ? out.arcs[k + 1].t_start : grid.T;
        if (k > 0) {
            const Arc& prev = out.arcs[k - 1];
            const Arc& cur = out.arcs[k];
            out.junctions.push_back(cur.t_start);
            out.junction_nodes.push_back(cur.first_node);
            if (is_boundary(prev.kind) && is_boundary(cur.kind)) {
                out.bang_bang.push_back(cur.t_start);
                out.bang_bang_nodes.push_back(cur.first_node);
            }
        }
    }
    if (!out.arcs.empty()) {
        out.arcs.front().t_start = 0.0;
    }
    return out;
}

ArcStructure detect_arcs(const ControlSignal& u, const Bounds& bounds, const Eigen::VectorXd& lambda,
                         const ArcTolerances& tol)
{
    if (u.u.size() == 0) {
        throw Error(ErrorKind::Structural, "cannot detect arcs on an empty grid");
    }
    if (lambda.size() != u.u.size()) {
        throw Error(ErrorKind::Structural, "switching function does not match the control grid");
    }
    const double tol_u = tol.u > 0.0 ? tol.u : 1e-6 * (bounds.upper - bounds.lower);
    std::vector<ArcKind> kinds(u.u.size());
    for (int i = 0; i < u.u.size(); ++i) {
        if (u[i] <= bounds.lower + tol_u) {
            kinds[i] = ArcKind::Lower;
        } else if (u[i] >= bounds.upper - tol_u) {
            kinds[i] = ArcKind::Upper;
        } else {
            kinds[i] = ArcKind::Singular;
        }
    }
    std::vector<ArcKind> merged(kinds.size());
    for (const Run& r : absorb_short(runs_of(kinds), 3)) {
        std::fill(merged.begin() + r.first, merged.begin() + r.last + 1, r.kind);
    }
    return arcs_from_kinds(u.grid, merged);
}

double lambda_scale(const Eigen::VectorXd& lambda)
{
    return lambda.size() == 0 ? 0.0 : lambda.cwiseAbs().maxCoeff();
}

double first_order_residual(const ControlSignal& u, const Bounds& bounds, const Eigen::VectorXd& lambda,
                            double tol_u)
{
    const double tol = tol_u > 0.0 ? tol_u : 1e-6 * (bounds.upper - bounds.lower);
    double worst = 0.0;
    for (int i = 0; i < u.u.size(); ++i) {
        double violation = 0.0;
        if (u[i] > bounds.lower + tol) {
            violation += std::max(0.0, lambda[i]);
        }
        if (u[i] < bounds.upper - tol) {
            violation += std::max(0.0, -lambda[i]);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

namespace {

// Consecutive boundary arcs meet at bang-bang junctions. The derivative of w
// vanishes on both sides and no singular arc lies between them, so w keeps a
// single constant over such a chain.
std::vector<std::pair<int, int>> boundary_chains(const ArcStructure& arcs)
{
    std::vector<std::pair<int, int>> chains;
    const int count = static_cast<int>(arcs.arcs.size());
    for (int k = 0; k < count;) {
        if (!is_boundary(arcs.arcs[k].kind)) {
            ++k;
            continue;
        }
        int last = k;
        while (last + 1 < count && is_boundary(arcs.arcs[last + 1].kind)) {
            ++last;
        }
        chains.emplace_back(k, last);
        k = last + 1;
    }
    return chains;
}

}  // namespace

CriticalDirection project_pc2(const ArcStructure& arcs, Eigen::VectorXd w)
{
    CriticalDirection dir;
    for (const auto& [first, last] : boundary_chains(arcs)) {
        const int begin = arcs.arcs[first].first_node;
        const int len = arcs.arcs[last].last_node - begin + 1;
        const double value = first == 0 ? 0.0 : w.segment(begin, len).mean();
        w.segment(begin, len).setConstant(value);
    }
    dir.h = w.size() > 0 ? w[w.size() - 1] : 0.0;
    dir.w = std::move(w);
    return dir;
}

std::vector<CriticalDirection> sample_pc2(const ArcStructure& arcs, const TimeGrid& grid, int n_samples,
                                          std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<CriticalDirection> out;
    out.reserve(n_samples);
    for (int s = 0; s < n_samples; ++s) {
        std::vector<double> coeffs(kFourierModes);
        for (double& c : coeffs) {
            c = normal(rng);
        }
        out.push_back(project_pc2(arcs, fourier_series(grid, coeffs)));
    }
    return out;
}

double qhat_direction(const ProblemInstance& prob, const Reference& ref, const Eigen::VectorXd& R,
                      const CriticalDirection& dir)
{
    const Trajectory xi = solve_xi(prob, ref.u, ref.psi, dir.w);
    return qhat_value(prob, ref.psi, ref.p, R, xi, dir.w, dir.h);
}

NecessaryScan necessary_scan(const ProblemInstance& prob, const Reference& ref,
                             const std::vector<CriticalDirection>& samples)
{
    NecessaryScan scan;
    const Eigen::VectorXd R = r_series(prob, ref.psi, ref.p);
    scan.min_qhat = std::numeric_limits<double>::infinity();
    double largest = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double value = qhat_direction(prob, ref, R, samples[k]);
        scan.values.push_back(value);
        largest = std::max(largest, std::abs(value));
        if (value < scan.min_qhat) {
            scan.min_qhat = value;
            scan.argmin = static_cast<int>(k);
        }
    }
    if (samples.empty()) {
        scan.min_qhat = 0.0;
    }
    scan.scale = std::max(1.0, largest);
    return scan;
}

SingularRCheck singular_r_check(const Eigen::VectorXd& R, const ArcStructure& arcs)
{
    SingularRCheck check;
    check.scale = std::max(1.0, R.size() ? R.cwiseAbs().maxCoeff() : 0.0);
    check.min_r = std::numeric_limits<double>::infinity();
    for (const Arc& arc : arcs.arcs) {
        if (arc.kind != ArcKind::Singular) {
            continue;
        }
        for (int i = arc.first_node + 2; i <= arc.last_node - 2; ++i) {
            check.applicable = true;
            check.min_r = std::min(check.min_r, R[i]);
            ++check.nodes_checked;
        }
    }
    if (!check.applicable) {
        check.min_r = 0.0;
    }
    return check;
}

std::vector<CriticalDirection> coercivity_basis(const ArcStructure& arcs, const TimeGrid& grid, int n_basis)
{
    std::vector<CriticalDirection> basis;
    if (n_basis <= 0) {
        return basis;
    }
    CriticalDirection pure_h;
    pure_h.w = Eigen::VectorXd::Zero(grid.nodes());
    pure_h.h = 1.0;
    const auto chains = boundary_chains(arcs);
    if (!chains.empty() && chains.back().second + 1 == static_cast<int>(arcs.arcs.size())) {
        const auto [first, last] = chains.back();
        if (first == 0) {
            pure_h.h = 0.0;  // boundary arcs joined by bang-bang junctions cover [0,T]: w = 0, h = 0
        } else {
            const int begin = arcs.arcs[first].first_node;
            pure_h.w.segment(begin, arcs.arcs[last].last_node - begin + 1).setConstant(1.0);
        }
    }
    basis.push_back(pure_h);
    for (int k = 0; static_cast<int>(basis.size()) < n_basis; ++k) {
        std::vector<double> coeffs(k + 1, 0.0);
        coeffs[k] = 1.0;
        basis.push_back(project_pc2(arcs, fourier_series(grid, coeffs)));
    }
    return basis;
}

CoercivityReport coercivity_on_basis(const ProblemInstance& prob, const Reference& ref,
                                     const std::vector<CriticalDirection>& basis)
{
    const TimeGrid& grid = prob.grid;
    const int n = static_cast<int>(basis.size());
    const Eigen::VectorXd R = r_series(prob, ref.psi, ref.p);

    std::vector<Trajectory> xi;
    xi.reserve(n);
    for (const CriticalDirection& d : basis) {
        xi.push_back(solve_xi(prob, ref.u, ref.psi, d.w));
    }

    CoercivityReport report;
    report.n_basis = n;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd diag(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = qhat_value(prob, ref.psi, ref.p, R, xi[i], basis[i].w, basis[i].h);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            G(i, j) = trapezoid_dot(grid, basis[i].w, basis[j].w) + basis[i].h * basis[j].h;
            if (i == j) {
                const Trajectory xs = xi[i] + xi[i];
                H(i, i) = 0.25 * qhat_value(prob, ref.psi, ref.p, R, xs, Eigen::VectorXd(2.0 * basis[i].w),
                                            2.0 * basis[i].h);
                continue;
            }
            const Trajectory plus = xi[i] + xi[j];
            const Trajectory minus = xi[i] - xi[j];
            const double qp = qhat_value(prob, ref.psi, ref.p, R, plus, Eigen::VectorXd(basis[i].w + basis[j].w),
                                         basis[i].h + basis[j].h);
            const double qm = qhat_value(prob, ref.psi, ref.p, R, minus, Eigen::VectorXd(basis[i].w - basis[j].w),
                                         basis[i].h - basis[j].h);
            H(i, j) = 0.25 * (qp - qm);
        }
    }
    report.symmetry_error = (H - H.transpose()).cwiseAbs().maxCoeff();
    report.diagonal_error = (H.diagonal() - diag).cwiseAbs().maxCoeff();
    H = 0.5 * (H + H.transpose());
    report.form = H;
    report.gram = G;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(G);
    const Eigen::VectorXd& gvals = gram_eig.eigenvalues();
    const double gmax = gvals.size() ? gvals.cwiseAbs().maxCoeff() : 0.0;
    std::vector<int> keep;
    for (int k = 0; k < gvals.size(); ++k) {
        if (gvals[k] > 1e-12 * gmax && gvals[k] > 0.0) {
            keep.push_back(k);
        }
    }
    report.rank = static_cast<int>(keep.size());
    if (keep.empty()) {
        report.degenerate = true;
        report.alpha_hat = 0.0;
        return report;
    }
    Eigen::MatrixXd reduce(n, report.rank);
    for (int c = 0; c < report.rank; ++c) {
        reduce.col(c) = gram_eig.eigenvectors().col(keep[c]) / std::sqrt(gvals[keep[c]]);
    }
    const Eigen::MatrixXd reduced = reduce.transpose() * H * reduce;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> form_eig(0.5 * (reduced + reduced.transpose()));
    report.alpha_hat = form_eig.eigenvalues().minCoeff();
    return report;
}

CoercivityReport coercivity_estimate(const ProblemInstance& prob, const Reference& ref, const ArcStructure& arcs,
                                     int n_basis)
{
    return coercivity_on_basis(prob, ref, coercivity_basis(arcs, prob.grid, n_basis));
}

ControlSignal clip(const ControlSignal& u, const Bounds& bounds)
{
    ControlSignal out = u;
    out.u = u.u.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    return out;
}

GrowthReport growth_probe(const ProblemInstance& prob, const Reference& ref, int n_dirs,
                          const std::vector<double>& sigmas, std::uint64_t seed)
{
    const TimeGrid& grid = prob.grid;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    GrowthReport report;
    report.ratio_min = std::numeric_limits<double>::infinity();
    for (int d = 0; d < n_dirs; ++d) {
        std::vector<double> coeffs(kFourierModes);
        for (double& c : coeffs) {
            c = normal(rng);
        }
        Eigen::VectorXd v = fourier_series(grid, coeffs);
        const double peak = v.cwiseAbs().maxCoeff();
        if (peak > 0.0) {
            v /= peak;
        }
        for (double sigma : sigmas) {
            ControlSignal u(grid, Eigen::VectorXd(ref.u.u + sigma * v));
            u = clip(u, prob.bounds);
            const Eigen::VectorXd w = cumulative_trapezoid(grid, Eigen::VectorXd(u.u - ref.u.u));
            const double scale = trapezoid_dot(grid, w, w) + w[grid.M] * w[grid.M];
            if (scale < 1e-30) {
                ++report.skipped;
                continue;
            }
            const double ratio = (cost(prob, u) - ref.cost) / scale;
            report.sigma.push_back(sigma);
            report.ratio.push_back(ratio);
            report.ratio_min = std::min(report.ratio_min, ratio);
            ++report.evaluated;
        }
    }
    if (report.evaluated == 0) {
        report.degenerate = true;
        report.ratio_min = 0.0;
    }
    return report;
}

HypothesesReport structural_hypotheses_check(const ControlSignal& u, const Eigen::VectorXd& lambda,
                                             const Eigen::VectorXd& R, const ArcStructure& arcs,
                                             double tol_lambda)
{
    (void)u;
    HypothesesReport report;
    report.arc_count = static_cast<int>(arcs.arcs.size());
    report.min_boundary_lambda = std::numeric_limits<double>::infinity();
    const int count = report.arc_count;
    const int last = static_cast<int>(lambda.size()) - 1;
    for (int k = 0; k < count; ++k) {
        const Arc& arc = arcs.arcs[k];
        if (!is_boundary(arc.kind)) {
            continue;
        }
        report.has_boundary_arcs = true;
        const double sign = arc.kind == ArcKind::Lower ? 1.0 : -1.0;
        const int lo = k == 0 ? 1 : arc.first_node + 2;
        const int hi = k == count - 1 ? last - 1 : arc.last_node - 2;
        for (int i = lo; i <= hi; ++i) {
            report.min_boundary_lambda = std::min(report.min_boundary_lambda, sign * lambda[i]);
        }
        if (k == 0) {
            report.lambda_at_start = lambda[0];
            report.endpoint_flag = report.endpoint_flag || sign * lambda[0] <= tol_lambda;
        }
        if (k == count - 1) {
            report.lambda_at_end = lambda[last];
            report.endpoint_flag = report.endpoint_flag || sign * lambda[last] <= tol_lambda;
        }
    }
    if (!report.has_boundary_arcs || std::isinf(report.min_boundary_lambda)) {
        report.min_boundary_lambda = report.has_boundary_arcs ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        report.strict_complementarity = true;
    } else {
        report.strict_complementarity = report.min_boundary_lambda > tol_lambda;
    }
    for (int node : arcs.bang_bang_nodes) {
        const double value = std::min(R[node], R[std::max(0, node - 1)]);
        report.min_r_bang_bang = report.min_r_bang_bang ? std::min(*report.min_r_bang_bang, value) : value;
    }
    report.passes = report.strict_complementarity && (!report.min_r_bang_bang || *report.min_r_bang_bang > 0.0);
    return report;
}

SolverResult projected_gradient_solve(const ProblemInstance& prob, const ControlSignal& u0,
                                      const SolverOptions& options)
{
    const TimeGrid& grid = prob.grid;
    const Bounds& bounds = prob.bounds;
    const double range = bounds.upper - bounds.lower;
    SolverResult result;
    ControlSignal u = clip(ControlSignal(grid, u0.u, bounds), bounds);

    auto evaluate = [&](const Eigen::VectorXd& values, double* f) {
        const ControlSignal c(grid, values);
        const Trajectory psi = solve_state(prob, c);
        const AdjointSolution adjoint = solve_adjoint(prob, c, psi);
        if (f != nullptr) {
            *f = cost_of_state(prob, c, psi);
        }
        return discrete_gradient_density(prob, c, psi, adjoint.multiplier);
    };
    auto project = [&](const Eigen::VectorXd& values) {
        return Eigen::VectorXd(values.cwiseMax(bounds.lower).cwiseMin(bounds.upper));
    };
    // Backtracking along the projected path u -> P(u + step * direction).
    auto line_search = [&](const Eigen::VectorXd& g, double f, const Eigen::VectorXd& direction, double& step,
                           Eigen::VectorXd& accepted, double& f_accepted) {
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            const Eigen::VectorXd trial = project(u.u + step * direction);
            const double decrease = trapezoid_dot(grid, g, Eigen::VectorXd(trial - u.u));
            const double f_trial = cost(prob, ControlSignal(grid, trial));
            if (decrease < 0.0 && f_trial <= f + options.armijo_c1 * decrease) {
                accepted = trial;
                f_accepted = f_trial;
                return true;
            }
            step *= 0.5;
        }
        return false;
    };

    double f = 0.0;
    Eigen::VectorXd g = evaluate(u.u, &f);
    double step = options.initial_step;
    int iteration = 0;
    // Projected gradient relative to max(1, max|g|).
    auto projected_gradient = [&]() {
        return (u.u - project(Eigen::VectorXd(u.u - g))).cwiseAbs().maxCoeff() /
               std::max(1.0, g.cwiseAbs().maxCoeff());
    };
    auto converged = [&](bool newton) {
        const double pg = projected_gradient();
        result.history.push_back({iteration, f, pg, step, newton});
        return pg <= options.tolerance;
    };

    bool done = converged(false);
    for (; !done && iteration < options.max_iter && projected_gradient() > options.newton_switch;) {
        Eigen::VectorXd trial;
        double f_trial = 0.0;
        if (!line_search(g, f, Eigen::VectorXd(-g), step, trial, f_trial)) {
            break;
        }
        double f_new = 0.0;
        const Eigen::VectorXd g_new = evaluate(trial, &f_new);
        const Eigen::VectorXd s = trial - u.u;
        const Eigen::VectorXd y = g_new - g;
        const double ss = trapezoid_dot(grid, s, s);
        const double sy = trapezoid_dot(grid, s, y);
        step = std::clamp((sy > 0.0 && ss > 0.0) ? ss / sy : 2.0 * step, 1e-12, 1e12);
        u.u = trial;
        f = f_new;
        g = g_new;
        ++iteration;
        done = converged(false);
    }

    // Projected Newton: nodes within eps of a bound whose gradient points
    // outward are moved onto that bound; the others take a
    // Newton step with the dense Hessian of the discrete cost. Negative
    // curvature is reflected and null directions (the alternating node mode,
    // which the interval means cannot see) are dropped.
    Eigen::VectorXd weights(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        weights[i] = grid.weight(i);
    }
    for (int k = 0; !done && k < options.newton_iterations; ++k) {
        const double eps = std::min(1e-3 * range, projected_gradient() * range);
        std::vector<int> free_nodes;
        Eigen::VectorXd d = Eigen::VectorXd::Zero(grid.nodes());
        for (int i = 0; i <= grid.M; ++i) {
            if (u[i] <= bounds.lower + eps && g[i] > 0.0) {
                d[i] = bounds.lower - u[i];
            } else if (u[i] >= bounds.upper - eps && g[i] < 0.0) {
                d[i] = bounds.upper - u[i];
            } else {
                free_nodes.push_back(i);
            }
        }
        const int n_free = static_cast<int>(free_nodes.size());
        if (n_free > 0) {
            Eigen::MatrixXd H(n_free, n_free);
            for (int c = 0; c < n_free; ++c) {
                Eigen::VectorXd up = u.u;
                Eigen::VectorXd down = u.u;
                up[free_nodes[c]] += options.hessian_step;
                down[free_nodes[c]] -= options.hessian_step;
                const Eigen::VectorXd column =
                    (evaluate(up, nullptr) - evaluate(down, nullptr)) / (2.0 * options.hessian_step);
                for (int r = 0; r < n_free; ++r) {
                    H(r, c) = weights[free_nodes[r]] * column[free_nodes[r]];
                }
            }
            const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hs);
            const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
            Eigen::VectorXd rhs(n_free);
            for (int r = 0; r < n_free; ++r) {
                rhs[r] = weights[free_nodes[r]] * g[free_nodes[r]];
            }
            Eigen::VectorXd coeff = eig.eigenvectors().transpose() * rhs;
            for (int j = 0; j < n_free; ++j) {
                const double value = std::abs(eig.eigenvalues()[j]);
                coeff[j] = value > options.null_tolerance * largest ? -coeff[j] / value : 0.0;
            }
            const Eigen::VectorXd d_free = eig.eigenvectors() * coeff;
            for (int r = 0; r < n_free; ++r) {
                d[free_nodes[r]] = d_free[r];
            }
        }

        double newton_step = 1.0;
        Eigen::VectorXd trial;
        double f_trial = 0.0;
        if (!line_search(g, f, d, newton_step, trial, f_trial) &&
            !line_search(g, f, Eigen::VectorXd(-g), step, trial, f_trial)) {
            result.stalled = true;
            break;
        }
        u.u = trial;
        g = evaluate(u.u, &f);
        ++iteration;
        done = converged(true);
    }
    if (!done && !result.stalled && result.history.size() > 1 &&
        result.history.back().cost >= result.history[result.history.size() - 2].cost) {
        result.stalled = true;
    }
    result.converged = done;
    result.u = u;
    return result;
}

}  // namespace bilinctl
