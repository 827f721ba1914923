#include "bilinctl/dynamics.hpp"

#include "bilinctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace bilinctl {

namespace {

// exp(-h A) or its adjoint as 1x1 or 2x2 diagonal blocks, evaluated once per step size.
class Propagator {
public:
    Propagator(const SpectralOperator& op, double h, bool adjoint)
        : block_(op.kind() == OperatorKind::WaveBlocks ? 2 : 1), entries_(op.dim(), block_)
    {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(op.dim());
        for (int c = 0; c < op.dim(); ++c) {
            unit[c] = 1.0;
            const Eigen::VectorXd col = adjoint ? op.semigroup_adjoint(h, unit) : op.semigroup(h, unit);
            unit[c] = 0.0;
            const int start = (c / block_) * block_;
            for (int r = 0; r < block_; ++r) {
                // entries_(row, column offset inside the block)
                entries_(start + r, c - start) = col[start + r];
            }
        }
    }

    void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const
    {
        if (block_ == 1) {
            out = entries_.col(0).cwiseProduct(in);
            return;
        }
        for (int k = 0; k < in.size(); k += 2) {
            const double a = in[k];
            const double b = in[k + 1];
            out[k] = entries_(k, 0) * a + entries_(k, 1) * b;
            out[k + 1] = entries_(k + 1, 0) * a + entries_(k + 1, 1) * b;
        }
    }

private:
    int block_;
    Eigen::MatrixXd entries_;
};

// Scratch vectors reused across steps.
struct Workspace {
    explicit Workspace(int dim)
        : a(dim), b(dim), stage(dim), next(dim), tmp(dim)
    {
    }
    Eigen::VectorXd a, b, stage, next, tmp;
};

// Solves x = r + c K x (or K^T when transposed) by fixed-point iteration.
// Returns false when the map does not contract or the tolerance is not met.
bool fixed_point(const Eigen::MatrixXd& K, double k_norm, double c, const Eigen::VectorXd& r, bool transposed,
                 const IntegratorOptions& options, Eigen::VectorXd& x, Eigen::VectorXd& next)
{
    if (std::abs(c) * k_norm >= 1.0) {
        return false;
    }
    x = r;
    if (c == 0.0) {
        return true;
    }
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_fixed_point_iterations; ++it) {
        if (transposed) {
            next.noalias() = K.transpose() * x;
        } else {
            next.noalias() = K * x;
        }
        next = r + c * next;
        const double change = (next - x).norm();
        const double scale = std::max(next.norm(), std::numeric_limits<double>::min());
        x.swap(next);
        if (change <= 1e-15 * scale || change >= last) {
            return change <= options.fixed_point_tolerance * scale;
        }
        last = change;
    }
    return last <= options.fixed_point_tolerance * std::max(x.norm(), std::numeric_limits<double>::min());
}

const Eigen::VectorXd& at_or_zero(const std::vector<Eigen::VectorXd>& b, int i, const Eigen::VectorXd& zero)
{
    return b.empty() ? zero : b[i];
}

void check_common(const SpectralOperator& op, const TimeGrid& grid, const Eigen::MatrixXd& K,
                  const Eigen::VectorXd& c, const Eigen::VectorXd& start)
{
    op.check_conforms(start);
    if (K.rows() != op.dim() || K.cols() != op.dim()) {
        throw Error(ErrorKind::Structural, "coupling matrix does not match operator dimension");
    }
    if (c.size() != grid.M) {
        throw Error(ErrorKind::Structural, "coupling coefficients do not match the number of steps");
    }
}

void check_vectors(const SpectralOperator& op, const std::vector<Eigen::VectorXd>& b, int expected, const char* what)
{
    if (b.empty()) {
        return;
    }
    if (static_cast<int>(b.size()) != expected) {
        throw Error(ErrorKind::Structural, std::string(what) + " does not match grid");
    }
    for (const auto& v : b) {
        op.check_conforms(v);
    }
}

[[noreturn]] void step_failure(int i, const TimeGrid& grid)
{
    throw Error(ErrorKind::StepSize, "implicit stage on step " + std::to_string(i) + " (t = " +
                                         std::to_string(grid.node(i)) +
                                         ") does not contract; refine the time grid (increase M)");
}

// Propagators for each subdivision level, built on demand.
class PropagatorCache {
public:
    PropagatorCache(const SpectralOperator& op, double dt, int levels, bool adjoint)
        : op_(op), dt_(dt), adjoint_(adjoint), cache_(levels + 1)
    {
    }

    const Propagator& get(int n)
    {
        int level = 0;
        while ((1 << level) < n) {
            ++level;
        }
        if (!cache_[level]) {
            cache_[level].emplace(op_, dt_ / n, adjoint_);
        }
        return *cache_[level];
    }

private:
    const SpectralOperator& op_;
    double dt_;
    bool adjoint_;
    std::vector<std::optional<Propagator>> cache_;
};

// Forward substeps of one interval with constant coupling c and sources
// interpolated linearly between bl and br. Stores the n + 1 substep states in
// states when it is non-null. y holds the left value on entry and the right
// value on exit.
bool forward_interval(const Propagator& E, const Eigen::MatrixXd& K, double k_norm, double dt, int n, double c,
                      const Eigen::VectorXd& bl, const Eigen::VectorXd& br, const IntegratorOptions& options,
                      Workspace& w, Eigen::VectorXd& y, std::vector<Eigen::VectorXd>* states)
{
    const double h = dt / n;
    if (states != nullptr) {
        states->assign(1, y);
    }
    for (int j = 0; j < n; ++j) {
        const double l0 = static_cast<double>(j) / n;
        const double l1 = static_cast<double>(j + 1) / n;
        w.a.noalias() = K * y;
        w.a = y + (0.5 * h) * (c * w.a + (1.0 - l0) * bl + l0 * br);
        E.apply(w.a, w.b);
        w.b += (0.5 * h) * ((1.0 - l1) * bl + l1 * br);
        if (!fixed_point(K, k_norm, 0.5 * h * c, w.b, false, options, y, w.next)) {
            return false;
        }
        if (states != nullptr) {
            states->push_back(y);
        }
    }
    return true;
}

// Backward multiplier sweep of one interval. mu holds the multiplier of the
// last substep on entry; on exit stage holds (I + h/2 c K^T) E^T mu_1. When
// multipliers is non-null it receives mu_1 .. mu_n (index j - 1 holds mu_j).
bool backward_interval(const Propagator& Et, const Eigen::MatrixXd& K, double k_norm, double dt, int n, double c,
                       const Eigen::VectorXd& mu_last, const IntegratorOptions& options, Workspace& w,
                       Eigen::VectorXd& stage, std::vector<Eigen::VectorXd>* multipliers)
{
    const double h = dt / n;
    Eigen::VectorXd& mu = w.tmp;
    mu = mu_last;
    if (multipliers != nullptr) {
        multipliers->assign(n, Eigen::VectorXd());
        (*multipliers)[n - 1] = mu;
    }
    for (int j = n - 1; j >= 0; --j) {
        // stage = (I + h/2 c K^T) E^T mu_{j+1}
        Et.apply(mu, w.a);
        stage.noalias() = K.transpose() * w.a;
        stage = w.a + (0.5 * h * c) * stage;
        if (j == 0) {
            break;
        }
        if (!fixed_point(K, k_norm, 0.5 * h * c, stage, true, options, w.b, w.next)) {
            return false;
        }
        mu = w.b;
        if (multipliers != nullptr) {
            (*multipliers)[j - 1] = mu;
        }
    }
    return true;
}

}  // namespace

StepSource StepSource::from_nodal(const NodalSource& b)
{
    StepSource out;
    if (b.empty()) {
        return out;
    }
    out.left.assign(b.begin(), b.end() - 1);
    out.right.assign(b.begin() + 1, b.end());
    return out;
}

Eigen::VectorXd step_means(const Eigen::VectorXd& nodal)
{
    if (nodal.size() < 2) {
        throw Error(ErrorKind::Structural, "a control needs at least two nodes");
    }
    const Eigen::Index m = nodal.size() - 1;
    return 0.5 * (nodal.head(m) + nodal.tail(m));
}

std::vector<int> substep_counts(const TimeGrid& grid, const Eigen::VectorXd& c, double k_norm,
                                const IntegratorOptions& options)
{
    std::vector<int> counts(c.size(), 1);
    const int finest = 1 << options.max_step_halvings;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        int n = 1;
        while (std::abs(c[i]) * (grid.dt() / n) * 0.5 * k_norm > 0.25 && n < finest) {
            n *= 2;
        }
        if (std::abs(c[i]) * (grid.dt() / n) * 0.5 * k_norm > 0.25) {
            step_failure(static_cast<int>(i), grid);
        }
        counts[i] = n;
    }
    return counts;
}

Trajectory integrate_forward(const SpectralOperator& op, const TimeGrid& grid, const Eigen::MatrixXd& K,
                             double k_norm, const Eigen::VectorXd& c, const StepSource& b,
                             const Eigen::VectorXd& y0, const IntegratorOptions& options)
{
    check_common(op, grid, K, c, y0);
    check_vectors(op, b.left, grid.M, "left step source");
    check_vectors(op, b.right, grid.M, "right step source");
    if (b.left.empty() != b.right.empty()) {
        throw Error(ErrorKind::Structural, "step source needs both left and right values");
    }
    const int dim = op.dim();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
    const std::vector<int> counts = substep_counts(grid, c, k_norm, options);
    PropagatorCache propagators(op, grid.dt(), options.max_step_halvings, false);
    Workspace w(dim);
    Trajectory y(grid, dim);
    y[0] = y0;
    Eigen::VectorXd x = y0;
    for (int i = 0; i < grid.M; ++i) {
        if (!forward_interval(propagators.get(counts[i]), K, k_norm, grid.dt(), counts[i], c[i],
                              at_or_zero(b.left, i, zero), at_or_zero(b.right, i, zero), options, w, x, nullptr)) {
            step_failure(i, grid);
        }
        y[i + 1] = x;
    }
    return y;
}

AdjointSolution integrate_backward(const SpectralOperator& op, const TimeGrid& grid, const Eigen::MatrixXd& K,
                                   double k_norm, const Eigen::VectorXd& c, const NodalSource& g,
                                   const Eigen::VectorXd& pT, const IntegratorOptions& options)
{
    check_common(op, grid, K, c, pT);
    check_vectors(op, g, grid.nodes(), "costate source");
    const int dim = op.dim();
    const int M = grid.M;
    const double dt = grid.dt();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
    const std::vector<int> counts = substep_counts(grid, c, k_norm, options);
    PropagatorCache propagators(op, dt, options.max_step_halvings, true);
    Workspace w(dim);
    AdjointSolution out{Trajectory(grid, dim), Trajectory(grid, dim)};
    out.multiplier[0].setZero();

    // (I - h'/2 c_{i-1} K^T) lambda_i = rhs, h' the substep of the preceding interval.
    auto solve_node = [&](int i, const Eigen::VectorXd& rhs) {
        const double a = 0.5 * (dt / counts[i - 1]) * c[i - 1];
        if (!fixed_point(K, k_norm, a, rhs, true, options, out.multiplier[i], w.next)) {
            step_failure(i - 1, grid);
        }
    };

    out.p[M] = pT;
    solve_node(M, pT + 0.5 * dt * at_or_zero(g, M, zero));
    Eigen::VectorXd stage(dim);
    for (int i = M - 1; i >= 0; --i) {
        if (!backward_interval(propagators.get(counts[i]), K, k_norm, dt, counts[i], c[i], out.multiplier[i + 1],
                               options, w, stage, nullptr)) {
            step_failure(i, grid);
        }
        const Eigen::VectorXd& gi = at_or_zero(g, i, zero);
        out.p[i] = stage + 0.5 * dt * gi;
        if (i > 0) {
            solve_node(i, stage + dt * gi);
        }
    }
    return out;
}

namespace {

void require_on_grid(const ProblemInstance& prob, const ControlSignal& u, const char* what)
{
    if (!same_grid(prob.grid, u.grid) || u.u.size() != prob.grid.nodes()) {
        throw Error(ErrorKind::Structural, std::string(what) + " is not on the problem grid");
    }
}

}  // namespace

Trajectory solve_state(const ProblemInstance& prob, const ControlSignal& u)
{
    require_on_grid(prob, u, "control");
    const TimeGrid& grid = prob.grid;
    const Eigen::VectorXd c = step_means(u.u);
    StepSource b;
    b.left.resize(grid.M);
    b.right.resize(grid.M);
    Eigen::VectorXd f_left = prob.forcing_at(grid.node(0));
    for (int i = 0; i < grid.M; ++i) {
        const Eigen::VectorXd f_right = prob.forcing_at(grid.node(i + 1));
        b.left[i] = f_left + c[i] * prob.B1;
        b.right[i] = f_right + c[i] * prob.B1;
        f_left = f_right;
    }
    return integrate_forward(prob.op, grid, prob.B2, prob.B2_norm, c, b, prob.psi0);
}

Trajectory solve_linearized(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat,
                            const ControlSignal& v)
{
    require_on_grid(prob, u_hat, "reference control");
    require_on_grid(prob, v, "direction");
    const TimeGrid& grid = prob.grid;
    const Eigen::VectorXd dc = step_means(v.u);
    StepSource b;
    b.left.resize(grid.M);
    b.right.resize(grid.M);
    Eigen::VectorXd coupled_left = prob.B1 + prob.B2 * psi_hat[0];
    for (int i = 0; i < grid.M; ++i) {
        Eigen::VectorXd coupled_right = prob.B1 + prob.B2 * psi_hat[i + 1];
        b.left[i] = dc[i] * coupled_left;
        b.right[i] = dc[i] * coupled_right;
        coupled_left = std::move(coupled_right);
    }
    return integrate_forward(prob.op, grid, prob.B2, prob.B2_norm, step_means(u_hat.u), b,
                             Eigen::VectorXd::Zero(prob.dim()));
}

NodalSource tracking_source(const ProblemInstance& prob, const Trajectory& psi)
{
    NodalSource g(prob.grid.nodes());
    for (int i = 0; i <= prob.grid.M; ++i) {
        g[i] = prob.cost.running_weight * (psi[i] - prob.cost.target_at(prob.grid.node(i), prob.dim()));
    }
    return g;
}

Eigen::VectorXd terminal_costate(const ProblemInstance& prob, const Trajectory& psi)
{
    return prob.cost.terminal_weight * (psi[prob.grid.M] - prob.cost.terminal_target);
}

AdjointSolution solve_adjoint(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat)
{
    require_on_grid(prob, u_hat, "reference control");
    return integrate_backward(prob.op, prob.grid, prob.B2, prob.B2_norm, step_means(u_hat.u),
                              tracking_source(prob, psi_hat), terminal_costate(prob, psi_hat));
}

Trajectory solve_costate(const ProblemInstance& prob, const ControlSignal& u_hat, const Trajectory& psi_hat)
{
    return solve_adjoint(prob, u_hat, psi_hat).p;
}

Eigen::VectorXd step_sensitivity(const ProblemInstance& prob, const ControlSignal& u, const Trajectory& psi,
                                 const Trajectory& multiplier)
{
    require_on_grid(prob, u, "control");
    const TimeGrid& grid = prob.grid;
    const int dim = prob.dim();
    const double dt = grid.dt();
    const Eigen::MatrixXd& K = prob.B2;
    const Eigen::VectorXd c = step_means(u.u);
    const IntegratorOptions options;
    const std::vector<int> counts = substep_counts(grid, c, prob.B2_norm, options);
    PropagatorCache forward(prob.op, dt, options.max_step_halvings, false);
    PropagatorCache backward(prob.op, dt, options.max_step_halvings, true);
    Workspace w(dim);
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> mus;
    Eigen::VectorXd stage(dim);
    Eigen::VectorXd x(dim);
    Eigen::VectorXd et_mu(dim);
    Eigen::VectorXd s(grid.M);
    for (int i = 0; i < grid.M; ++i) {
        const int n = counts[i];
        const double h = dt / n;
        if (n == 1) {
            states = {psi[i], psi[i + 1]};
            mus = {multiplier[i + 1]};
        } else {
            const Eigen::VectorXd bl = prob.forcing_at(grid.node(i)) + c[i] * prob.B1;
            const Eigen::VectorXd br = prob.forcing_at(grid.node(i + 1)) + c[i] * prob.B1;
            x = psi[i];
            if (!forward_interval(forward.get(n), K, prob.B2_norm, dt, n, c[i], bl, br, options, w, x, &states) ||
                !backward_interval(backward.get(n), K, prob.B2_norm, dt, n, c[i], multiplier[i + 1], options, w,
                                   stage, &mus)) {
                step_failure(i, grid);
            }
        }
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            backward.get(n).apply(mus[j], et_mu);
            sum += et_mu.dot(K * states[j] + prob.B1) + mus[j].dot(K * states[j + 1] + prob.B1);
        }
        s[i] = 0.5 * h * sum;
    }
    return s;
}

ControlSignal difference(const ControlSignal& u, const ControlSignal& u_hat)
{
    if (!same_grid(u.grid, u_hat.grid)) {
        throw Error(ErrorKind::Structural, "controls live on different grids");
    }
    return ControlSignal(u.grid, Eigen::VectorXd(u.u - u_hat.u));
}

Perturbations perturbations(const ProblemInstance& prob, const ControlSignal& u_hat, const ControlSignal& u)
{
    const Trajectory psi_hat = solve_state(prob, u_hat);
    const Trajectory psi = solve_state(prob, u);
    Perturbations out;
    out.delta = psi - psi_hat;
    out.eta = out.delta - solve_linearized(prob, u_hat, psi_hat, difference(u, u_hat));
    return out;
}

double ibp_residual(const Trajectory& y, const NodalSource& b, const Trajectory& p, const NodalSource& g)
{
    if (!same_grid(y.grid, p.grid)) {
        throw Error(ErrorKind::Structural, "IBP: trajectories on different grids");
    }
    const TimeGrid& grid = y.grid;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(y.dim());
    Eigen::VectorXd gy(grid.nodes());
    Eigen::VectorXd pb(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        gy[i] = at_or_zero(g, i, zero).dot(y[i]);
        pb[i] = p[i].dot(at_or_zero(b, i, zero));
    }
    const double lhs = p[grid.M].dot(y[grid.M]) + trapezoid(grid, gy);
    const double rhs = p[0].dot(y[0]) + trapezoid(grid, pb);
    return std::abs(lhs - rhs);
}

AprioriReport apriori_bound_check(const ProblemInstance& prob, const ControlSignal& u)
{
    if (prob.op.kind() != OperatorKind::Diagonal) {
        throw Error(ErrorKind::Unsupported, "a-priori bound is exposed for diagonal operators only");
    }
    const Trajectory psi = solve_state(prob, u);
    const TimeGrid& grid = prob.grid;
    Eigen::VectorXd abs_u = u.u.cwiseAbs();
    Eigen::VectorXd f_norm(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        f_norm[i] = prob.forcing_at(grid.node(i)).norm();
    }
    const double u_l1 = trapezoid(grid, abs_u);
    const double lambda = std::max(0.0, -prob.op.growth_bound());
    const double growth = std::exp(lambda * grid.T);
    AprioriReport report;
    report.lhs = psi.sup_norm();
    report.rhs = growth * (prob.psi0.norm() + trapezoid(grid, f_norm) + prob.B1.norm() * u_l1) *
                 std::exp(growth * prob.B2_norm * u_l1);
    report.holds = report.lhs <= report.rhs * (1.0 + 1e-12);
    return report;
}

}  // namespace bilinctl
