#include "bilinctl/grid.hpp"

#include "bilinctl/errors.hpp"

#include <cmath>
#include <string>

namespace bilinctl {

TimeGrid::TimeGrid(double horizon, int steps) : T(horizon), M(steps)
{
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::Validation, "horizon T must be positive");
    }
    if (steps < 2) {
        throw Error(ErrorKind::Validation, "step count M must be at least 2, got " + std::to_string(steps));
    }
}

bool same_grid(const TimeGrid& a, const TimeGrid& b)
{
    return a.M == b.M && a.T == b.T;
}

Trajectory::Trajectory(const TimeGrid& g, int dim) : grid(g), values(g.nodes(), Eigen::VectorXd::Zero(dim)) {}

double Trajectory::sup_norm() const
{
    double m = 0.0;
    for (const auto& v : values) {
        m = std::max(m, v.norm());
    }
    return m;
}

namespace {

void require_compatible(const Trajectory& a, const Trajectory& b)
{
    if (!same_grid(a.grid, b.grid) || a.values.size() != b.values.size() || a.dim() != b.dim()) {
        throw Error(ErrorKind::Structural, "trajectories live on different grids or spaces");
    }
}

}  // namespace

Trajectory operator-(const Trajectory& a, const Trajectory& b)
{
    require_compatible(a, b);
    Trajectory out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] -= b.values[i];
    }
    return out;
}

Trajectory operator+(const Trajectory& a, const Trajectory& b)
{
    require_compatible(a, b);
    Trajectory out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += b.values[i];
    }
    return out;
}

Trajectory operator*(double s, const Trajectory& a)
{
    Trajectory out = a;
    for (auto& v : out.values) {
        v *= s;
    }
    return out;
}

ControlSignal::ControlSignal(const TimeGrid& g, double value, std::optional<Bounds> b)
    : grid(g), u(Eigen::VectorXd::Constant(g.nodes(), value)), bounds(b)
{
}

ControlSignal::ControlSignal(const TimeGrid& g, Eigen::VectorXd values, std::optional<Bounds> b)
    : grid(g), u(std::move(values)), bounds(b)
{
    if (u.size() != g.nodes()) {
        throw Error(ErrorKind::Structural, "control has " + std::to_string(u.size()) + " values, grid has " +
                                               std::to_string(g.nodes()) + " nodes");
    }
    if (bounds && !(bounds->lower < bounds->upper)) {
        throw Error(ErrorKind::Validation, "control bounds need lower < upper");
    }
}

bool ControlSignal::feasible(double slack) const
{
    if (!bounds) {
        return true;
    }
    return u.minCoeff() >= bounds->lower - slack && u.maxCoeff() <= bounds->upper + slack;
}

double trapezoid(const TimeGrid& grid, const Eigen::VectorXd& values)
{
    if (values.size() != grid.nodes()) {
        throw Error(ErrorKind::Structural, "trapezoid: value count does not match grid");
    }
    double sum = 0.0;
    for (int i = 0; i <= grid.M; ++i) {
        sum += grid.weight(i) * values[i];
    }
    return sum;
}

Eigen::VectorXd cumulative_trapezoid(const TimeGrid& grid, const Eigen::VectorXd& values)
{
    if (values.size() != grid.nodes()) {
        throw Error(ErrorKind::Structural, "cumulative trapezoid: value count does not match grid");
    }
    Eigen::VectorXd w(grid.nodes());
    w[0] = 0.0;
    const double half = 0.5 * grid.dt();
    for (int i = 0; i < grid.M; ++i) {
        w[i + 1] = w[i] + half * (values[i] + values[i + 1]);
    }
    return w;
}

}  // namespace bilinctl
