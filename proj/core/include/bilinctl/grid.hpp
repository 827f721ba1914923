#pragma once

// Uniform time grids, nodal trajectories and piecewise-linear controls.

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace bilinctl {

struct TimeGrid {
    double T = 1.0;
    int M = 2;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double dt() const { return T / M; }
    double node(int i) const { return T * static_cast<double>(i) / M; }
    int nodes() const { return M + 1; }
    // Composite trapezoid weights.
    double weight(int i) const { return (i == 0 || i == M) ? 0.5 * dt() : dt(); }
};

bool same_grid(const TimeGrid& a, const TimeGrid& b);

struct Trajectory {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> values;

    Trajectory() = default;
    Trajectory(const TimeGrid& g, int dim);

    const Eigen::VectorXd& operator[](int i) const { return values[i]; }
    Eigen::VectorXd& operator[](int i) { return values[i]; }
    int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

    // max_i |y_i| (Euclidean, i.e. energy norm for wave coordinates).
    double sup_norm() const;
};

Trajectory operator-(const Trajectory& a, const Trajectory& b);
Trajectory operator+(const Trajectory& a, const Trajectory& b);
Trajectory operator*(double s, const Trajectory& a);

struct Bounds {
    double lower = -1.0;
    double upper = 1.0;
};

struct ControlSignal {
    TimeGrid grid;
    Eigen::VectorXd u;
    std::optional<Bounds> bounds;

    ControlSignal() = default;
    ControlSignal(const TimeGrid& g, double value, std::optional<Bounds> b = std::nullopt);
    ControlSignal(const TimeGrid& g, Eigen::VectorXd values, std::optional<Bounds> b = std::nullopt);

    double operator[](int i) const { return u[i]; }
    bool feasible(double slack = 0.0) const;
};

// Trapezoid integral of nodal values.
double trapezoid(const TimeGrid& grid, const Eigen::VectorXd& values);
// Cumulative trapezoid integral with value 0 at t = 0.
Eigen::VectorXd cumulative_trapezoid(const TimeGrid& grid, const Eigen::VectorXd& values);

}  // namespace bilinctl
