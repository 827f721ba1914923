#pragma once

// Builders for the 1-D heat equation, the wave equation and a one-mode toy,
// all on (0,1) with Dirichlet conditions and the sine eigenbasis.

#include "bilinctl/problem.hpp"

#include <string>
#include <vector>

namespace bilinctl {

// Spatial profile selected by name, scaled by amplitude:
// zero, constant, sin (sin(pi x)), sin2 (sin(pi x)^2), poly1 (x(1-x)), poly2 (x^2(1-x)^2).
struct Profile {
    std::string name = "zero";
    double amplitude = 1.0;
};

struct ProfileFunctions {
    ScalarField value;
    ScalarField first;
    ScalarField second;
    bool is_zero = false;
};

ProfileFunctions make_profile(const Profile& profile);
const std::vector<std::string>& profile_names();

struct HeatConfig {
    int N = 8;
    int M = 1024;
    double T = 1.0;
    Profile b2{"poly2", 1.0};
    Profile b1{"zero", 1.0};
    Profile f{"zero", 1.0};
    std::vector<double> psi0{1.0};       // sine coefficients, zero padded
    std::vector<double> target{0.5};     // constant in time
    std::vector<double> terminal_target{0.5};
    double running_weight = 1.0;         // Q = running_weight * I
    double terminal_weight = 1.0;        // Q_T = terminal_weight * I
    double alpha = 0.05;
    Bounds bounds{-1.0, 1.0};
    int quad_points = 0;                 // 0 selects the default rule
};

struct WaveConfig {
    int N = 8;
    int M = 1024;
    double T = 1.0;
    Profile b2{"poly1", 1.0};
    Profile b1{"zero", 1.0};
    Profile f{"zero", 1.0};              // forcing of the velocity equation
    std::vector<double> displacement0{1.0};  // sine coefficients of y1(0)
    std::vector<double> velocity0{};         // sine coefficients of y2(0)
    std::vector<double> target_displacement{};
    std::vector<double> target_velocity{};
    std::vector<double> terminal_displacement{};
    std::vector<double> terminal_velocity{};
    double running_weight = 1.0;
    double terminal_weight = 1.0;
    double alpha = 0.05;
    Bounds bounds{-1.0, 1.0};
    int quad_points = 0;
};

struct ToyConfig {
    double mu = 1.0;
    double b1 = 0.0;
    double b2 = 1.0;
    double f = 0.0;
    double psi0 = 1.0;
    double running_weight = 1.0;
    double terminal_weight = 1.0;
    double target = 0.0;
    double terminal_target = 0.0;
    double alpha = 0.0;
    Bounds bounds{-1.0, 1.0};
    double T = 1.0;
    int M = 1024;
};

ProblemInstance build_heat(const HeatConfig& config);
ProblemInstance build_wave(const WaveConfig& config);
ProblemInstance build_scalar_toy(const ToyConfig& config);

// Integrand of the Goh-transformed form (weight of w^2) evaluated with the
// family's closed-form multiplication operators. Requires
// family_data.has_r_specialization.
double r_specialized(const ProblemInstance& prob, double t, const Eigen::VectorXd& psi, const Eigen::VectorXd& p);

// Wave helpers: sine coefficients of displacement and velocity from energy coordinates.
Eigen::VectorXd wave_displacement(const ProblemInstance& prob, const Eigen::VectorXd& state);
Eigen::VectorXd wave_velocity(const Eigen::VectorXd& state);

}  // namespace bilinctl
