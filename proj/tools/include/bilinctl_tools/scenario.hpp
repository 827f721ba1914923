#pragma once

// Scenario files: one JSON document describing an instance, the solver
// settings, the verification checks to run and where to write results.

#include "bilinctl/optimality.hpp"
#include "bilinctl/problem.hpp"
#include "bilinctl/problems.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bilinctl::tools {

using Json = nlohmann::ordered_json;

struct CheckToggles {
    bool taylor = false;
    bool goh_equiv = false;
    bool ibp = false;
    bool gradient = false;
    bool necessary_scan = false;
    bool singular_R = false;
    bool coercivity = false;
    bool growth = false;
    bool hypotheses = false;

    bool any_randomized() const { return gradient || necessary_scan || growth; }
};

struct CheckParams {
    std::vector<int> convergence_M{256, 512, 1024, 2048};
    int gradient_directions = 10;
    int pc2_samples = 64;
    int coercivity_basis = 16;
    int growth_directions = 200;
    std::vector<double> growth_sigmas{0.1, 0.05, 0.025};
};

struct SolverParams {
    int max_iter = 5000;
    double tolerance = 1e-9;
    double newton_switch = 1e-2;
    int newton_iterations = 60;
    std::optional<double> initial_control;  // default: midpoint of the bounds
};

struct Scenario {
    std::string name;
    Family family = Family::ScalarToy;
    HeatConfig heat;
    WaveConfig wave;
    ToyConfig toy;
    int N = 8;
    int M = 1024;
    double T = 1.0;
    SolverParams solver;
    CheckToggles checks;
    CheckParams params;
    std::optional<std::uint64_t> seed;
    std::string output = "out";
    Json source;  // the parsed document, echoed into reports

    // Instance with the scenario grid, or with M replaced by m_override.
    ProblemInstance build(std::optional<int> m_override = std::nullopt) const;
    SolverOptions solver_options() const;
};

// Parses and validates; throws bilinctl::Error(Validation) naming the field.
Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::string& path);
Json read_json_file(const std::string& path);

// Sets the numeric field at a dotted path such as "grid.M" or "heat.b2.amplitude".
// Missing fields are created (so defaults can be swept); parse_scenario rejects
// names it does not know. Throws Validation when the path crosses or ends at a
// non-numeric value.
void set_numeric_field(Json& doc, const std::string& path, double value);

// Output directory with BILINCTL_OUTPUT_ROOT prepended when it is set.
std::string resolve_output_dir(const std::string& dir);

}  // namespace bilinctl::tools
