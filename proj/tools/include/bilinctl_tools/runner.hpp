#pragma once

// Runs a scenario: solve, evaluate the enabled checks, write the report and
// CSV series. Also builds sweep summaries from written reports.

#include "bilinctl_tools/scenario.hpp"

#include <string>
#include <vector>

namespace bilinctl::tools {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCheckFailure = 2;

// Names of the checks in report order.
const std::vector<std::string>& check_names();

struct RunOutcome {
    Json report;
    int exit_code = kExitPass;
    std::string directory;
};

// Runs the scenario and writes report.json, series.csv, history.csv and, when
// a convergence check is enabled, convergence.csv into out_dir. extra is
// merged into the report under "sweep" when it is not null.
RunOutcome run_scenario(const Scenario& scenario, const std::string& out_dir, const Json& extra = nullptr);

// Same, writing to resolve_output_dir(scenario.output).
RunOutcome run_scenario(const Scenario& scenario);

struct SweepOutcome {
    std::vector<RunOutcome> runs;
    std::string summary_path;
    int exit_code = kExitPass;
};

// One run per value of the numeric field at param_path, each in its own
// run_NNN subdirectory of the scenario output directory, plus summary.csv.
// run_NNN directories from an earlier sweep into the same directory are removed first.
SweepOutcome sweep(const Json& scenario_doc, const std::string& param_path, const std::vector<double>& values);

// Rewrites summary.csv in dir from the report.json of every immediate
// subdirectory (sorted by name), or from dir/report.json when no subdirectory
// holds a report. Returns the number of rows.
int render_summary(const std::string& dir);

// Formatting shared by all CSV writers: 17 significant digits.
std::string format_number(double x);

}  // namespace bilinctl::tools
