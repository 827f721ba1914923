// bilinctl: run scenarios, parameter sweeps and summary rendering.

#include "bilinctl/errors.hpp"
#include "bilinctl_tools/runner.hpp"
#include "bilinctl_tools/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace bilinctl::tools;

void print_checks(const Json& report)
{
    for (const auto& c : report["checks"]) {
        std::cout << "  " << c["name"].get<std::string>() << ": " << c["status"].get<std::string>() << '\n';
    }
}

int command_run(const std::string& file)
{
    const Scenario sc = load_scenario(file);
    const RunOutcome out = run_scenario(sc);
    std::cout << sc.name << " -> " << out.directory << " [" << out.report["status"].get<std::string>() << "]\n";
    print_checks(out.report);
    return out.exit_code;
}

int command_sweep(const std::string& file, const std::string& param, const std::vector<double>& values)
{
    const SweepOutcome out = sweep(read_json_file(file), param, values);
    for (const RunOutcome& run : out.runs) {
        std::cout << run.directory << " [" << run.report["status"].get<std::string>() << "]\n";
    }
    std::cout << "summary: " << out.summary_path << '\n';
    return out.exit_code;
}

int command_report(const std::string& dir)
{
    const int rows = render_summary(dir);
    std::cout << "summary: " << dir << "/summary.csv (" << rows << " rows)\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bilinear control: simulation, optimality checks and verification reports"};
    app.require_subcommand(1);

    std::string run_file;
    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("file", run_file, "Scenario JSON file")->required();

    std::string sweep_file;
    std::string param;
    std::vector<double> values;
    auto* sw = app.add_subcommand("sweep", "Run a scenario once per value of a numeric field");
    sw->add_option("file", sweep_file, "Scenario JSON file")->required();
    sw->add_option("--param", param, "Dotted field path, e.g. grid.M")->required();
    sw->add_option("--values", values, "Values (space or comma separated)")->required()->delimiter(',');

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "Rebuild summary.csv from the reports in a directory");
    rep->add_option("dir", report_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*run) {
            return command_run(run_file);
        }
        if (*sw) {
            return command_sweep(sweep_file, param, values);
        }
        return command_report(report_dir);
    } catch (const bilinctl::Error& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
