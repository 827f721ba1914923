#include "bilinctl_tools/runner.hpp"

#include "bilinctl/dynamics.hpp"
#include "bilinctl/errors.hpp"
#include "bilinctl/objective.hpp"
#include "bilinctl/optimality.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

namespace bilinctl::tools {

namespace fs = std::filesystem;

namespace {

constexpr double kTaylorTolerance = 1e-6;
constexpr double kGohTolerance = 1e-5;
constexpr double kIbpTolerance = 1e-6;
constexpr double kMinOrder = 1.9;
constexpr double kExactFloor = 1e-13;  // residuals below this on every grid count as exact
constexpr double kGradientTolerance = 1e-5;
constexpr double kSecondOrderSlack = 1e-6;  // relative to the scale of the tested quantity
constexpr double kSymmetryTolerance = 1e-10;
constexpr double kCoercivityThreshold = 1e-4;
constexpr double kFirstOrderTolerance = 1e-6;

Json number_or_null(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json to_json(const std::vector<double>& v)
{
    Json out = Json::array();
    for (double x : v) {
        out.push_back(number_or_null(x));
    }
    return out;
}

Json check_entry(const std::string& name, const std::string& status, Json tolerance, Json values)
{
    Json c;
    c["name"] = name;
    c["status"] = status;
    c["tolerance"] = std::move(tolerance);
    c["values"] = std::move(values);
    return c;
}

// Smooth test controls on [0, T] built from the bounds, so that the same
// functions can be sampled on every grid of a convergence study.
struct TestControls {
    double mid;
    double half;
    double T;

    ControlSignal sample(const TimeGrid& grid, const std::function<double(double)>& f) const
    {
        Eigen::VectorXd v(grid.nodes());
        for (int i = 0; i <= grid.M; ++i) {
            v[i] = f(grid.node(i));
        }
        return ControlSignal(grid, v);
    }
    ControlSignal reference(const TimeGrid& g) const
    {
        return sample(g, [&](double t) { return mid + 0.3 * half * std::sin(2.0 * std::numbers::pi * t / T + 0.3); });
    }
    ControlSignal perturbed(const TimeGrid& g) const
    {
        return sample(g, [&](double t) {
            return mid + 0.3 * half * std::sin(2.0 * std::numbers::pi * t / T + 0.3) +
                   0.25 * half * std::cos(3.0 * std::numbers::pi * t / T);
        });
    }
    ControlSignal direction(const TimeGrid& g) const
    {
        return sample(g, [&](double t) { return half * std::sin(2.0 * std::numbers::pi * t / T); });
    }
};

struct Convergence {
    std::vector<int> grids;  // sorted ascending
    std::vector<double> residuals;
    double at_scenario_grid = 0.0;
};

// Evaluates residual(prob) on each convergence grid and on the scenario grid.
Convergence convergence_study(const Scenario& sc, const std::function<double(const ProblemInstance&)>& residual)
{
    Convergence c;
    c.grids = sc.params.convergence_M;
    std::sort(c.grids.begin(), c.grids.end());
    bool scenario_grid_seen = false;
    for (int m : c.grids) {
        c.residuals.push_back(residual(sc.build(m)));
        if (m == sc.M) {
            c.at_scenario_grid = c.residuals.back();
            scenario_grid_seen = true;
        }
    }
    if (!scenario_grid_seen) {
        c.at_scenario_grid = residual(sc.build());
    }
    return c;
}

// The tolerance applies to the finest grid; the order is the log-log slope over all grids.
Json convergence_check(const std::string& name, const Convergence& c, double tolerance)
{
    std::vector<double> h;
    for (int m : c.grids) {
        h.push_back(1.0 / m);
    }
    const bool exact = std::all_of(c.residuals.begin(), c.residuals.end(),
                                   [](double r) { return std::abs(r) < kExactFloor; });
    const double order = loglog_slope(h, c.residuals);
    const double finest = c.residuals.back();
    const bool pass = finest <= tolerance && (exact || order >= kMinOrder);
    Json values;
    values["residual"] = number_or_null(finest);
    values["M"] = c.grids.back();
    values["residual_at_M"] = number_or_null(c.at_scenario_grid);
    values["order"] = exact ? Json(nullptr) : number_or_null(order);
    values["exact"] = exact;
    values["grids"] = c.grids;
    values["residuals"] = to_json(c.residuals);
    Json tol;
    tol["residual"] = tolerance;
    tol["min_order"] = kMinOrder;
    return check_entry(name, pass ? "pass" : "fail", tol, values);
}

Eigen::VectorXd random_direction(const TimeGrid& grid, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd coeff(kFourierModes);
    for (int k = 0; k < kFourierModes; ++k) {
        coeff[k] = normal(rng);
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) {
        const double t = grid.node(i) / grid.T;
        for (int k = 0; k < kFourierModes; ++k) {
            const int freq = (k + 1) / 2;
            const double arg = 2.0 * std::numbers::pi * freq * t;
            v[i] += coeff[k] * (k == 0 ? 1.0 : (k % 2 == 1 ? std::cos(arg) : std::sin(arg)));
        }
    }
    const double peak = v.cwiseAbs().maxCoeff();
    return peak > 0.0 ? Eigen::VectorXd(v / peak) : v;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Validation, "cannot write '" + path.string() + "'");
    }
    out << text;
}

std::string csv_line(const std::vector<std::string>& cells)
{
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            line += ',';
        }
        line += cells[i];
    }
    return line + '\n';
}

const Json* find_check(const Json& report, const std::string& name)
{
    if (!report.contains("checks")) {
        return nullptr;
    }
    for (const auto& c : report["checks"]) {
        if (c.value("name", "") == name) {
            return &c;
        }
    }
    return nullptr;
}

std::string json_cell(const Json& v)
{
    if (v.is_null()) {
        return "";
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "1" : "0";
    }
    if (v.is_number()) {
        return format_number(v.get<double>());
    }
    if (v.is_string()) {
        return v.get<std::string>();
    }
    return "";
}

// Main value of each check in the summary.
const std::vector<std::pair<std::string, std::string>>& summary_columns()
{
    static const std::vector<std::pair<std::string, std::string>> columns{
        {"taylor", "residual_at_M"},   {"taylor", "residual"},      {"taylor", "order"},
        {"goh_equiv", "residual_at_M"}, {"goh_equiv", "residual"},  {"goh_equiv", "order"},
        {"ibp", "residual_at_M"},      {"ibp", "residual"},         {"ibp", "order"},
        {"gradient", "max_rel_err"},   {"necessary_scan", "min_qhat"}, {"singular_R", "min_r"},
        {"coercivity", "alpha_hat"},   {"growth", "ratio_min"},     {"hypotheses", "passes"},
    };
    return columns;
}

bool is_run_directory(const fs::path& path)
{
    const std::string name = path.filename().string();
    return name.size() == 7 && name.rfind("run_", 0) == 0 &&
           std::all_of(name.begin() + 4, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

// Removes run_NNN subdirectories left by an earlier sweep into the same directory.
void remove_previous_runs(const fs::path& root)
{
    if (!fs::is_directory(root)) {
        return;
    }
    std::vector<fs::path> stale;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && is_run_directory(entry.path()) && fs::exists(entry.path() / "report.json")) {
            stale.push_back(entry.path());
        }
    }
    for (const auto& path : stale) {
        fs::remove_all(path);
    }
}

}  // namespace

std::string format_number(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const std::vector<std::string>& check_names()
{
    static const std::vector<std::string> names{"taylor",     "goh_equiv", "ibp",    "gradient",  "necessary_scan",
                                                "singular_R", "coercivity", "growth", "hypotheses"};
    return names;
}

RunOutcome run_scenario(const Scenario& sc, const std::string& out_dir, const Json& extra)
{
    const ProblemInstance prob = sc.build();
    const TimeGrid& grid = prob.grid;
    const Bounds bounds = prob.bounds;
    const double range = bounds.upper - bounds.lower;
    const std::uint64_t seed = sc.seed.value_or(0);

    // Solve.
    const double u0 = sc.solver.initial_control.value_or(0.5 * (bounds.lower + bounds.upper));
    const SolverResult solved = projected_gradient_solve(prob, ControlSignal(grid, u0), sc.solver_options());
    const Reference ref = make_reference(prob, solved.u);
    const Eigen::VectorXd density = discrete_gradient_density(prob, solved.u, ref.psi, ref.multiplier);
    const ArcStructure arcs = detect_arcs(solved.u, bounds, density);
    const Eigen::VectorXd R = r_series(prob, ref.psi, ref.p);
    const double scale = lambda_scale(density);
    const double fo = first_order_residual(solved.u, bounds, density);

    Json report;
    report["scenario"] = sc.source;
    if (!extra.is_null()) {
        report["sweep"] = extra;
    }
    Json inst;
    inst["family"] = to_string(prob.family);
    inst["dim"] = prob.dim();
    inst["N"] = prob.family == Family::ScalarToy ? 1 : sc.N;
    inst["M"] = grid.M;
    inst["T"] = grid.T;
    inst["B2_norm"] = prob.B2_norm;
    inst["commutator_discrepancy"] = number_or_null(prob.family_data.commutator_discrepancy);
    inst["bracket_discrepancy"] = number_or_null(prob.family_data.bracket_discrepancy);
    inst["bracket_sign"] = prob.family_data.bracket_sign;
    report["instance"] = inst;

    Json sol;
    sol["cost"] = ref.cost;
    sol["iterations"] = solved.history.empty() ? 0 : solved.history.back().iteration;
    sol["converged"] = solved.converged;
    sol["stalled"] = solved.stalled;
    sol["projected_gradient"] = solved.history.empty() ? 0.0 : solved.history.back().projected_gradient;
    sol["first_order_residual"] = fo;
    sol["lambda_scale"] = scale;
    sol["first_order_tolerance"] = kFirstOrderTolerance * scale;
    sol["first_order_ok"] = fo <= kFirstOrderTolerance * scale;
    report["solution"] = sol;

    Json arc_list = Json::array();
    for (const Arc& a : arcs.arcs) {
        Json j;
        j["kind"] = to_string(a.kind);
        j["first_node"] = a.first_node;
        j["last_node"] = a.last_node;
        j["t_start"] = a.t_start;
        j["t_end"] = a.t_end;
        arc_list.push_back(j);
    }
    report["arcs"] = arc_list;
    report["junctions"] = arcs.junctions;
    report["bang_bang_junctions"] = arcs.bang_bang;

    // Second-order quantities shared by several checks.
    const bool need_coercivity = sc.checks.coercivity || sc.checks.growth;
    const bool need_hypotheses = sc.checks.hypotheses || sc.checks.growth;
    CoercivityReport coercivity;
    if (need_coercivity) {
        coercivity = coercivity_estimate(prob, ref, arcs, sc.params.coercivity_basis);
    }
    HypothesesReport hypotheses;
    if (need_hypotheses) {
        hypotheses = structural_hypotheses_check(solved.u, ref.lambda, R, arcs, 1e-8 * lambda_scale(ref.lambda));
    }

    const TestControls tc{0.5 * (bounds.lower + bounds.upper), 0.5 * range, grid.T};
    Json checks = Json::array();
    std::vector<std::vector<std::string>> convergence_rows;
    auto record_convergence = [&](const std::string& name, const Convergence& c) {
        for (std::size_t k = 0; k < c.grids.size(); ++k) {
            convergence_rows.push_back({name, std::to_string(c.grids[k]), format_number(c.residuals[k])});
        }
    };

    if (sc.checks.taylor) {
        const Convergence c = convergence_study(sc, [&](const ProblemInstance& p) {
            return taylor_identity_residual(p, tc.reference(p.grid), tc.perturbed(p.grid));
        });
        record_convergence("taylor", c);
        checks.push_back(convergence_check("taylor", c, kTaylorTolerance));
    }
    if (sc.checks.goh_equiv) {
        const Convergence c = convergence_study(sc, [&](const ProblemInstance& p) {
            return goh_equivalence(p, tc.reference(p.grid), tc.direction(p.grid)).equivalence_residual;
        });
        record_convergence("goh_equiv", c);
        checks.push_back(convergence_check("goh_equiv", c, kGohTolerance));
    }
    if (sc.checks.ibp) {
        const Convergence c = convergence_study(sc, [&](const ProblemInstance& p) {
            const ControlSignal u_hat = tc.reference(p.grid);
            const ControlSignal v = tc.direction(p.grid);
            const Reference r = make_reference(p, u_hat);
            const Trajectory z = solve_linearized(p, u_hat, r.psi, v);
            NodalSource b(p.grid.nodes());
            for (int i = 0; i <= p.grid.M; ++i) {
                b[i] = v[i] * (p.B1 + p.B2 * r.psi[i]);
            }
            return ibp_residual(z, b, r.p, tracking_source(p, r.psi));
        });
        record_convergence("ibp", c);
        checks.push_back(convergence_check("ibp", c, kIbpTolerance));
    }
    if (sc.checks.gradient) {
        std::mt19937_64 rng(seed);
        std::vector<double> errors;
        std::vector<double> switching_errors;
        for (int k = 0; k < sc.params.gradient_directions; ++k) {
            const ControlSignal v(grid, random_direction(grid, rng));
            const GradientCheck g = gradient_check(prob, solved.u, v);
            errors.push_back(g.both_zero ? 0.0 : g.rel_err);
            switching_errors.push_back(g.both_zero ? 0.0 : g.switching_rel_err);
        }
        const double worst = *std::max_element(errors.begin(), errors.end());
        Json values;
        values["max_rel_err"] = worst;
        values["rel_errs"] = to_json(errors);
        values["switching_max_rel_err"] = *std::max_element(switching_errors.begin(), switching_errors.end());
        checks.push_back(
            check_entry("gradient", worst <= kGradientTolerance ? "pass" : "fail", kGradientTolerance, values));
    }
    Eigen::VectorXd plot_w = Eigen::VectorXd::Zero(grid.nodes());
    if (sc.checks.necessary_scan) {
        const auto samples = sample_pc2(arcs, grid, sc.params.pc2_samples, seed + 1);
        const NecessaryScan scan = necessary_scan(prob, ref, samples);
        if (scan.argmin >= 0) {
            plot_w = samples[scan.argmin].w;
        }
        Json values;
        values["min_qhat"] = scan.min_qhat;
        values["scale"] = scan.scale;
        values["argmin"] = scan.argmin;
        values["samples"] = static_cast<int>(samples.size());
        const double tol = -kSecondOrderSlack * scan.scale;
        checks.push_back(check_entry("necessary_scan", scan.min_qhat >= tol ? "pass" : "fail", tol, values));
    }
    if (sc.checks.singular_R) {
        const SingularRCheck r = singular_r_check(R, arcs);
        Json values;
        values["applicable"] = r.applicable;
        values["min_r"] = r.applicable ? Json(r.min_r) : Json(nullptr);
        values["scale"] = r.scale;
        values["nodes_checked"] = r.nodes_checked;
        const double tol = -kSecondOrderSlack * r.scale;
        const std::string status = !r.applicable ? "n/a" : (r.min_r >= tol ? "pass" : "fail");
        checks.push_back(check_entry("singular_R", status, tol, values));
    }
    if (sc.checks.coercivity) {
        const double form_scale = std::max(1.0, coercivity.form.size() > 0 ? coercivity.form.cwiseAbs().maxCoeff() : 0.0);
        Json values;
        values["alpha_hat"] = number_or_null(coercivity.alpha_hat);
        values["positive"] = coercivity.alpha_hat > kCoercivityThreshold;
        values["n_basis"] = coercivity.n_basis;
        values["rank"] = coercivity.rank;
        values["degenerate"] = coercivity.degenerate;
        values["symmetry_error"] = coercivity.symmetry_error;
        values["diagonal_error"] = coercivity.diagonal_error;
        const bool symmetric = coercivity.symmetry_error <= kSymmetryTolerance * form_scale;
        const std::string status = coercivity.degenerate ? "n/a" : (symmetric ? "pass" : "fail");
        checks.push_back(check_entry("coercivity", status, kSymmetryTolerance, values));
    }
    if (sc.checks.growth) {
        const GrowthReport g = growth_probe(prob, ref, sc.params.growth_directions, sc.params.growth_sigmas, seed + 2);
        const bool premise = !coercivity.degenerate && coercivity.alpha_hat > kCoercivityThreshold && hypotheses.passes;
        Json values;
        values["ratio_min"] = g.evaluated > 0 ? Json(g.ratio_min) : Json(nullptr);
        values["evaluated"] = g.evaluated;
        values["skipped"] = g.skipped;
        values["premise"] = premise;
        values["sigmas"] = sc.params.growth_sigmas;
        std::string status = "n/a";
        if (premise && g.evaluated > 0) {
            status = g.ratio_min > 0.0 ? "pass" : "fail";
        }
        Json tol;
        tol["ratio_min_above"] = 0.0;
        tol["coercivity_threshold"] = kCoercivityThreshold;
        checks.push_back(check_entry("growth", status, tol, values));
    }
    if (sc.checks.hypotheses) {
        Json values;
        values["passes"] = hypotheses.passes;
        values["arc_count"] = hypotheses.arc_count;
        values["has_boundary_arcs"] = hypotheses.has_boundary_arcs;
        values["min_boundary_lambda"] =
            hypotheses.has_boundary_arcs ? Json(hypotheses.min_boundary_lambda) : Json(nullptr);
        values["strict_complementarity"] = hypotheses.strict_complementarity;
        values["lambda_at_start"] = hypotheses.lambda_at_start ? Json(*hypotheses.lambda_at_start) : Json(nullptr);
        values["lambda_at_end"] = hypotheses.lambda_at_end ? Json(*hypotheses.lambda_at_end) : Json(nullptr);
        values["endpoint_flag"] = hypotheses.endpoint_flag;
        values["min_r_bang_bang"] = hypotheses.min_r_bang_bang ? Json(*hypotheses.min_r_bang_bang) : Json(nullptr);
        checks.push_back(check_entry("hypotheses", hypotheses.passes ? "pass" : "fail", 1e-8, values));
    }
    report["checks"] = checks;

    bool failed = false;
    for (const auto& c : checks) {
        failed = failed || c["status"] == "fail";
    }
    report["status"] = failed ? "fail" : "pass";

    // Files.
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    Json files = Json::array({"report.json", "series.csv", "history.csv"});
    if (!convergence_rows.empty()) {
        files.push_back("convergence.csv");
    }
    report["files"] = files;

    std::string series = csv_line({"t", "u", "lambda", "gradient_density", "R", "w"});
    for (int i = 0; i <= grid.M; ++i) {
        series += csv_line({format_number(grid.node(i)), format_number(solved.u[i]), format_number(ref.lambda[i]),
                            format_number(density[i]), format_number(R[i]), format_number(plot_w[i])});
    }
    write_text(dir / "series.csv", series);

    std::string history = csv_line({"iteration", "cost", "projected_gradient", "step", "newton"});
    for (const SolverIterate& it : solved.history) {
        history += csv_line({std::to_string(it.iteration), format_number(it.cost), format_number(it.projected_gradient),
                             format_number(it.step), it.newton ? "1" : "0"});
    }
    write_text(dir / "history.csv", history);

    if (!convergence_rows.empty()) {
        std::string conv = csv_line({"check", "M", "residual"});
        for (const auto& row : convergence_rows) {
            conv += csv_line(row);
        }
        write_text(dir / "convergence.csv", conv);
    }
    write_text(dir / "report.json", report.dump(2) + "\n");

    RunOutcome outcome;
    outcome.report = std::move(report);
    outcome.exit_code = failed ? kExitCheckFailure : kExitPass;
    outcome.directory = dir.string();
    return outcome;
}

RunOutcome run_scenario(const Scenario& scenario)
{
    return run_scenario(scenario, resolve_output_dir(scenario.output));
}

SweepOutcome sweep(const Json& scenario_doc, const std::string& param_path, const std::vector<double>& values)
{
    if (values.empty()) {
        throw Error(ErrorKind::Validation, "sweep needs at least one value");
    }
    // Validate the base scenario and every variant before running anything.
    const Scenario base = parse_scenario(scenario_doc);
    std::vector<Scenario> variants;
    for (double value : values) {
        Json doc = scenario_doc;
        set_numeric_field(doc, param_path, value);
        variants.push_back(parse_scenario(doc));
    }

    SweepOutcome out;
    const fs::path root(resolve_output_dir(base.output));
    remove_previous_runs(root);
    for (std::size_t k = 0; k < variants.size(); ++k) {
        char label[32];
        std::snprintf(label, sizeof label, "run_%03zu", k);
        Json extra;
        extra["param"] = param_path;
        extra["value"] = values[k];
        extra["index"] = static_cast<int>(k);
        out.runs.push_back(run_scenario(variants[k], (root / label).string(), extra));
        if (out.runs.back().exit_code != kExitPass) {
            out.exit_code = kExitCheckFailure;
        }
    }
    render_summary(root.string());
    out.summary_path = (root / "summary.csv").string();
    return out;
}

int render_summary(const std::string& dir)
{
    const fs::path root(dir);
    if (!fs::is_directory(root)) {
        throw Error(ErrorKind::Validation, "'" + dir + "' is not a directory");
    }
    std::vector<fs::path> reports;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "report.json")) {
            reports.push_back(entry.path() / "report.json");
        }
    }
    std::sort(reports.begin(), reports.end());
    if (reports.empty() && fs::exists(root / "report.json")) {
        reports.push_back(root / "report.json");
    }

    std::vector<std::string> header{"run",  "param", "value", "status", "cost", "first_order_residual", "lambda_scale",
                                    "commutator_discrepancy", "bracket_discrepancy"};
    for (const auto& [check, field] : summary_columns()) {
        header.push_back(check + "_" + field);
    }
    for (const auto& name : check_names()) {
        header.push_back(name + "_status");
    }
    std::string text = csv_line(header);
    for (const auto& path : reports) {
        std::ifstream in(path);
        const Json report = Json::parse(in);
        std::vector<std::string> row;
        row.push_back(fs::relative(path.parent_path(), root).generic_string());
        const Json sweep_info = report.value("sweep", Json(nullptr));
        row.push_back(sweep_info.is_null() ? "" : json_cell(sweep_info["param"]));
        row.push_back(sweep_info.is_null() ? "" : json_cell(sweep_info["value"]));
        row.push_back(json_cell(report.value("status", Json(nullptr))));
        const Json sol = report.value("solution", Json::object());
        row.push_back(json_cell(sol.value("cost", Json(nullptr))));
        row.push_back(json_cell(sol.value("first_order_residual", Json(nullptr))));
        row.push_back(json_cell(sol.value("lambda_scale", Json(nullptr))));
        const Json inst = report.value("instance", Json::object());
        row.push_back(json_cell(inst.value("commutator_discrepancy", Json(nullptr))));
        row.push_back(json_cell(inst.value("bracket_discrepancy", Json(nullptr))));
        for (const auto& [check, field] : summary_columns()) {
            const Json* c = find_check(report, check);
            row.push_back(c == nullptr ? "" : json_cell((*c)["values"].value(field, Json(nullptr))));
        }
        for (const auto& name : check_names()) {
            const Json* c = find_check(report, name);
            row.push_back(c == nullptr ? "" : json_cell((*c)["status"]));
        }
        text += csv_line(row);
    }
    write_text(root / "summary.csv", text);
    return static_cast<int>(reports.size());
}

}  // namespace bilinctl::tools
