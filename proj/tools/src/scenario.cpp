#include "bilinctl_tools/scenario.hpp"

#include "bilinctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace bilinctl::tools {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& message)
{
    throw Error(ErrorKind::Validation, "scenario field '" + field + "': " + message);
}

// Typed access to one JSON object; remembers which keys were read so that
// unknown keys can be reported.
class Section {
public:
    Section(const Json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            invalid(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return obj_.contains(key); }
    void mark(const std::string& key) { read_.insert(key); }

    double number(const std::string& key, double fallback)
    {
        if (!take(key)) {
            return fallback;
        }
        const Json& v = obj_.at(key);
        if (!v.is_number()) {
            invalid(field(key), "expected a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            invalid(field(key), "must be finite");
        }
        return x;
    }

    int integer(const std::string& key, int fallback)
    {
        if (!take(key)) {
            return fallback;
        }
        const Json& v = obj_.at(key);
        if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == std::floor(v.get<double>()))) {
            invalid(field(key), "expected an integer");
        }
        return static_cast<int>(v.get<double>());
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!take(key)) {
            return fallback;
        }
        if (!obj_.at(key).is_boolean()) {
            invalid(field(key), "expected true or false");
        }
        return obj_.at(key).get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        if (!take(key)) {
            return fallback;
        }
        if (!obj_.at(key).is_string()) {
            invalid(field(key), "expected a string");
        }
        return obj_.at(key).get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback)
    {
        if (!take(key)) {
            return fallback;
        }
        const Json& v = obj_.at(key);
        if (!v.is_array()) {
            invalid(field(key), "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) {
                invalid(field(key), "expected an array of numbers");
            }
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::optional<Section> child(const std::string& key)
    {
        if (!take(key)) {
            return std::nullopt;
        }
        return Section(obj_.at(key), field(key));
    }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (read_.count(it.key()) == 0) {
                invalid(field(it.key()), "unknown field");
            }
        }
    }

private:
    bool take(const std::string& key)
    {
        read_.insert(key);
        return obj_.contains(key);
    }

    const Json& obj_;
    std::string path_;
    std::set<std::string> read_;
};

void require_positive(const std::string& field, double value)
{
    if (!(value > 0.0)) {
        invalid(field, "must be positive");
    }
}

void require_nonnegative(const std::string& field, double value)
{
    if (!(value >= 0.0)) {
        invalid(field, "must be nonnegative");
    }
}

Profile read_profile(Section& parent, const std::string& key, const Profile& fallback)
{
    auto section = parent.child(key);
    if (!section) {
        return fallback;
    }
    Profile p;
    p.name = section->text("profile", fallback.name);
    p.amplitude = section->number("amplitude", fallback.amplitude);
    section->finish();
    const auto& names = profile_names();
    if (std::find(names.begin(), names.end(), p.name) == names.end()) {
        invalid(section->field("profile"), "unknown profile '" + p.name + "'");
    }
    return p;
}

Bounds read_bounds(Section& parent, const Bounds& fallback)
{
    auto section = parent.child("bounds");
    if (!section) {
        return fallback;
    }
    Bounds b;
    b.lower = section->number("lower", fallback.lower);
    b.upper = section->number("upper", fallback.upper);
    section->finish();
    if (!(b.lower < b.upper)) {
        invalid(section->field("upper"), "must exceed bounds.lower");
    }
    return b;
}

void read_weights(Section& s, double& running, double& terminal, double& alpha)
{
    running = s.number("running_weight", running);
    terminal = s.number("terminal_weight", terminal);
    alpha = s.number("alpha", alpha);
    require_nonnegative(s.field("running_weight"), running);
    require_nonnegative(s.field("terminal_weight"), terminal);
}

void read_heat(Section& s, HeatConfig& c)
{
    c.b2 = read_profile(s, "b2", c.b2);
    c.b1 = read_profile(s, "b1", c.b1);
    c.f = read_profile(s, "f", c.f);
    c.psi0 = s.numbers("psi0", c.psi0);
    c.target = s.numbers("target", c.target);
    c.terminal_target = s.numbers("terminal_target", c.terminal_target);
    read_weights(s, c.running_weight, c.terminal_weight, c.alpha);
    c.bounds = read_bounds(s, c.bounds);
    c.quad_points = s.integer("quad_points", c.quad_points);
    require_nonnegative(s.field("quad_points"), c.quad_points);
    s.finish();
}

void read_wave(Section& s, WaveConfig& c)
{
    c.b2 = read_profile(s, "b2", c.b2);
    c.b1 = read_profile(s, "b1", c.b1);
    c.f = read_profile(s, "f", c.f);
    c.displacement0 = s.numbers("displacement0", c.displacement0);
    c.velocity0 = s.numbers("velocity0", c.velocity0);
    c.target_displacement = s.numbers("target_displacement", c.target_displacement);
    c.target_velocity = s.numbers("target_velocity", c.target_velocity);
    c.terminal_displacement = s.numbers("terminal_displacement", c.terminal_displacement);
    c.terminal_velocity = s.numbers("terminal_velocity", c.terminal_velocity);
    read_weights(s, c.running_weight, c.terminal_weight, c.alpha);
    c.bounds = read_bounds(s, c.bounds);
    c.quad_points = s.integer("quad_points", c.quad_points);
    require_nonnegative(s.field("quad_points"), c.quad_points);
    s.finish();
}

void read_toy(Section& s, ToyConfig& c)
{
    c.mu = s.number("mu", c.mu);
    c.b1 = s.number("b1", c.b1);
    c.b2 = s.number("b2", c.b2);
    c.f = s.number("f", c.f);
    c.psi0 = s.number("psi0", c.psi0);
    c.target = s.number("target", c.target);
    c.terminal_target = s.number("terminal_target", c.terminal_target);
    read_weights(s, c.running_weight, c.terminal_weight, c.alpha);
    c.bounds = read_bounds(s, c.bounds);
    s.finish();
}

Family parse_family(const std::string& name)
{
    if (name == "heat") {
        return Family::Heat;
    }
    if (name == "wave") {
        return Family::Wave;
    }
    if (name == "scalar_toy") {
        return Family::ScalarToy;
    }
    invalid("family", "expected heat, wave or scalar_toy, got '" + name + "'");
}

}  // namespace

Scenario parse_scenario(const Json& doc)
{
    Scenario sc;
    sc.source = doc;
    Section root(doc, "");
    sc.name = root.text("name", "scenario");
    if (!root.has("family")) {
        invalid("family", "required");
    }
    sc.family = parse_family(root.text("family", ""));

    if (auto grid = root.child("grid")) {
        sc.N = grid->integer("N", sc.N);
        sc.M = grid->integer("M", sc.M);
        sc.T = grid->number("T", sc.T);
        grid->finish();
    }
    if (sc.N < 1) {
        invalid("grid.N", "must be at least 1");
    }
    if (sc.M < 2) {
        invalid("grid.M", "must be at least 2");
    }
    require_positive("grid.T", sc.T);

    const char* family_key = sc.family == Family::Heat ? "heat" : sc.family == Family::Wave ? "wave" : "scalar_toy";
    for (const char* key : {"heat", "wave", "scalar_toy"}) {
        if (std::string(key) != family_key && root.has(key)) {
            invalid(key, std::string("does not match family '") + family_key + "'");
        }
    }
    if (auto family = root.child(family_key)) {
        switch (sc.family) {
        case Family::Heat: read_heat(*family, sc.heat); break;
        case Family::Wave: read_wave(*family, sc.wave); break;
        case Family::ScalarToy: read_toy(*family, sc.toy); break;
        }
    }

    if (auto solver = root.child("solver")) {
        sc.solver.max_iter = solver->integer("max_iter", sc.solver.max_iter);
        sc.solver.tolerance = solver->number("tolerance", sc.solver.tolerance);
        sc.solver.newton_switch = solver->number("newton_switch", sc.solver.newton_switch);
        sc.solver.newton_iterations = solver->integer("newton_iterations", sc.solver.newton_iterations);
        if (solver->has("initial_control")) {
            sc.solver.initial_control = solver->number("initial_control", 0.0);
        }
        solver->finish();
        require_nonnegative("solver.max_iter", sc.solver.max_iter);
        require_positive("solver.tolerance", sc.solver.tolerance);
        require_positive("solver.newton_switch", sc.solver.newton_switch);
        require_nonnegative("solver.newton_iterations", sc.solver.newton_iterations);
    }

    if (auto checks = root.child("checks")) {
        CheckToggles& t = sc.checks;
        t.taylor = checks->boolean("taylor", t.taylor);
        t.goh_equiv = checks->boolean("goh_equiv", t.goh_equiv);
        t.ibp = checks->boolean("ibp", t.ibp);
        t.gradient = checks->boolean("gradient", t.gradient);
        t.necessary_scan = checks->boolean("necessary_scan", t.necessary_scan);
        t.singular_R = checks->boolean("singular_R", t.singular_R);
        t.coercivity = checks->boolean("coercivity", t.coercivity);
        t.growth = checks->boolean("growth", t.growth);
        t.hypotheses = checks->boolean("hypotheses", t.hypotheses);
        checks->finish();
    }

    if (auto params = root.child("check_params")) {
        CheckParams& p = sc.params;
        const std::vector<double> ms = params->numbers(
            "convergence_M", std::vector<double>(p.convergence_M.begin(), p.convergence_M.end()));
        p.convergence_M.clear();
        for (double m : ms) {
            if (m < 2 || m != std::floor(m)) {
                invalid("check_params.convergence_M", "entries must be integers >= 2");
            }
            p.convergence_M.push_back(static_cast<int>(m));
        }
        if (p.convergence_M.size() < 2) {
            invalid("check_params.convergence_M", "needs at least two grids for an order fit");
        }
        p.gradient_directions = params->integer("gradient_directions", p.gradient_directions);
        p.pc2_samples = params->integer("pc2_samples", p.pc2_samples);
        p.coercivity_basis = params->integer("coercivity_basis", p.coercivity_basis);
        p.growth_directions = params->integer("growth_directions", p.growth_directions);
        p.growth_sigmas = params->numbers("growth_sigmas", p.growth_sigmas);
        params->finish();
        require_positive("check_params.gradient_directions", p.gradient_directions);
        require_positive("check_params.pc2_samples", p.pc2_samples);
        require_positive("check_params.coercivity_basis", p.coercivity_basis);
        require_positive("check_params.growth_directions", p.growth_directions);
        if (p.growth_sigmas.empty()) {
            invalid("check_params.growth_sigmas", "must not be empty");
        }
        for (double s : p.growth_sigmas) {
            require_positive("check_params.growth_sigmas", s);
        }
    }

    if (root.has("seed")) {
        root.mark("seed");
        const Json& s = doc.at("seed");
        if (!s.is_number_unsigned()) {
            invalid("seed", "expected a nonnegative integer");
        }
        sc.seed = s.get<std::uint64_t>();
    }
    if (!sc.seed && sc.checks.any_randomized()) {
        invalid("seed", "required when gradient, necessary_scan or growth is enabled");
    }
    sc.output = root.text("output", sc.output);
    if (sc.output.empty()) {
        invalid("output", "must not be empty");
    }
    root.finish();

    // Build once so that family-level validation errors surface here.
    try {
        (void)sc.build();
    } catch (const Error& e) {
        throw Error(ErrorKind::Validation, std::string("scenario '") + sc.name + "': " + e.what());
    }
    return sc;
}

ProblemInstance Scenario::build(std::optional<int> m_override) const
{
    const int m = m_override.value_or(M);
    switch (family) {
    case Family::Heat: {
        HeatConfig c = heat;
        c.N = N;
        c.M = m;
        c.T = T;
        return build_heat(c);
    }
    case Family::Wave: {
        WaveConfig c = wave;
        c.N = N;
        c.M = m;
        c.T = T;
        return build_wave(c);
    }
    case Family::ScalarToy: {
        ToyConfig c = toy;
        c.M = m;
        c.T = T;
        return build_scalar_toy(c);
    }
    }
    throw Error(ErrorKind::Validation, "unknown family");
}

SolverOptions Scenario::solver_options() const
{
    SolverOptions o;
    o.max_iter = solver.max_iter;
    o.tolerance = solver.tolerance;
    o.newton_switch = solver.newton_switch;
    o.newton_iterations = solver.newton_iterations;
    return o;
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Validation, "cannot open scenario file '" + path + "'");
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Validation, "scenario file '" + path + "' is not valid JSON: " + e.what());
    }
}

Scenario load_scenario(const std::string& path)
{
    return parse_scenario(read_json_file(path));
}

void set_numeric_field(Json& doc, const std::string& path, double value)
{
    Json* node = &doc;
    std::stringstream parts(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(parts, key, '.')) {
        keys.push_back(key);
    }
    if (keys.empty()) {
        throw Error(ErrorKind::Validation, "empty parameter path");
    }
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (!node->is_object()) {
            throw Error(ErrorKind::Validation, "parameter path '" + path + "' does not name a field");
        }
        if (!node->contains(keys[i])) {
            (*node)[keys[i]] = Json::object();
        }
        node = &(*node)[keys[i]];
    }
    if (!node->is_object()) {
        throw Error(ErrorKind::Validation, "parameter path '" + path + "' does not name a field");
    }
    const std::string& leaf = keys.back();
    if (node->contains(leaf) && !(*node)[leaf].is_number()) {
        throw Error(ErrorKind::Validation, "parameter path '" + path + "' is not numeric");
    }
    if (value == std::floor(value) && std::abs(value) < 1e15) {
        (*node)[leaf] = static_cast<long long>(value);
    } else {
        (*node)[leaf] = value;
    }
}

std::string resolve_output_dir(const std::string& dir)
{
    const char* root = std::getenv("BILINCTL_OUTPUT_ROOT");
    if (root == nullptr || *root == '\0') {
        return dir;
    }
    return (std::filesystem::path(root) / std::filesystem::path(dir).relative_path()).string();
}

}  // namespace bilinctl::tools
