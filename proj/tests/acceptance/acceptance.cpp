// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include "bilinctl/dynamics.hpp"
#include "bilinctl/objective.hpp"
#include "bilinctl/optimality.hpp"
#include "bilinctl/problems.hpp"
#include "bilinctl/spectral.hpp"
#include "bilinctl_tools/runner.hpp"
#include "bilinctl_tools/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bilinctl;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kTaylorTol = 1e-6;          // at M = 1024
constexpr double kGohTol = 1e-5;             // at M = 2048
constexpr double kGradientTol = 1e-5;
constexpr double kIbpTol = 1e-6;             // at M = 2048
constexpr double kMinOrder = 1.9;
constexpr double kCubicSpread = 2.0;         // max / min of remainder / sigma^3
constexpr double kMinSlopeW = 1.0;
constexpr double kMinEtaSlope = 1.9;
constexpr double kCommutatorHalving = 0.6;
constexpr double kWaveCommutatorTol = 1e-3;
constexpr double kContractionTol = 1e-12;
constexpr double kEnergyDriftTol = 1e-10;
constexpr double kCompositionTol = 1e-12;
constexpr double kFirstOrderTol = 1e-6;      // relative to scale(Lambda)
constexpr double kSecondOrderTol = 1e-6;     // relative to the scale of Qhat / R
constexpr double kCoercivityThreshold = 1e-4;
constexpr double kHypothesesTol = 1e-8;

const std::vector<int> kGrids{256, 512, 1024, 2048};
const fs::path kScenarios = BILINCTL_SCENARIO_DIR;

constexpr double kPi = std::numbers::pi;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail)
{
    std::printf("%s criterion %2d: %s [%s]\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ControlSignal sampled(const TimeGrid& g, const std::function<double(double)>& f)
{
    Eigen::VectorXd v(g.nodes());
    for (int i = 0; i <= g.M; ++i) {
        v[i] = f(g.node(i));
    }
    return ControlSignal(g, v);
}

// Smooth controls strictly inside [-1, 1].
ControlSignal reference_control(const TimeGrid& g)
{
    return sampled(g, [](double t) { return 0.3 * std::sin(2.0 * kPi * t + 0.3); });
}
ControlSignal perturbed_control(const TimeGrid& g)
{
    return sampled(g, [](double t) { return 0.3 * std::sin(2.0 * kPi * t + 0.3) + 0.25 * std::cos(3.0 * kPi * t); });
}
ControlSignal direction(const TimeGrid& g)
{
    return sampled(g, [](double t) { return std::sin(2.0 * kPi * t); });
}

ProblemInstance heat(int M)
{
    HeatConfig c;
    c.M = M;
    return build_heat(c);
}
ProblemInstance wave(int M)
{
    WaveConfig c;
    c.M = M;
    return build_wave(c);
}
ProblemInstance toy(int M)
{
    ToyConfig c;
    c.M = M;
    return build_scalar_toy(c);
}

struct Study {
    std::vector<double> h;
    std::vector<double> r;
    double at(int M) const
    {
        for (std::size_t k = 0; k < h.size(); ++k) {
            if (std::abs(h[k] * M - 1.0) < 1e-12) {
                return r[k];
            }
        }
        return NAN;
    }
    double order() const { return loglog_slope(h, r); }
};

Study study(const std::function<ProblemInstance(int)>& build, const std::function<double(const ProblemInstance&)>& f)
{
    Study s;
    for (int M : kGrids) {
        s.h.push_back(1.0 / M);
        s.r.push_back(f(build(M)));
    }
    return s;
}

double taylor_residual(const ProblemInstance& p)
{
    return taylor_identity_residual(p, reference_control(p.grid), perturbed_control(p.grid));
}

double goh_residual(const ProblemInstance& p)
{
    return goh_equivalence(p, reference_control(p.grid), direction(p.grid)).equivalence_residual;
}

double ibp_heat_pair(const ProblemInstance& p)
{
    const ControlSignal u_hat = reference_control(p.grid);
    const ControlSignal v = direction(p.grid);
    const Reference ref = make_reference(p, u_hat);
    const Trajectory z = solve_linearized(p, u_hat, ref.psi, v);
    NodalSource b(p.grid.nodes());
    for (int i = 0; i <= p.grid.M; ++i) {
        b[i] = v[i] * (p.B1 + p.B2 * ref.psi[i]);
    }
    return ibp_residual(z, b, ref.p, tracking_source(p, ref.psi));
}

double worst_gradient_error(const ProblemInstance& p, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const ControlSignal u_hat = reference_control(p.grid);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        std::vector<double> c(6);
        for (double& x : c) {
            x = normal(rng);
        }
        const ControlSignal v = sampled(p.grid, [&](double t) {
            double s = c[0];
            for (int j = 1; j < 6; ++j) {
                s += c[j] * (j % 2 ? std::cos(kPi * (j + 1) * t) : std::sin(kPi * j * t));
            }
            return s;
        });
        worst = std::max(worst, gradient_check(p, u_hat, v).rel_err);
    }
    return worst;
}

struct Benchmark {
    std::string name;
    ProblemInstance prob;
    SolverResult solved;
    Reference ref;
    Eigen::VectorXd density;
    ArcStructure arcs;
    Eigen::VectorXd R;
};

Benchmark solve_benchmark(const std::string& file)
{
    const tools::Scenario sc = tools::load_scenario((kScenarios / file).string());
    Benchmark b{sc.name, sc.build(), {}, {}, {}, {}, {}};
    const double mid = 0.5 * (b.prob.bounds.lower + b.prob.bounds.upper);
    b.solved = projected_gradient_solve(b.prob, ControlSignal(b.prob.grid, mid), sc.solver_options());
    b.ref = make_reference(b.prob, b.solved.u);
    b.density = discrete_gradient_density(b.prob, b.solved.u, b.ref.psi, b.ref.multiplier);
    b.arcs = detect_arcs(b.solved.u, b.prob.bounds, b.density);
    b.R = r_series(b.prob, b.ref.psi, b.ref.p);
    return b;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main()
{
    // 1. Exact second-order identity on the scalar toy and the heat benchmark.
    {
        const Study t = study(toy, taylor_residual);
        const Study h = study(heat, taylor_residual);
        const bool pass = t.at(1024) <= kTaylorTol && h.at(1024) <= kTaylorTol && t.order() >= kMinOrder &&
                          h.order() >= kMinOrder;
        report(1, pass, "second-order Taylor identity",
               "toy " + fmt("%.2e", t.at(1024)) + " order " + fmt("%.2f", t.order()) + "; heat " +
                   fmt("%.2e", h.at(1024)) + " order " + fmt("%.2f", h.order()));
    }
    // 2. Goh equivalence on heat and wave.
    {
        const Study h = study(heat, goh_residual);
        const Study w = study(wave, goh_residual);
        const bool pass = h.at(2048) <= kGohTol && w.at(2048) <= kGohTol && h.order() >= kMinOrder &&
                          w.order() >= kMinOrder;
        report(2, pass, "Goh equivalence",
               "heat " + fmt("%.2e", h.at(2048)) + " order " + fmt("%.2f", h.order()) + "; wave " +
                   fmt("%.2e", w.at(2048)) + " order " + fmt("%.2f", w.order()));
    }
    // 3. Gradient against finite differences.
    {
        const double eh = worst_gradient_error(heat(1024), 1);
        const double ew = worst_gradient_error(wave(1024), 2);
        const double et = worst_gradient_error(toy(1024), 3);
        const double worst = std::max({eh, ew, et});
        report(3, worst <= kGradientTol, "gradient vs finite differences",
               "heat " + fmt("%.2e", eh) + ", wave " + fmt("%.2e", ew) + ", toy " + fmt("%.2e", et));
    }
    // 4. Integration by parts on the heat pair (z, p).
    {
        const Study s = study(heat, ibp_heat_pair);
        const bool pass = s.at(2048) <= kIbpTol && s.order() >= kMinOrder;
        report(4, pass, "IBP lemma", fmt("%.2e", s.at(2048)) + " at M=2048, order " + fmt("%.2f", s.order()));
    }
    // 5. Remainder orders of the expansions.
    {
        const ProblemInstance p = heat(1024);
        const ExpansionReport e = expansion_w_residual(p, reference_control(p.grid), direction(p.grid),
                                                       {0.5, 0.25, 0.125, 0.0625, 0.03125});
        const double spread = e.max_cubic_ratio / e.min_cubic_ratio;
        const bool pass = spread <= kCubicSpread && e.slope_w > kMinSlopeW;
        report(5, pass, "expansion remainders",
               "remainder/sigma^3 in [" + fmt("%.3e", e.min_cubic_ratio) + ", " + fmt("%.3e", e.max_cubic_ratio) +
                   "], Goh-form slope " + fmt("%.3f", e.slope_w));
    }
    // 6. Perturbation estimate for eta.
    {
        const ProblemInstance p = heat(1024);
        const ControlSignal u_hat = reference_control(p.grid);
        const ControlSignal v = direction(p.grid);
        std::vector<double> s, e;
        for (double sigma : {0.4, 0.2, 0.1, 0.05, 0.025}) {
            const ControlSignal u(p.grid, Eigen::VectorXd(u_hat.u + sigma * v.u));
            s.push_back(sigma);
            e.push_back(perturbations(p, u_hat, u).eta.sup_norm());
        }
        const double slope = loglog_slope(s, e);
        report(6, slope >= kMinEtaSlope, "eta perturbation estimate", "slope " + fmt("%.3f", slope));
    }
    // 7. Commutator fidelity.
    {
        auto heat_disc = [](int n) {
            HeatConfig c;
            c.N = n;
            c.M = 8;  // benchmark profile x^2 (1-x)^2
            return build_heat(c).family_data.commutator_discrepancy;
        };
        const double d16 = heat_disc(16);
        const double d32 = heat_disc(32);
        WaveConfig w;
        w.N = 16;
        w.M = 8;
        w.b2 = {"sin2", 1.0};
        const ProblemInstance pw = build_wave(w);
        const double nil = (pw.B2 * pw.B2).cwiseAbs().maxCoeff();
        const double m2 = pw.M2.cwiseAbs().maxCoeff();
        const bool pass = d32 / d16 <= kCommutatorHalving &&
                          pw.family_data.commutator_discrepancy <= kWaveCommutatorTol && nil == 0.0 && m2 == 0.0;
        report(7, pass, "commutator fidelity",
               "heat N16 " + fmt("%.2e", d16) + " N32 " + fmt("%.2e", d32) + " ratio " + fmt("%.3f", d32 / d16) +
                   "; wave " + fmt("%.2e", pw.family_data.commutator_discrepancy) + ", max|B2^2| " +
                   fmt("%.1e", nil) + ", max|M2| " + fmt("%.1e", m2));
    }
    // 8. Semigroup and spectral layer.
    {
        const auto heat_op = SpectralOperator::diagonal(dirichlet_eigenvalues(16));
        const double contraction = contraction_check(heat_op, {0.0, 0.01, 0.1, 0.5, 1.0}).max_ratio;

        WaveConfig w;
        w.b2 = {"zero", 1.0};
        w.N = 16;
        w.M = 512;
        w.displacement0 = {1.0, -0.5, 0.25, 0.3};
        w.velocity0 = {0.2, 0.0, -0.4};
        const ProblemInstance pw = build_wave(w);
        const Trajectory y = solve_state(pw, ControlSignal(pw.grid, 0.5));
        double drift = 0.0;
        for (int i = 0; i <= pw.grid.M; ++i) {
            drift = std::max(drift, std::abs(y[i].norm() - y[0].norm()));
        }

        double composition = 0.0;
        const auto wave_op = SpectralOperator::wave_blocks(dirichlet_eigenvalues(16));
        for (const auto* op : {&heat_op, &wave_op}) {
            const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(op->dim(), 1.0, -1.0);
            composition = std::max(
                composition, (op->semigroup(0.3, op->semigroup(0.45, v)) - op->semigroup(0.75, v)).norm());
        }
        const bool pass = contraction <= 1.0 + kContractionTol && drift <= kEnergyDriftTol &&
                          composition <= kCompositionTol;
        report(8, pass, "semigroup and spectral layer",
               "contraction " + fmt("%.17g", contraction) + ", energy drift " + fmt("%.1e", drift) +
                   ", composition " + fmt("%.1e", composition));
    }

    // Solver benchmarks shared by 9-11.
    std::vector<Benchmark> benchmarks;
    for (const char* file : {"scalar_toy.json", "heat.json", "heat_singular.json", "wave.json"}) {
        benchmarks.push_back(solve_benchmark(file));
    }

    // 9. First-order conditions.
    {
        bool pass = true;
        std::string detail;
        for (const Benchmark& b : benchmarks) {
            const double res = first_order_residual(b.solved.u, b.prob.bounds, b.density);
            const double scale = lambda_scale(b.density);
            pass = pass && b.solved.converged && res <= kFirstOrderTol * scale;
            detail += b.name + " " + fmt("%.1e", res) + "/" + fmt("%.1e", scale) + "; ";
        }
        for (double alpha : {0.5, -0.5}) {
            ToyConfig c;
            c.M = 256;
            c.b1 = 0.0;
            c.b2 = 0.0;
            c.alpha = alpha;
            const ProblemInstance p = build_scalar_toy(c);
            const SolverResult r = projected_gradient_solve(p, ControlSignal(p.grid, 0.0));
            const double bound = alpha > 0 ? p.bounds.lower : p.bounds.upper;
            const bool exact = (r.u.u.array() - bound).abs().maxCoeff() == 0.0;
            pass = pass && exact;
            detail += std::string("alpha ") + (alpha > 0 ? "> 0" : "< 0") + (exact ? " exact bound" : " not at bound") +
                      (alpha > 0 ? "; " : "");
        }
        report(9, pass, "first-order conditions at solver output", detail);
    }
    // 10. Second-order necessary scan and R on singular arcs.
    std::vector<CoercivityReport> coercivity;
    std::vector<HypothesesReport> hypotheses;
    {
        bool pass = true;
        std::string detail;
        for (const Benchmark& b : benchmarks) {
            const auto samples = sample_pc2(b.arcs, b.prob.grid, 64, 101);
            const NecessaryScan scan = necessary_scan(b.prob, b.ref, samples);
            const SingularRCheck r = singular_r_check(b.R, b.arcs);
            const bool ok = scan.min_qhat >= -kSecondOrderTol * scan.scale &&
                            (!r.applicable || r.min_r >= -kSecondOrderTol * r.scale);
            pass = pass && ok;
            detail += b.name + " minQ " + fmt("%.3g", scan.min_qhat) +
                      (r.applicable ? " minR " + fmt("%.3g", r.min_r) : std::string(" no singular arc")) + "; ";
        }
        report(10, pass, "second-order necessary conditions", detail);
    }
    // 11. Coercivity implies growth.
    {
        bool pass = true;
        int premises = 0;
        std::string detail;
        for (const Benchmark& b : benchmarks) {
            const CoercivityReport c = coercivity_estimate(b.prob, b.ref, b.arcs, 16);
            const HypothesesReport hyp = structural_hypotheses_check(b.solved.u, b.ref.lambda, b.R, b.arcs,
                                                                     kHypothesesTol * lambda_scale(b.ref.lambda));
            const bool premise = !c.degenerate && c.alpha_hat > kCoercivityThreshold && hyp.passes;
            detail += b.name + " alpha " + fmt("%.3g", c.alpha_hat) + (hyp.passes ? " hyp ok" : " hyp fail");
            if (premise) {
                ++premises;
                const GrowthReport g = growth_probe(b.prob, b.ref, 200, {0.1, 0.05, 0.025}, 202);
                pass = pass && g.evaluated > 0 && g.ratio_min > 0.0;
                detail += " growth min " + fmt("%.3g", g.ratio_min);
            }
            detail += "; ";
        }
        // The criterion is an implication; it is only meaningful if some benchmark meets the premise.
        pass = pass && premises > 0;
        report(11, pass, "coercivity implies quadratic growth", detail);
    }
    // 12. Determinism of the command-line runs.
    {
        bool pass = true;
        std::string detail;
        const fs::path root = fs::temp_directory_path() / "bilinctl_acceptance";
        fs::remove_all(root);
        for (const char* file : {"scalar_toy.json", "wave.json"}) {
            const tools::Scenario sc = tools::load_scenario((kScenarios / file).string());
            const fs::path a = root / (sc.name + "_a");
            const fs::path b = root / (sc.name + "_b");
            tools::run_scenario(sc, a.string());
            tools::run_scenario(sc, b.string());
            int same = 0;
            int total = 0;
            for (const auto& entry : fs::directory_iterator(a)) {
                ++total;
                same += slurp(entry.path()) == slurp(b / entry.path().filename()) ? 1 : 0;
            }
            pass = pass && total > 0 && same == total;
            detail += sc.name + " " + std::to_string(same) + "/" + std::to_string(total) + " files identical; ";
        }
        report(12, pass, "deterministic reports and CSVs", detail);
    }

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
