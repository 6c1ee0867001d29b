// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. Every tolerance used below is a named constant.

#include "sdelong/analysis.hpp"
#include "sdelong/cli.hpp"
#include "sdelong/noise.hpp"
#include "sdelong/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace sdelong;
namespace fs = std::filesystem;

namespace {

// Criteria 1 and 2.
constexpr double kGlSlopeLo = 0.40, kGlSlopeHi = 0.60, kGlMinR2 = 0.98;
constexpr double kGlRuntimeLimit = 300.0;
// Criterion 3.
constexpr double kAcSlopeLo = 0.35, kAcSlopeHi = 0.65, kAcMinR2 = 0.95;
constexpr double kAcRuntimeLimit = 600.0;
// Criterion 4.
constexpr double kQuarterTolerance = 0.10;
// Criterion 5.
constexpr double kEmBlowup = 1e6, kImplicitSupLimit = 10.0;
// Criterion 6.
constexpr double kAlpha1 = 0.25, kDecayBand = 0.1;
// Criterion 7.
constexpr double kStrongTarget = 1.0, kStrongBand = 0.25;
constexpr double kWeakTarget = 1.5, kWeakBand = 0.35;
// Criterion 8.
constexpr double kResidualTol = 1e-12;
constexpr int kSolves = 1000;
// Criterion 9.
constexpr int kProjectionSamples = 10000;
constexpr double kFitExactness = 1e-12;
// Criterion 10.
constexpr double kPStarTarget = 1.25, kPStarTolerance = 0.01;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cli::ExperimentConfig config_for(const std::vector<std::string>& args) { return cli::parse_config(args); }

ConvergenceReport run_convergence(const cli::ExperimentConfig& cfg) {
    const SdeProblem problem = cli::build_problem(cfg);
    StrongErrorSpec spec;
    spec.scheme = cfg.scheme;
    spec.reference_scheme = cfg.reference_scheme;
    spec.h_list = cfg.h_list;
    spec.h_ref = cfg.h_ref;
    spec.T = cfg.T;
    spec.paths = cfg.paths;
    spec.p = cfg.p;
    spec.seed = cfg.seed;
    spec.x0 = cli::initial_state(cfg, problem);
    spec.threads = cfg.threads;
    ConvergenceCriteria criteria;
    criteria.band = cfg.band;
    criteria.min_r_squared = cfg.min_r_squared;
    criteria.residual_tol = cfg.scheme.newton.residual_tol;
    return assess_convergence(strong_error_experiment(problem, spec), scheme_orders(cfg.scheme.kind).global(),
                              criteria);
}

std::string curve_detail(const ConvergenceReport& r) {
    std::string s = "slope=" + fmt(r.slope) + " r2=" + fmt(r.r_squared) + " errors=[";
    for (std::size_t i = 0; i < r.curve.points.size(); ++i) {
        if (i) s += ",";
        s += fmt(r.curve.points[i].error.value);
    }
    return s + "]";
}

Outcome gl_figure(const std::string& preset) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_convergence(config_for({"convergence", "--preset", preset, "--paths", "2000", "--seed", "42"}));
    const double secs = seconds_since(t0);
    return {within(r.slope, kGlSlopeLo, kGlSlopeHi) && r.r_squared >= kGlMinR2 && secs <= kGlRuntimeLimit,
            curve_detail(r) + " runtime=" + fmt(secs) + "s"};
}

Outcome criterion1() { return gl_figure("gl-fig1"); }
Outcome criterion2() { return gl_figure("gl-fig2"); }

Outcome criterion3() {
    Outcome o{true, ""};
    for (const char* preset : {"ac-fig3", "ac-fig4"}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = run_convergence(config_for({"convergence", "--preset", preset, "--paths", "500"}));
        const double secs = seconds_since(t0);
        const bool ok = within(r.slope, kAcSlopeLo, kAcSlopeHi) && r.r_squared >= kAcMinR2 && secs <= kAcRuntimeLimit;
        o.pass = o.pass && ok;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + preset + ": " + curve_detail(r) +
                    " runtime=" + fmt(secs) + "s";
    }
    return o;
}

MomentTrace gl_trace(SchemeKind kind, double x0, double h, double T, std::int64_t paths) {
    MomentTraceSpec s;
    s.scheme = {kind, {}, std::nullopt};
    s.h = h;
    s.T = T;
    s.paths = paths;
    s.p = 1.0;
    s.seed = 42;
    s.x0 = Vector::Constant(1, x0);
    return moment_trace(ginzburg_landau(-1.5, 1.0, 1.0), s);
}

Outcome criterion4() {
    Outcome o{true, ""};
    const double T = 100.0;
    for (auto kind : {SchemeKind::BackwardEuler, SchemeKind::ProjectedEuler}) {
        const auto tr = gl_trace(kind, 2.0, 0.125, T, 1000);
        const double q3 = window_average(tr, 0.5 * T, 0.75 * T);
        const double q4 = window_average(tr, 0.75 * T, T);
        const double rel = std::abs(q4 - q3) / q3;
        const bool ok = tr.max_divergent() == 0 && std::isfinite(tr.sup()) && rel <= kQuarterTolerance;
        o.pass = o.pass && ok;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + std::string(scheme_name(kind)) +
                    ": divergent=" + std::to_string(tr.max_divergent()) + " q3=" + fmt(q3) + " q4=" + fmt(q4) +
                    " rel=" + fmt(rel);
    }
    return o;
}

Outcome criterion5() {
    const auto em = gl_trace(SchemeKind::EulerMaruyama, 3.0, 0.25, 16.0, 1000);
    const auto be = gl_trace(SchemeKind::BackwardEuler, 3.0, 0.25, 16.0, 1000);
    const auto pe = gl_trace(SchemeKind::ProjectedEuler, 3.0, 0.25, 16.0, 1000);
    const bool em_diverges = em.max_divergent() > 0 || em.sup() > kEmBlowup;
    const bool implicit_ok = be.max_divergent() == 0 && pe.max_divergent() == 0 && be.sup() < kImplicitSupLimit &&
                             pe.sup() < kImplicitSupLimit;
    return {em_diverges && implicit_ok, "em divergent=" + std::to_string(em.max_divergent()) +
                                            " sup=" + fmt(em.sup()) + "; be sup=" + fmt(be.sup()) + " divergent=" +
                                            std::to_string(be.max_divergent()) + "; pe sup=" + fmt(pe.sup()) +
                                            " divergent=" + std::to_string(pe.max_divergent())};
}

Outcome criterion6() {
    ContractionSpec s;
    s.x0 = Vector::Constant(1, 2.0);
    s.y0 = Vector::Constant(1, -1.0);
    s.h_fine = std::ldexp(1.0, -10);
    s.T = 10.0;
    s.paths = 2000;
    s.p = 1.0;
    s.seed = 42;
    const auto tr = contraction_experiment(ginzburg_landau(-1.5, 1.0, 1.0), s);
    const auto fit = fit_decay_rate(tr);
    const double bound = -2.0 * kAlpha1 + kDecayBand;
    return {fit.slope <= bound, "slope=" + fmt(fit.slope) + " bound=" + fmt(bound) +
                                    " points=" + std::to_string(fit.n_points)};
}

Outcome criterion7() {
    Outcome o{true, ""};
    std::vector<double> hs;
    for (int e = 10; e >= 6; --e) hs.push_back(std::ldexp(1.0, -e));
    for (auto kind : {SchemeKind::BackwardEuler, SchemeKind::ProjectedEuler}) {
        OneStepSpec s;
        s.scheme = {kind, {}, std::nullopt};
        s.x0 = Vector::Constant(1, 1.0);
        s.h_list = hs;
        s.substeps = 64;
        s.paths = 100000;
        s.seed = 42;
        const auto pts = one_step_errors(ginzburg_landau(-1.5, 1.0, 1.0), s);
        std::vector<double> strong, weak;
        for (const auto& pt : pts) {
            strong.push_back(pt.strong.value);
            weak.push_back(pt.weak.value);
        }
        const double ss = fit_order(hs, strong).slope;
        const double ws = fit_order(hs, weak).slope;
        const bool ok = std::abs(ss - kStrongTarget) <= kStrongBand && std::abs(ws - kWeakTarget) <= kWeakBand;
        o.pass = o.pass && ok;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + std::string(scheme_name(kind)) +
                    ": strong=" + fmt(ss) + " weak=" + fmt(ws);
    }
    return o;
}

Outcome criterion8() {
    int failures = 0, over = 0;
    double worst = 0.0;
    const CounterStream rng(8, 0);
    std::uint64_t ctr = 0;
    for (const auto& problem : {ginzburg_landau(-1.5, 1.0, 1.0), allen_cahn(4)}) {
        const double h_max = 1.0 / problem.constants().alpha1;
        for (int i = 0; i < kSolves; ++i) {
            const double h = h_max * rng.uniform(ctr++);
            Vector b(problem.dim());
            for (int k = 0; k < problem.dim(); ++k) b[k] = 10.0 * rng.normal(ctr++);
            try {
                const Vector z = solve_implicit(problem, b, h);
                const double r = (z - h * problem.drift(z) - b).cwiseAbs().maxCoeff();
                worst = std::max(worst, r);
                if (!(r <= kResidualTol)) ++over;
            } catch (const SolverError&) {
                ++failures;
            }
        }
    }
    return {failures == 0 && over == 0, "solves=" + std::to_string(2 * kSolves) + " worst_residual=" + fmt(worst) +
                                            " over_tol=" + std::to_string(over) +
                                            " solver_failures=" + std::to_string(failures)};
}

std::string csv_body(const std::string& file) {
    std::ifstream in(file);
    std::string line, body;
    while (std::getline(in, line)) {
        if (line.rfind("# run:", 0) == 0) continue;
        body += line + "\n";
    }
    return body;
}

Outcome criterion9(const fs::path& workdir) {
    std::vector<std::string> failed;

    // Projection: 1-Lipschitz, lands in the ball, fixes the origin.
    {
        const CounterStream rng(9, 0);
        const double h = std::ldexp(1.0, -6), kappa = 3.0;
        const double R = projection_radius(h, kappa);
        bool ok = project(Vector::Zero(3), h, kappa).isZero(0.0);
        for (std::uint64_t i = 0; i < kProjectionSamples && ok; ++i) {
            Vector x(3), y(3);
            for (int k = 0; k < 3; ++k) {
                x[k] = 4.0 * rng.normal(6 * i + k);
                y[k] = 4.0 * rng.normal(6 * i + 3 + k);
            }
            const Vector px = project(x, h, kappa), py = project(y, h, kappa);
            ok = (px - py).norm() <= (x - y).norm() * (1.0 + 1e-14) && px.norm() <= R * (1.0 + 1e-14);
        }
        if (!ok) failed.push_back("projection");
    }

    // Coupling identity.
    {
        StrongErrorSpec s;
        s.scheme = {SchemeKind::BackwardEuler, {}, std::nullopt};
        s.h_list = {std::ldexp(1.0, -8)};
        s.h_ref = std::ldexp(1.0, -8);
        s.T = 1.0;
        s.paths = 100;
        s.x0 = Vector::Constant(1, 1.0);
        const auto curve = strong_error_experiment(ginzburg_landau(-1.5, 1.0, 1.0), s);
        if (curve.points[0].error.value != 0.0) failed.push_back("coupling");
    }

    // Telescoping of pairwise coarsening.
    {
        bool ok = true;
        for (std::uint64_t path = 0; path < 20 && ok; ++path) {
            const auto grid = make_noise_grid(9, path, 1, std::ldexp(1.0, -12), 4096);
            const double total = coarsen(grid, 4096).values[0];
            for (std::int64_t f = 1; f <= 4096; f *= 2) ok = ok && pairwise_sum(coarsen(grid, f).values) == total;
        }
        if (!ok) failed.push_back("telescoping");
    }

    // fit_order on exact power laws.
    {
        bool ok = true;
        const std::vector<double> hs = {1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8};
        for (double q : {0.5, 1.0, 1.5, 2.0}) {
            std::vector<double> e;
            for (double h : hs) e.push_back(0.7 * std::pow(h, q));
            ok = ok && std::abs(fit_order(hs, e).slope - q) <= kFitExactness;
        }
        if (!ok) failed.push_back("fit_order");
    }

    // Seed determinism through the command line, 1 vs 4 threads.
    {
        const std::vector<std::string> base = {"convergence", "--model", "gl", "--scheme", "be", "--T", "2",
                                               "--h-list", "2^-5,2^-4,2^-3", "--h-ref", "2^-8", "--paths", "500",
                                               "--seed", "42"};
        std::ostringstream sink;
        for (const char* t : {"1", "4"}) {
            auto args = base;
            args.insert(args.end(), {"--threads", t, "--output", (workdir / ("determinism_" + std::string(t))).string()});
            cli::main_entry(args, sink, sink);
        }
        const std::string a = csv_body((workdir / "determinism_1.csv").string());
        const std::string b = csv_body((workdir / "determinism_4.csv").string());
        if (a.empty() || a != b) failed.push_back("determinism");
    }

    std::string detail = failed.empty() ? "all sub-checks hold" : "failed:";
    for (const auto& f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

Outcome criterion10() {
    const auto r = max_feasible_pstar(ginzburg_landau(-1.5, 1.0, 1.0), kAlpha1);
    const double p = r.max_feasible.value_or(NAN);
    const auto ac = check_contractive_monotone(allen_cahn(4), 3.5, 1.0);
    return {std::abs(p - kPStarTarget) <= kPStarTolerance && ac.pass,
            "max_feasible_pstar=" + fmt(p) + " allen_cahn_margin=" + fmt(ac.worst_margin)};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path workdir = fs::temp_directory_path() / "sdelong_acceptance";
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--workdir" && i + 1 < argc) {
            workdir = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            only.push_back(std::stoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--workdir DIR] [--only N]...\n";
            return 2;
        }
    }
    fs::create_directories(workdir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"GL backward Euler strong order", criterion1},
        {"GL projected Euler strong order", criterion2},
        {"Allen-Cahn strong order, BE and PE", criterion3},
        {"uniform moment bound and stationarity", criterion4},
        {"EM divergence contrast", criterion5},
        {"exact-flow contractivity", criterion6},
        {"one-step strong and weak orders", criterion7},
        {"implicit solver certification", criterion8},
        {"invariant suites", [&] { return criterion9(workdir); }},
        {"assumption checker ground truth", criterion10},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
