#include "sdelong/cli.hpp"

#include "sdelong/simulate.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

namespace sdelong::cli {

namespace {

int threads_used(const ExperimentConfig& config) {
    if (config.threads > 0) return config.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
    if (!out) throw UsageError("failed writing '" + path + "'");
}

void write_outputs(const ExperimentConfig& config, const std::string& rows, const std::string& json) {
    write_file(config.output + ".csv",
               csv_preamble(config, threads_used(config)) + std::string(kCsvHeader) + "\n" + rows);
    write_file(config.output + ".json", json);
}

int run_convergence(const ExperimentConfig& config, const SdeProblem& problem, std::ostream& out) {
    StrongErrorSpec spec;
    spec.scheme = config.scheme;
    spec.reference_scheme = config.reference_scheme;
    spec.h_list = config.h_list;
    spec.h_ref = config.h_ref;
    spec.T = config.T;
    spec.paths = config.paths;
    spec.p = config.p;
    spec.seed = config.seed;
    spec.x0 = initial_state(config, problem);
    spec.threads = config.threads;
    if (config.enforce_step_ceiling) {
        const double ceiling = step_ceiling(config.scheme.kind, problem.constants(), config.p);
        for (double h : config.h_list) {
            if (h > ceiling) {
                throw UsageError("h = " + std::to_string(h) + " exceeds the step ceiling " + std::to_string(ceiling));
            }
        }
    }

    const ErrorCurve curve = strong_error_experiment(problem, spec);
    ConvergenceCriteria criteria;
    criteria.band = config.band;
    criteria.min_r_squared = config.min_r_squared;
    criteria.residual_tol = config.scheme.newton.residual_tol;
    const ConvergenceReport report = assess_convergence(curve, scheme_orders(config.scheme.kind).global(), criteria);

    write_outputs(config, csv_rows(curve), report_json(config, report));
    for (const auto& note : report.notes) out << "note: " << note << "\n";
    out << "slope " << report.slope << ", r^2 " << report.r_squared << ", predicted " << report.predicted_order
        << " -> " << (report.pass ? "pass" : "fail") << "\n";
    return report.pass ? kPass : kCheckFailed;
}

int run_moments(const ExperimentConfig& config, const SdeProblem& problem, std::ostream& out) {
    MomentTraceSpec spec;
    spec.scheme = config.scheme;
    spec.h = config.h;
    spec.T = config.T;
    spec.paths = config.paths;
    spec.p = config.p;
    spec.seed = config.seed;
    spec.x0 = initial_state(config, problem);
    spec.enforce_step_ceiling = config.enforce_step_ceiling;
    spec.threads = config.threads;
    spec.n_points = config.n_points;

    const MomentTrace trace = moment_trace(problem, spec);
    const double q3 = window_average(trace, 0.5 * config.T, 0.75 * config.T);
    const double q4 = window_average(trace, 0.75 * config.T, config.T);
    const double sup = trace.sup();
    const auto divergent = trace.max_divergent();
    // A uniform bound is the checked property; stationarity is reported only.
    const bool pass = divergent == 0 && std::isfinite(sup);
    const std::map<std::string, double> summary = {
        {"sup", sup},
        {"third_quarter_mean", q3},
        {"fourth_quarter_mean", q4},
        {"quarter_relative_change", std::abs(q4 - q3) / std::abs(q3)},
        {"max_divergent", static_cast<double>(divergent)},
    };

    write_outputs(config, csv_rows(trace, "moment"), trace_json(config, trace, summary, pass));
    out << "sup " << sup << ", divergent paths " << divergent << ", quarter means " << q3 << " / " << q4 << " -> "
        << (pass ? "pass" : "fail") << "\n";
    return pass ? kPass : kCheckFailed;
}

int run_contractivity(const ExperimentConfig& config, const SdeProblem& problem, std::ostream& out) {
    ContractionSpec spec;
    spec.x0 = initial_state(config, problem);
    spec.y0 = initial_state(config, problem, true);
    spec.h_fine = config.h;
    spec.T = config.T;
    spec.paths = config.paths;
    spec.p = config.p;
    spec.seed = config.seed;
    spec.newton = config.scheme.newton;
    spec.threads = config.threads;
    spec.n_points = config.n_points;

    const MomentTrace trace = contraction_experiment(problem, spec);
    const double alpha1 = config.alpha1.value_or(problem.constants().alpha1);
    const double bound = -2.0 * config.p * alpha1;
    double slope = std::nan("");
    double r2 = std::nan("");
    try {
        const OrderFit fit = fit_decay_rate(trace);
        slope = fit.slope;
        r2 = fit.r_squared;
    } catch (const UsageError&) {
        // identical starting points: nothing to fit
    }
    const bool pass = std::isfinite(slope) && slope <= bound + config.band;
    const std::map<std::string, double> summary = {
        {"decay_slope", slope}, {"r_squared", r2}, {"bound", bound}, {"band", config.band}};

    write_outputs(config, csv_rows(trace, "contraction"), trace_json(config, trace, summary, pass));
    out << "decay slope " << slope << " (bound " << bound << " + " << config.band << ") -> "
        << (pass ? "pass" : "fail") << "\n";
    return pass ? kPass : kCheckFailed;
}

int run_check_assumptions(const ExperimentConfig& config, const SdeProblem& problem, std::ostream& out) {
    const MonotoneConstants& own = problem.constants();
    const double alpha1 = config.alpha1.value_or(own.alpha1);
    const double p_star = config.p_star.value_or(own.p_star);
    const double kappa = config.kappa.value_or(own.kappa);
    const double c1 = config.c1.value_or(own.c1);

    std::vector<AssumptionReport> reports;
    reports.push_back(check_contractive_monotone(problem, p_star, alpha1));
    reports.push_back(check_poly_lipschitz(problem, kappa, c1));
    if (own.beta1) reports.push_back(check_diffusion_lipschitz(problem, *own.beta1));
    bool pass = true;
    for (const auto& r : reports) pass = pass && r.pass;
    reports.push_back(max_feasible_pstar(problem, alpha1));

    write_outputs(config, csv_rows(reports, problem.name()), assumptions_json(config, problem.name(), reports, pass));
    for (const auto& r : reports) {
        out << r.condition << ": " << (r.pass ? "pass" : "fail") << " (worst margin " << r.worst_margin;
        if (r.max_feasible) out << ", max feasible " << *r.max_feasible;
        out << ")\n";
    }
    return pass ? kPass : kCheckFailed;
}

}  // namespace

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const SdeProblem problem = build_problem(config);
        switch (config.command) {
            case Command::Convergence: return run_convergence(config, problem, out);
            case Command::Moments: return run_moments(config, problem, out);
            case Command::Contractivity: return run_contractivity(config, problem, out);
            case Command::CheckAssumptions: return run_check_assumptions(config, problem, out);
        }
    } catch (const SolverError& e) {
        err << kToolName << ": solver failure at step " << e.step << " of path " << e.path << ": " << e.what()
            << "\n";
        return kSolverFailure;
    } catch (const UsageError& e) {
        err << kToolName << ": " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::optional<std::string> env_threads;
    if (const char* env = std::getenv(std::string(kThreadsEnv).c_str())) env_threads = env;
    ExperimentConfig config;
    try {
        config = parse_config(args, env_threads);
    } catch (const HelpRequested& help) {
        out << help.what();
        return kPass;
    } catch (const UsageError& e) {
        err << kToolName << ": " << e.what() << "\n";
        return kUsage;
    }
    return run(config, out, err);
}

}  // namespace sdelong::cli
