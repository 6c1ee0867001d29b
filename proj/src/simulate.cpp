#include "sdelong/simulate.hpp"

#include "parallel.hpp"
#include "sdelong/step_size.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdelong {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs `stepper` over the first n_steps rows of `noise`. Returns the index of
/// the first non-finite step, or -1.
std::int64_t evolve(Stepper& stepper, const IncrementArray& noise, std::int64_t n_steps, Vector& x) {
    for (std::int64_t k = 0; k < n_steps; ++k) {
        bool finite = false;
        try {
            finite = stepper.advance(x, noise.row(k));
        } catch (SolverError& e) {
            e.step = k;
            throw;
        }
        if (!finite) return k;
    }
    return -1;
}

void check_x0(const SdeProblem& problem, const Vector& x0, const char* what) {
    if (x0.size() != problem.dim()) throw UsageError(std::string(what) + ": initial state has the wrong dimension");
    if (!x0.allFinite()) throw UsageError(std::string(what) + ": initial state is not finite");
}

void check_common(std::int64_t paths, double p, const char* what) {
    if (paths < 2) throw UsageError(std::string(what) + ": paths must be at least 2");
    if (!(p > 0.0) || !std::isfinite(p)) throw UsageError(std::string(what) + ": p must be positive");
}

std::int64_t steps_in(double T, double h, const char* what) {
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError(std::string(what) + ": step size must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw UsageError(std::string(what) + ": T must be positive");
    const auto n = exact_multiple(T, h);
    if (!n) throw UsageError(std::string(what) + ": T is not an exact multiple of the step size");
    return *n;
}

/// Step indices k_j = floor(j N / n_points), j = 0 .. n_points, without repeats.
std::vector<std::int64_t> thinned_steps(std::int64_t n_steps, int n_points) {
    if (n_points < 1) throw UsageError("trace: n_points must be at least 1");
    std::vector<std::int64_t> ks;
    ks.reserve(n_points + 1);
    for (int j = 0; j <= n_points; ++j) {
        const auto k = static_cast<std::int64_t>((static_cast<__int128>(j) * n_steps) / n_points);
        if (ks.empty() || ks.back() != k) ks.push_back(k);
    }
    return ks;
}

/// samples[j * paths + i] holds path i at record j.
std::vector<TracePoint> collect_trace(const std::vector<double>& samples, const std::vector<std::int64_t>& ks,
                                      std::int64_t paths, double h, double p) {
    std::vector<TracePoint> out;
    out.reserve(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const std::span<const double> row(samples.data() + j * paths, static_cast<std::size_t>(paths));
        out.push_back({static_cast<double>(ks[j]) * h, moment_estimate(row, p)});
    }
    return out;
}

void rethrow_with_path(SolverError& e, std::int64_t path) {
    e.path = path;
    throw;
}

}  // namespace

std::int64_t MomentTrace::max_divergent() const noexcept {
    std::int64_t worst = 0;
    for (const auto& pt : points) worst = std::max(worst, pt.estimate.n_divergent);
    return worst;
}

double MomentTrace::sup() const noexcept {
    double best = 0.0;
    for (const auto& pt : points) {
        if (!std::isfinite(pt.estimate.value)) return std::numeric_limits<double>::infinity();
        best = std::max(best, pt.estimate.value);
    }
    return best;
}

// ---------------------------------------------------------------------------

TerminalState evolve_terminal(const SdeProblem& problem, const SchemeConfig& config, double h,
                              std::int64_t n_steps, const IncrementArray& noise, const Vector& x0) {
    check_x0(problem, x0, "evolve_terminal");
    if (n_steps < 0) throw UsageError("evolve_terminal: n_steps must be non-negative");
    if (noise.rows != n_steps) throw UsageError("evolve_terminal: noise must have n_steps rows");
    if (noise.m != problem.noise_dim()) throw UsageError("evolve_terminal: noise has the wrong width");
    if (noise.h != h) throw UsageError("evolve_terminal: noise step does not match h");

    Stepper stepper(problem, config, h);
    TerminalState out{x0, false, -1};
    out.divergence_step = evolve(stepper, noise, n_steps, out.state);
    out.divergent = out.divergence_step >= 0;
    return out;
}

ErrorCurve strong_error_experiment(const SdeProblem& problem, const StrongErrorSpec& spec) {
    check_x0(problem, spec.x0, "strong_error_experiment");
    check_common(spec.paths, spec.p, "strong_error_experiment");
    if (spec.h_list.empty()) throw UsageError("strong_error_experiment: h_list is empty");
    const std::int64_t n_fine = steps_in(spec.T, spec.h_ref, "strong_error_experiment");

    std::vector<std::int64_t> factors;
    for (double h : spec.h_list) {
        const auto factor = exact_multiple(h, spec.h_ref);
        if (!factor) {
            throw UsageError("strong_error_experiment: h = " + std::to_string(h) +
                             " is not an exact multiple of h_ref = " + std::to_string(spec.h_ref));
        }
        if (n_fine % *factor != 0) {
            throw UsageError("strong_error_experiment: h = " + std::to_string(h) + " does not divide T");
        }
        factors.push_back(*factor);
    }
    const SchemeConfig ref_cfg = spec.reference_scheme.value_or(spec.scheme);
    spec.scheme.validate();
    ref_cfg.validate();

    const std::size_t n_h = spec.h_list.size();
    const std::int64_t paths = spec.paths;
    std::vector<double> samples(n_h * paths, kNaN);

    struct Worker {
        NoiseGrid grid;
        IncrementArray coarse;
        Stepper reference;
        std::vector<Stepper> steppers;
        Vector ref_state;
        Vector state;
    };
    auto make_worker = [&]() {
        Worker w{make_noise_grid(spec.seed, 0, problem.noise_dim(), spec.h_ref, n_fine), {},
                 Stepper(problem, ref_cfg, spec.h_ref), {}, spec.x0, spec.x0};
        w.steppers.reserve(n_h);
        for (std::size_t j = 0; j < n_h; ++j) w.steppers.emplace_back(problem, spec.scheme, spec.h_list[j]);
        return w;
    };

    detail::parallel_for(paths, detail::resolve_threads(spec.threads), make_worker, [&](Worker& w, std::int64_t i) {
        try {
            regenerate(w.grid, static_cast<std::uint64_t>(i));
            w.ref_state = spec.x0;
            const bool ref_ok = evolve(w.reference, w.grid.increments, n_fine, w.ref_state) < 0;
            for (std::size_t j = 0; j < n_h; ++j) {
                const IncrementArray* noise = &w.grid.increments;
                if (factors[j] != 1) {
                    coarsen_into(w.grid.increments, factors[j], w.coarse);
                    noise = &w.coarse;
                }
                w.state = spec.x0;
                const bool ok = evolve(w.steppers[j], *noise, n_fine / factors[j], w.state) < 0;
                samples[j * paths + i] = ref_ok && ok ? (w.ref_state - w.state).stableNorm() : kNaN;
            }
        } catch (SolverError& e) {
            rethrow_with_path(e, i);
        }
    });

    ErrorCurve curve;
    curve.problem = problem.name();
    curve.scheme = spec.scheme.kind;
    curve.p = spec.p;
    curve.T = spec.T;
    curve.h_ref = spec.h_ref;
    for (std::size_t j = 0; j < n_h; ++j) {
        const std::span<const double> row(samples.data() + j * paths, static_cast<std::size_t>(paths));
        curve.points.push_back({spec.h_list[j], moment_estimate(row, spec.p)});
    }
    return curve;
}

MomentTrace moment_trace(const SdeProblem& problem, const MomentTraceSpec& spec) {
    check_x0(problem, spec.x0, "moment_trace");
    check_common(spec.paths, spec.p, "moment_trace");
    const std::int64_t n_steps = steps_in(spec.T, spec.h, "moment_trace");
    if (spec.enforce_step_ceiling) {
        const double ceiling = step_ceiling(spec.scheme.kind, problem.constants(), std::max(1.0, spec.p));
        if (spec.h > ceiling) {
            throw UsageError("moment_trace: h = " + std::to_string(spec.h) + " exceeds the step ceiling " +
                             std::to_string(ceiling));
        }
    }
    spec.scheme.validate();

    const auto ks = thinned_steps(n_steps, spec.n_points);
    const std::int64_t paths = spec.paths;
    std::vector<double> samples(ks.size() * paths, kNaN);

    struct Worker {
        NoiseGrid grid;
        Stepper stepper;
        Vector state;
    };
    auto make_worker = [&]() {
        return Worker{make_noise_grid(spec.seed, 0, problem.noise_dim(), spec.h, n_steps),
                      Stepper(problem, spec.scheme, spec.h), spec.x0};
    };

    detail::parallel_for(paths, detail::resolve_threads(spec.threads), make_worker, [&](Worker& w, std::int64_t i) {
        try {
            regenerate(w.grid, static_cast<std::uint64_t>(i));
            w.state = spec.x0;
            std::int64_t k = 0;
            for (std::size_t j = 0; j < ks.size(); ++j) {
                bool diverged = false;
                for (; k < ks[j]; ++k) {
                    bool finite;
                    try {
                        finite = w.stepper.advance(w.state, w.grid.increments.row(k));
                    } catch (SolverError& e) {
                        e.step = k;
                        throw;
                    }
                    if (!finite) {
                        diverged = true;
                        break;
                    }
                }
                if (diverged) break;  // this and later records stay NaN
                samples[j * paths + i] = w.state.stableNorm();
            }
        } catch (SolverError& e) {
            rethrow_with_path(e, i);
        }
    });

    MomentTrace trace;
    trace.problem = problem.name();
    trace.scheme = spec.scheme.kind;
    trace.p = spec.p;
    trace.T = spec.T;
    trace.h = spec.h;
    trace.points = collect_trace(samples, ks, paths, spec.h, spec.p);
    return trace;
}

MomentTrace contraction_experiment(const SdeProblem& problem, const ContractionSpec& spec) {
    check_x0(problem, spec.x0, "contraction_experiment");
    check_x0(problem, spec.y0, "contraction_experiment");
    check_common(spec.paths, spec.p, "contraction_experiment");
    const std::int64_t n_steps = steps_in(spec.T, spec.h_fine, "contraction_experiment");
    const SchemeConfig cfg{SchemeKind::BackwardEuler, spec.newton, std::nullopt};
    cfg.validate();

    const auto ks = thinned_steps(n_steps, spec.n_points);
    const std::int64_t paths = spec.paths;
    std::vector<double> samples(ks.size() * paths, kNaN);

    struct Worker {
        NoiseGrid grid;
        Stepper stepper;
        Vector x;
        Vector y;
    };
    auto make_worker = [&]() {
        return Worker{make_noise_grid(spec.seed, 0, problem.noise_dim(), spec.h_fine, n_steps),
                      Stepper(problem, cfg, spec.h_fine), spec.x0, spec.y0};
    };

    detail::parallel_for(paths, detail::resolve_threads(spec.threads), make_worker, [&](Worker& w, std::int64_t i) {
        try {
            regenerate(w.grid, static_cast<std::uint64_t>(i));
            w.x = spec.x0;
            w.y = spec.y0;
            std::int64_t k = 0;
            for (std::size_t j = 0; j < ks.size(); ++j) {
                bool ok = true;
                for (; k < ks[j] && ok; ++k) {
                    try {
                        ok = w.stepper.advance(w.x, w.grid.increments.row(k)) &&
                             w.stepper.advance(w.y, w.grid.increments.row(k));
                    } catch (SolverError& e) {
                        e.step = k;
                        throw;
                    }
                }
                if (!ok) break;
                samples[j * paths + i] = (w.x - w.y).stableNorm();
            }
        } catch (SolverError& e) {
            rethrow_with_path(e, i);
        }
    });

    MomentTrace trace;
    trace.problem = problem.name();
    trace.scheme = SchemeKind::BackwardEuler;
    trace.p = spec.p;
    trace.T = spec.T;
    trace.h = spec.h_fine;
    trace.points = collect_trace(samples, ks, paths, spec.h_fine, spec.p);
    return trace;
}

ErrorCurve remainder_scaling(const SdeProblem& problem, const RemainderSpec& spec) {
    check_x0(problem, spec.x0, "remainder_scaling");
    check_x0(problem, spec.y0, "remainder_scaling");
    check_common(spec.paths, spec.p, "remainder_scaling");
    if (spec.h_list.empty()) throw UsageError("remainder_scaling: h_list is empty");
    std::vector<std::int64_t> counts;
    for (double h : spec.h_list) counts.push_back(steps_in(h, spec.h_fine, "remainder_scaling"));
    const std::int64_t n_max = *std::max_element(counts.begin(), counts.end());
    const SchemeConfig cfg{SchemeKind::BackwardEuler, spec.newton, std::nullopt};
    cfg.validate();

    const std::size_t n_h = spec.h_list.size();
    const std::int64_t paths = spec.paths;
    std::vector<double> samples(n_h * paths, kNaN);
    const Vector initial_gap = spec.x0 - spec.y0;

    struct Worker {
        NoiseGrid grid;
        Stepper stepper;
        Vector x;
        Vector y;
    };
    auto make_worker = [&]() {
        return Worker{make_noise_grid(spec.seed, 0, problem.noise_dim(), spec.h_fine, n_max),
                      Stepper(problem, cfg, spec.h_fine), spec.x0, spec.y0};
    };

    // Each h reuses the leading h / h_fine increments of the same path.
    detail::parallel_for(paths, detail::resolve_threads(spec.threads), make_worker, [&](Worker& w, std::int64_t i) {
        try {
            regenerate(w.grid, static_cast<std::uint64_t>(i));
            for (std::size_t j = 0; j < n_h; ++j) {
                w.x = spec.x0;
                w.y = spec.y0;
                const bool ok = evolve(w.stepper, w.grid.increments, counts[j], w.x) < 0 &&
                                evolve(w.stepper, w.grid.increments, counts[j], w.y) < 0;
                samples[j * paths + i] = ok ? (w.x - w.y - initial_gap).stableNorm() : kNaN;
            }
        } catch (SolverError& e) {
            rethrow_with_path(e, i);
        }
    });

    ErrorCurve curve;
    curve.problem = problem.name();
    curve.scheme = SchemeKind::BackwardEuler;
    curve.p = spec.p;
    curve.T = *std::max_element(spec.h_list.begin(), spec.h_list.end());
    curve.h_ref = spec.h_fine;
    for (std::size_t j = 0; j < n_h; ++j) {
        const std::span<const double> row(samples.data() + j * paths, static_cast<std::size_t>(paths));
        curve.points.push_back({spec.h_list[j], moment_estimate(row, spec.p)});
    }
    return curve;
}

std::vector<OneStepPoint> one_step_errors(const SdeProblem& problem, const OneStepSpec& spec) {
    check_x0(problem, spec.x0, "one_step_errors");
    check_common(spec.paths, 1.0, "one_step_errors");
    if (spec.paths < 2) throw UsageError("one_step_errors: paths must be at least 2");
    if (spec.substeps < 1) throw UsageError("one_step_errors: substeps must be at least 1");
    if (spec.h_list.empty()) throw UsageError("one_step_errors: h_list is empty");
    spec.scheme.validate();

    const int d = problem.dim();
    const std::int64_t paths = spec.paths;
    std::vector<OneStepPoint> out;

    for (std::size_t j = 0; j < spec.h_list.size(); ++j) {
        const double h = spec.h_list[j];
        if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("one_step_errors: step sizes must be positive");
        const double h_sub = h / spec.substeps;
        const std::uint64_t seed = mix_seed(spec.seed, j);
        // diffs[i * d + c]: component c of (reference - one step) on path i; NaN if divergent.
        std::vector<double> diffs(static_cast<std::size_t>(paths) * d, kNaN);

        struct Worker {
            NoiseGrid grid;
            IncrementArray coarse;
            Stepper fine;
            Stepper coarse_stepper;
            Vector ref;
            Vector state;
        };
        auto make_worker = [&]() {
            return Worker{make_noise_grid(seed, 0, problem.noise_dim(), h_sub, spec.substeps), {},
                          Stepper(problem, spec.scheme, h_sub), Stepper(problem, spec.scheme, h), spec.x0, spec.x0};
        };

        detail::parallel_for(paths, detail::resolve_threads(spec.threads), make_worker, [&](Worker& w, std::int64_t i) {
            try {
                regenerate(w.grid, static_cast<std::uint64_t>(i));
                coarsen_into(w.grid.increments, spec.substeps, w.coarse);
                w.ref = spec.x0;
                w.state = spec.x0;
                const bool ok = evolve(w.fine, w.grid.increments, spec.substeps, w.ref) < 0 &&
                                evolve(w.coarse_stepper, w.coarse, 1, w.state) < 0;
                if (!ok) return;
                for (int c = 0; c < d; ++c) diffs[i * d + c] = w.ref[c] - w.state[c];
            } catch (SolverError& e) {
                rethrow_with_path(e, i);
            }
        });

        std::vector<double> norms(paths);
        std::vector<std::vector<double>> components(d);
        std::int64_t divergent = 0;
        for (std::int64_t i = 0; i < paths; ++i) {
            const double* row = diffs.data() + i * d;
            if (std::isnan(row[0])) {
                norms[i] = kNaN;
                ++divergent;
                continue;
            }
            double sq = 0.0;
            for (int c = 0; c < d; ++c) {
                sq += row[c] * row[c];
                components[c].push_back(row[c]);
            }
            norms[i] = std::sqrt(sq);
        }

        OneStepPoint point;
        point.h = h;
        point.strong = moment_estimate(norms, 1.0);

        // Weak error |E[diff]| with SE sqrt(sum_c var_c / n).
        point.weak.p = 1.0;
        point.weak.n_paths = paths;
        point.weak.n_divergent = divergent;
        const auto usable = static_cast<double>(paths - divergent);
        if (usable < 2) {
            point.weak.value = kNaN;
            point.weak.std_error = kNaN;
        } else {
            double mean_sq = 0.0;
            double var_sum = 0.0;
            for (auto& comp : components) {
                std::sort(comp.begin(), comp.end());
                double mean = 0.0;
                for (double v : comp) mean += v;
                mean /= usable;
                double var = 0.0;
                for (double v : comp) var += (v - mean) * (v - mean);
                var /= usable - 1.0;
                mean_sq += mean * mean;
                var_sum += var;
            }
            point.weak.value = std::sqrt(mean_sq);
            point.weak.std_error = std::sqrt(var_sum / usable);
        }
        out.push_back(point);
    }
    return out;
}

}  // namespace sdelong
