#pragma once

#include "sdelong/core.hpp"
#include "sdelong/estimate.hpp"
#include "sdelong/model.hpp"
#include "sdelong/noise.hpp"
#include "sdelong/schemes.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdelong {

struct ErrorPoint {
    double h = 0.0;
    MomentEstimate error;
};

/// Strong error (E|X_T - Z_T|^{2p})^{1/(2p)} per step size against a coupled
/// reference computed at h_ref.
struct ErrorCurve {
    std::string problem;
    SchemeKind scheme = SchemeKind::BackwardEuler;
    double p = 1.0;
    double T = 0.0;
    double h_ref = 0.0;
    std::vector<ErrorPoint> points;
};

struct TracePoint {
    double t = 0.0;
    MomentEstimate estimate;
};

/// Moment estimates at thinned times 0 .. T.
struct MomentTrace {
    std::string problem;
    SchemeKind scheme = SchemeKind::BackwardEuler;
    double p = 1.0;
    double T = 0.0;
    double h = 0.0;
    std::vector<TracePoint> points;

    std::int64_t max_divergent() const noexcept;
    /// Largest finite value; +inf if any point is non-finite.
    double sup() const noexcept;
};

// ---------------------------------------------------------------------------

struct TerminalState {
    Vector state;
    bool divergent = false;
    /// First step whose output was non-finite, or -1.
    std::int64_t divergence_step = -1;
};

/// Iterates the configured one-step map n_steps times from x0 using the rows of
/// `noise`. Stops at the first non-finite state and flags the path divergent.
/// A SolverError carries the failing step index.
TerminalState evolve_terminal(const SdeProblem& problem, const SchemeConfig& config, double h,
                              std::int64_t n_steps, const IncrementArray& noise, const Vector& x0);

struct StrongErrorSpec {
    SchemeConfig scheme;
    /// Reference scheme; defaults to `scheme` (same-scheme reference).
    std::optional<SchemeConfig> reference_scheme;
    std::vector<double> h_list;
    double h_ref = 0.0;
    double T = 0.0;
    std::int64_t paths = 0;
    double p = 1.0;
    std::uint64_t seed = 0;
    Vector x0;
    int threads = 0;
};

/// Coupled-path strong error. Every h must be an exact binary multiple of
/// h_ref dividing T; violations throw UsageError before any simulation.
ErrorCurve strong_error_experiment(const SdeProblem& problem, const StrongErrorSpec& spec);

struct MomentTraceSpec {
    SchemeConfig scheme;
    double h = 0.0;
    double T = 0.0;
    std::int64_t paths = 0;
    double p = 1.0;
    std::uint64_t seed = 0;
    Vector x0;
    bool enforce_step_ceiling = false;
    int threads = 0;
    int n_points = 100;
};

/// (E|Z_k|^{2p})^{1/(2p)} at n_points + 1 times spread evenly over [0, T].
MomentTrace moment_trace(const SdeProblem& problem, const MomentTraceSpec& spec);

struct ContractionSpec {
    Vector x0;
    Vector y0;
    double h_fine = 0.0;
    double T = 0.0;
    std::int64_t paths = 0;
    double p = 1.0;
    std::uint64_t seed = 0;
    NewtonConfig newton;
    int threads = 0;
    int n_points = 100;
};

/// Two backward Euler trajectories per path from x0 and y0 on identical noise
/// (a fine-step proxy for the exact flow); returns (E|X^x_t - X^y_t|^{2p})^{1/(2p)}.
MomentTrace contraction_experiment(const SdeProblem& problem, const ContractionSpec& spec);

struct RemainderSpec {
    Vector x0;
    Vector y0;
    std::vector<double> h_list;
    double h_fine = 0.0;
    std::int64_t paths = 0;
    double p = 1.0;
    std::uint64_t seed = 0;
    NewtonConfig newton;
    int threads = 0;
};

/// (E|R(h)|^{2p})^{1/(2p)} for R(h) = (X^x_h - X^y_h) - (x - y), one curve
/// point per h. The flows are backward Euler at h_fine.
ErrorCurve remainder_scaling(const SdeProblem& problem, const RemainderSpec& spec);

struct OneStepSpec {
    SchemeConfig scheme;
    Vector x0;
    std::vector<double> h_list;
    int substeps = 64;
    std::int64_t paths = 0;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct OneStepPoint {
    double h = 0.0;
    /// Root-mean-square one-step difference.
    MomentEstimate strong;
    /// |E[reference - one step]| with the standard error of the mean.
    MomentEstimate weak;
};

/// One step of size h against `substeps` steps of the same scheme at
/// h / substeps driven by the same Brownian path. Each h uses an independent
/// seed derived from spec.seed.
std::vector<OneStepPoint> one_step_errors(const SdeProblem& problem, const OneStepSpec& spec);

}  // namespace sdelong
