#pragma once

#include "sdelong/estimate.hpp"
#include "sdelong/simulate.hpp"

#include <span>
#include <string>
#include <vector>

namespace sdelong {

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
};

/// Least squares of log2(error) on log2(h). Needs at least two distinct h and
/// positive finite errors; throws UsageError otherwise.
OrderFit fit_order(std::span<const double> h_values, std::span<const double> errors);

/// Least squares of ln(values) on t: values ~ C exp(slope t).
OrderFit fit_exponential_rate(std::span<const double> t, std::span<const double> values);

/// Fits ln E|.|^{2p} against t over the trace points with t >= t_min and a
/// positive finite estimate. The slope is directly comparable with -2 p alpha1.
OrderFit fit_decay_rate(const MomentTrace& trace, double t_min = 0.0);

/// Mean of the estimates with t in [t_lo, t_hi] (closed interval).
double window_average(const MomentTrace& trace, double t_lo, double t_hi);

struct ConvergenceCriteria {
    double band = 0.1;
    double min_r_squared = 0.98;
    /// Points with error below floor_factor * residual_tol are dropped.
    double residual_tol = 1e-12;
    double floor_factor = 10.0;
};

struct ConvergenceReport {
    ErrorCurve curve;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double predicted_order = 0.5;
    ConvergenceCriteria criteria;
    std::vector<double> excluded_h;
    std::vector<std::string> notes;
    bool pass = false;
};

/// Fits the curve and checks |slope - predicted| <= band and
/// r_squared >= min_r_squared. Points below the solver floor or with
/// non-finite error are excluded with a note; with fewer than two usable
/// points the report fails with slope NaN.
ConvergenceReport assess_convergence(const ErrorCurve& curve, double predicted_order,
                                     const ConvergenceCriteria& criteria = {});

}  // namespace sdelong
