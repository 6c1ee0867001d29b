#include "sdelong/analysis.hpp"

#include "sdelong/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdelong {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

OrderFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw UsageError("fit: need at least two distinct abscissae");
    OrderFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    fit.n_points = static_cast<int>(x.size());
    return fit;
}

OrderFit fit_transformed(std::span<const double> xs, std::span<const double> ys, double (*fx)(double),
                         double (*fy)(double), bool positive_x, const char* what) {
    if (xs.size() != ys.size()) throw UsageError(std::string(what) + ": inputs differ in length");
    if (xs.size() < 2) throw UsageError(std::string(what) + ": need at least two points");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || (positive_x && !(xs[i] > 0.0))) {
            throw UsageError(std::string(what) + ": abscissae must be finite" + (positive_x ? " and positive" : ""));
        }
        if (!std::isfinite(ys[i]) || !(ys[i] > 0.0)) {
            throw UsageError(std::string(what) + ": values must be positive and finite");
        }
        x.push_back(fx(xs[i]));
        y.push_back(fy(ys[i]));
    }
    return least_squares(x, y);
}

double identity(double v) { return v; }
double log2_of(double v) { return std::log2(v); }
double ln_of(double v) { return std::log(v); }

}  // namespace

MomentEstimate mc_mean_with_se(std::span<const double> samples, double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw UsageError("mc_mean_with_se: p must be positive");
    if (samples.size() < 2) throw UsageError("mc_mean_with_se: need at least two samples");
    std::vector<double> powers;
    powers.reserve(samples.size());
    for (double s : samples) {
        if (!std::isfinite(s) || s < 0.0) throw UsageError("mc_mean_with_se: samples must be finite and non-negative");
        powers.push_back(std::pow(s, 2.0 * p));
    }
    // Sorted summation makes the result independent of sample order.
    std::sort(powers.begin(), powers.end());
    const auto n = static_cast<double>(powers.size());
    double mean = 0.0;
    for (double v : powers) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : powers) var += (v - mean) * (v - mean);
    var /= n - 1.0;

    MomentEstimate est;
    est.p = p;
    est.n_paths = static_cast<std::int64_t>(samples.size());
    est.value = std::pow(mean, 1.0 / (2.0 * p));
    const double se_mean = std::sqrt(var / n);
    if (se_mean == 0.0) {
        est.std_error = 0.0;
    } else if (mean > 0.0) {
        // d/dm m^{1/(2p)} = m^{1/(2p) - 1} / (2p)
        est.std_error = est.value / (2.0 * p * mean) * se_mean;
    } else {
        est.std_error = kNaN;
    }
    return est;
}

MomentEstimate moment_estimate(std::span<const double> samples, double p) {
    std::vector<double> usable;
    usable.reserve(samples.size());
    for (double s : samples) {
        if (!std::isnan(s)) usable.push_back(s);
    }
    const auto divergent = static_cast<std::int64_t>(samples.size() - usable.size());
    MomentEstimate est;
    if (usable.size() >= 2) {
        est = mc_mean_with_se(usable, p);
    } else {
        est.p = p;
        est.value = kNaN;
        est.std_error = kNaN;
    }
    est.n_paths = static_cast<std::int64_t>(samples.size());
    est.n_divergent = divergent;
    return est;
}

OrderFit fit_order(std::span<const double> h_values, std::span<const double> errors) {
    return fit_transformed(h_values, errors, log2_of, log2_of, true, "fit_order");
}

OrderFit fit_exponential_rate(std::span<const double> t, std::span<const double> values) {
    return fit_transformed(t, values, identity, ln_of, false, "fit_exponential_rate");
}

OrderFit fit_decay_rate(const MomentTrace& trace, double t_min) {
    std::vector<double> t, v;
    for (const auto& pt : trace.points) {
        const double m = std::pow(pt.estimate.value, 2.0 * trace.p);
        if (pt.t >= t_min && std::isfinite(m) && m > 0.0) {
            t.push_back(pt.t);
            v.push_back(m);
        }
    }
    return fit_exponential_rate(t, v);
}

double window_average(const MomentTrace& trace, double t_lo, double t_hi) {
    double sum = 0.0;
    int count = 0;
    for (const auto& pt : trace.points) {
        if (pt.t >= t_lo && pt.t <= t_hi) {
            sum += pt.estimate.value;
            ++count;
        }
    }
    return count == 0 ? kNaN : sum / count;
}

ConvergenceReport assess_convergence(const ErrorCurve& curve, double predicted_order,
                                     const ConvergenceCriteria& criteria) {
    ConvergenceReport report;
    report.curve = curve;
    report.predicted_order = predicted_order;
    report.criteria = criteria;

    const double floor = criteria.floor_factor * criteria.residual_tol;
    std::vector<double> h, e;
    for (const auto& pt : curve.points) {
        const double err = pt.error.value;
        if (!std::isfinite(err)) {
            report.excluded_h.push_back(pt.h);
            report.notes.push_back("h = " + std::to_string(pt.h) + " excluded: no usable paths");
        } else if (err < floor) {
            report.excluded_h.push_back(pt.h);
            report.notes.push_back("h = " + std::to_string(pt.h) + " excluded: error below solver floor");
        } else {
            h.push_back(pt.h);
            e.push_back(err);
        }
    }

    OrderFit fit{kNaN, kNaN, 0.0, static_cast<int>(h.size())};
    try {
        fit = fit_order(h, e);
    } catch (const UsageError& err) {
        report.notes.push_back(std::string("fit skipped: ") + err.what());
    }
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.r_squared = fit.r_squared;
    report.pass = std::isfinite(report.slope) && std::abs(report.slope - predicted_order) <= criteria.band &&
                  report.r_squared >= criteria.min_r_squared;
    return report;
}

}  // namespace sdelong
