#pragma once

#include <cstdint>
#include <span>

namespace sdelong {

/// Monte Carlo estimate of (E[s^{2p}])^{1/(2p)}.
///
/// n_paths counts every simulated path; the n_divergent paths with non-finite
/// states are excluded from value and std_error. When fewer than two usable
/// paths remain, value and std_error are NaN.
struct MomentEstimate {
    double p = 1.0;
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t n_divergent = 0;
};

/// value = (mean of s^{2p})^{1/(2p)}; std_error carried over from the sample
/// standard deviation of s^{2p} by the delta method.
/// Throws UsageError for fewer than two samples, non-finite or negative
/// samples, or p <= 0.
MomentEstimate mc_mean_with_se(std::span<const double> samples, double p);

/// Like mc_mean_with_se, but NaN samples mark divergent paths: they are
/// counted in n_divergent and left out of the estimate.
MomentEstimate moment_estimate(std::span<const double> samples, double p);

}  // namespace sdelong
