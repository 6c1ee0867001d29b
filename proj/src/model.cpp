#include "sdelong/model.hpp"

#include "sdelong/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace sdelong {

namespace {

constexpr double kPStarCap = 64.0;
constexpr std::uint64_t kPairStream = 0xA55u;

bool all_finite(const Vector& x) { return x.allFinite(); }

/// Deterministic pair set for a SampleSpec; x != y with probability one.
struct PairSet {
    std::vector<Vector> xs;
    std::vector<Vector> ys;
};

PairSet draw_pairs(int dim, const SampleSpec& spec) {
    if (spec.count < 1) throw UsageError("assumption check: sample set is empty");
    if (!(spec.hi > spec.lo)) throw UsageError("assumption check: sample box must satisfy lo < hi");

    const CounterStream stream(spec.seed, kPairStream);
    const double width = spec.hi - spec.lo;
    PairSet pairs;
    pairs.xs.reserve(spec.count);
    pairs.ys.reserve(spec.count);
    for (std::int64_t i = 0; i < spec.count; ++i) {
        Vector x(dim), y(dim);
        const std::uint64_t base = static_cast<std::uint64_t>(i) * 2 * dim;
        for (int c = 0; c < dim; ++c) {
            x[c] = spec.lo + width * stream.uniform(base + c);
            y[c] = spec.lo + width * stream.uniform(base + dim + c);
        }
        if ((x - y).squaredNorm() == 0.0) continue;
        pairs.xs.push_back(std::move(x));
        pairs.ys.push_back(std::move(y));
    }
    if (pairs.xs.empty()) throw UsageError("assumption check: sample set is empty");
    return pairs;
}

/// Evaluates `slack(x, y, fx, fy, gx, gy, dist2)` over the pair set and returns
/// the worst normalized margin.
template <class Slack>
AssumptionReport scan_pairs(const SdeProblem& problem, const SampleSpec& spec, std::string condition,
                            Slack&& slack) {
    const PairSet pairs = draw_pairs(problem.dim(), spec);
    Vector fx(problem.dim()), fy(problem.dim());
    Matrix gx(problem.dim(), problem.noise_dim()), gy(problem.dim(), problem.noise_dim());

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pairs.xs.size(); ++i) {
        const Vector& x = pairs.xs[i];
        const Vector& y = pairs.ys[i];
        problem.drift_into(x, fx);
        problem.drift_into(y, fy);
        problem.diffusion_into(x, gx);
        problem.diffusion_into(y, gy);
        const double dist2 = (x - y).squaredNorm();
        worst = std::max(worst, slack(x, y, fx, fy, gx, gy, dist2) / dist2);
    }

    AssumptionReport report;
    report.condition = std::move(condition);
    report.n_pairs = static_cast<std::int64_t>(pairs.xs.size());
    report.worst_margin = worst;
    report.pass = worst <= 0.0;
    return report;
}

}  // namespace

void MonotoneConstants::validate() const {
    if (!(alpha1 > 0.0)) throw UsageError("constants: alpha1 must be positive");
    if (!(p_star >= 1.0)) throw UsageError("constants: p_star must be at least 1");
    if (!(kappa >= 1.0)) throw UsageError("constants: kappa must be at least 1");
    if (!(c1 > 0.0)) throw UsageError("constants: c1 must be positive");
    if (beta1 && !(*beta1 >= 0.0)) throw UsageError("constants: beta1 must be non-negative");
}

SdeProblem::SdeProblem(std::string name, int dim, int noise_dim, DriftFn drift, DiffusionFn diffusion,
                       MonotoneConstants constants, JacobianFn jacobian)
    : name_(std::move(name)),
      dim_(dim),
      noise_dim_(noise_dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      constants_(constants),
      jacobian_(std::move(jacobian)) {
    if (dim_ < 1 || noise_dim_ < 1) throw UsageError("problem '" + name_ + "': dimensions must be positive");
    if (!drift_ || !diffusion_) throw UsageError("problem '" + name_ + "': drift and diffusion are required");
    constants_.validate();
}

void SdeProblem::check_state(const Vector& x) const {
    if (x.size() != dim_) {
        throw UsageError("problem '" + name_ + "': state has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(dim_));
    }
    if (!all_finite(x)) throw DomainError("problem '" + name_ + "': state is not finite");
}

Vector SdeProblem::drift(const Vector& x) const {
    check_state(x);
    Vector out(dim_);
    drift_(x, out);
    return out;
}

Matrix SdeProblem::diffusion(const Vector& x) const {
    check_state(x);
    Matrix out(dim_, noise_dim_);
    diffusion_(x, out);
    return out;
}

Matrix SdeProblem::drift_jacobian(const Vector& x) const {
    check_state(x);
    Matrix out(dim_, dim_);
    Vector scratch(dim_);
    jacobian_into(x, out, scratch);
    return out;
}

void SdeProblem::jacobian_into(const Vector& x, Matrix& out, Vector& scratch) const {
    if (jacobian_) {
        jacobian_(x, out);
        return;
    }
    const double step = 1e-6 * (1.0 + x.lpNorm<Eigen::Infinity>());
    Vector probe = x;
    Vector forward(dim_);
    for (int c = 0; c < dim_; ++c) {
        probe[c] = x[c] + step;
        drift_(probe, forward);
        probe[c] = x[c] - step;
        drift_(probe, scratch);
        probe[c] = x[c];
        out.col(c) = (forward - scratch) / (2.0 * step);
    }
}

double SdeProblem::c3() const {
    Vector f0(dim_);
    drift_(Vector::Zero(dim_), f0);
    return 2.0 * f0.squaredNorm() + 2.0 * constants_.c1 * (constants_.kappa - 1.0) / constants_.kappa;
}

// ---------------------------------------------------------------------------

SdeProblem ginzburg_landau(double eta, double sigma, double theta) {
    if (!(theta > 0.0)) throw UsageError("ginzburg_landau: theta must be positive");
    const double linear = eta + 0.5 * sigma * sigma;
    const double slack = -(linear + 0.5 * sigma * sigma);
    if (!(slack > 0.0)) {
        throw UsageError("ginzburg_landau: eta + sigma^2 must be negative for the contractive monotone condition");
    }

    MonotoneConstants constants;
    constants.alpha1 = 0.5 * slack;
    constants.p_star = sigma == 0.0
                           ? kPStarCap
                           : std::min(kPStarCap, 0.5 + (-linear - constants.alpha1) / (sigma * sigma));
    constants.kappa = 3.0;
    constants.c1 = std::max(2.0 * linear * linear, 9.0 * theta * theta);
    constants.beta1 = sigma * sigma;

    auto drift = [linear, theta](const Vector& x, Vector& out) {
        out.array() = linear * x.array() - theta * x.array().cube();
    };
    auto diffusion = [sigma](const Vector& x, Matrix& out) { out.col(0) = sigma * x; };
    auto jacobian = [linear, theta](const Vector& x, Matrix& out) {
        out.setZero();
        out.diagonal().array() = linear - 3.0 * theta * x.array().square();
    };
    return SdeProblem("ginzburg-landau", 1, 1, drift, diffusion, constants, jacobian);
}

ScalarNoiseMap ScalarNoiseMap::sine_plus_one() {
    return {[](double u) { return std::sin(u) + 1.0; }, 1.0, "sine-plus-one"};
}

Matrix allen_cahn_matrix(int intervals) {
    if (intervals < 2) throw UsageError("allen_cahn: K must be at least 2");
    const int d = intervals - 1;
    const double scale = static_cast<double>(intervals) * intervals;
    Matrix a = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        a(i, i) = -2.0 * scale;
        if (i + 1 < d) {
            a(i, i + 1) = scale;
            a(i + 1, i) = scale;
        }
    }
    return a;
}

SdeProblem allen_cahn(int intervals, ScalarNoiseMap noise) {
    Matrix a = allen_cahn_matrix(intervals);
    if (!noise.g) throw UsageError("allen_cahn: noise map g is required");
    if (!(noise.beta1 >= 0.0)) throw UsageError("allen_cahn: beta1 must be non-negative");
    const double k2 = static_cast<double>(intervals) * intervals;

    // Eigenvalues of -A are 4 K^2 sin^2(j pi / (2K)), j = 1 .. K-1.
    const double mu_min = 4.0 * k2 * std::pow(std::sin(std::numbers::pi / (2.0 * intervals)), 2);
    const double mu_max = 4.0 * k2 * std::pow(std::sin((intervals - 1) * std::numbers::pi / (2.0 * intervals)), 2);

    MonotoneConstants constants;
    constants.alpha1 = 1.0;
    constants.p_star = noise.beta1 == 0.0 ? 3.5 : std::min(3.5, 0.5 + (mu_min - 1.0 - constants.alpha1) / noise.beta1);
    if (constants.p_star < 1.0) {
        throw UsageError("allen_cahn: noise Lipschitz constant too large for the contractive monotone condition");
    }
    constants.kappa = 3.0;
    const double linear_norm = std::max(std::abs(1.0 - mu_min), std::abs(1.0 - mu_max));
    constants.c1 = std::max(2.0 * linear_norm * linear_norm, 9.0);
    constants.beta1 = noise.beta1;

    auto drift = [a](const Vector& x, Vector& out) {
        out.noalias() = a * x;
        out.array() += x.array() - x.array().cube();
    };
    auto g = noise.g;
    auto diffusion = [g](const Vector& x, Matrix& out) {
        for (Eigen::Index i = 0; i < x.size(); ++i) out(i, 0) = g(x[i]);
    };
    JacobianFn jacobian = [a](const Vector& x, Matrix& out) {
        out = a;
        out.diagonal().array() += 1.0 - 3.0 * x.array().square();
    };
    return SdeProblem("allen-cahn-K" + std::to_string(intervals), intervals - 1, 1, drift, diffusion, constants,
                      jacobian);
}

// ---------------------------------------------------------------------------

AssumptionReport check_contractive_monotone(const SdeProblem& problem, double p_star, double alpha1,
                                            const SampleSpec& samples) {
    const double weight = (2.0 * p_star - 1.0) / 2.0;
    return scan_pairs(problem, samples, "contractive_monotone",
                      [&](const Vector& x, const Vector& y, const Vector& fx, const Vector& fy, const Matrix& gx,
                          const Matrix& gy, double dist2) {
                          return (x - y).dot(fx - fy) + weight * (gx - gy).squaredNorm() + alpha1 * dist2;
                      });
}

AssumptionReport check_poly_lipschitz(const SdeProblem& problem, double kappa, double c1,
                                      const SampleSpec& samples) {
    const double power = kappa - 1.0;  // |x|^{2kappa-2} = (|x|^2)^{kappa-1}
    AssumptionReport report =
        scan_pairs(problem, samples, "poly_lipschitz",
                   [&](const Vector& x, const Vector& y, const Vector& fx, const Vector& fy, const Matrix&,
                       const Matrix&, double dist2) {
                       const double weight =
                           1.0 + std::pow(x.squaredNorm(), power) + std::pow(y.squaredNorm(), power);
                       return (fx - fy).squaredNorm() - c1 * weight * dist2;
                   });
    Vector f0(problem.dim());
    problem.drift_into(Vector::Zero(problem.dim()), f0);
    report.c2 = 2.0 * c1 * (kappa + 1.0) / kappa;
    report.c3 = 2.0 * f0.squaredNorm() + 2.0 * c1 * (kappa - 1.0) / kappa;
    return report;
}

AssumptionReport check_diffusion_lipschitz(const SdeProblem& problem, double beta1, const SampleSpec& samples) {
    return scan_pairs(problem, samples, "diffusion_lipschitz",
                      [&](const Vector&, const Vector&, const Vector&, const Vector&, const Matrix& gx,
                          const Matrix& gy, double dist2) { return (gx - gy).squaredNorm() - beta1 * dist2; });
}

AssumptionReport max_feasible_pstar(const SdeProblem& problem, double alpha1, const SampleSpec& samples) {
    AssumptionReport at_one = check_contractive_monotone(problem, 1.0, alpha1, samples);
    AssumptionReport report = at_one;
    report.condition = "max_feasible_pstar";
    if (!at_one.pass) {
        report.max_feasible = 0.0;
        report.pass = false;
        return report;
    }
    AssumptionReport at_cap = check_contractive_monotone(problem, kPStarCap, alpha1, samples);
    if (at_cap.pass) {
        report.max_feasible = kPStarCap;
        report.worst_margin = at_cap.worst_margin;
        return report;
    }
    double lo = 1.0;
    double hi = kPStarCap;
    double lo_margin = at_one.worst_margin;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        const AssumptionReport probe = check_contractive_monotone(problem, mid, alpha1, samples);
        if (probe.pass) {
            lo = mid;
            lo_margin = probe.worst_margin;
        } else {
            hi = mid;
        }
    }
    report.max_feasible = lo;
    report.worst_margin = lo_margin;
    report.pass = true;
    return report;
}

AdmissibleMoments admissible_moment_range(const MonotoneConstants& constants) {
    return {1.0, std::floor(constants.p_star) / (2.0 * constants.kappa - 1.0)};
}

}  // namespace sdelong
