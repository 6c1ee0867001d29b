#include "sdelong/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdelong {

namespace {

constexpr double kStepRelTol = 1e-14;
constexpr int kMaxHalvings = 40;
constexpr int kMaxBisections = 400;

Eigen::Map<const Vector> as_vector(std::span<const double> values) {
    return {values.data(), static_cast<Eigen::Index>(values.size())};
}

void check_step_inputs(const SdeProblem& problem, const Vector& x, double h, const Vector& dw) {
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("step: h must be positive and finite");
    if (x.size() != problem.dim()) throw UsageError("step: state has the wrong dimension");
    if (dw.size() != problem.noise_dim()) throw UsageError("step: noise increment has the wrong dimension");
    if (!x.allFinite()) throw DomainError("step: state is not finite");
}

}  // namespace

std::string_view scheme_name(SchemeKind kind) noexcept {
    switch (kind) {
        case SchemeKind::EulerMaruyama: return "em";
        case SchemeKind::BackwardEuler: return "be";
        case SchemeKind::ProjectedEuler: return "pe";
    }
    return "?";
}

std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept {
    if (name == "em") return SchemeKind::EulerMaruyama;
    if (name == "be") return SchemeKind::BackwardEuler;
    if (name == "pe") return SchemeKind::ProjectedEuler;
    return std::nullopt;
}

void NewtonConfig::validate() const {
    if (!(residual_tol > 0.0)) throw UsageError("newton: residual_tol must be positive");
    if (max_iter < 1) throw UsageError("newton: max_iter must be at least 1");
}

void SchemeConfig::validate() const {
    newton.validate();
    if (projection_exponent && !(*projection_exponent > 0.0)) {
        throw UsageError("scheme: projection exponent override must be positive");
    }
}

SchemeOrders scheme_orders(SchemeKind kind) noexcept {
    SchemeOrders orders;
    orders.q1 = 1.5;
    orders.q2 = 1.0;
    orders.requires_global_lipschitz = kind == SchemeKind::EulerMaruyama;
    return orders;
}

double step_ceiling(SchemeKind kind, const MonotoneConstants& constants, double p) {
    if (!(p >= 1.0)) throw UsageError("step_ceiling: p must be at least 1");
    const double h1 = std::min(1.0 / (p * constants.alpha1), 1.0);
    if (kind == SchemeKind::ProjectedEuler) return std::min(h1, 1.0 / (2.0 * p * constants.alpha1));
    return h1;
}

double projection_radius(double h, double kappa, std::optional<double> exponent) {
    if (!(h > 0.0) || !(h <= 1.0)) throw UsageError("project: h must lie in (0, 1]");
    const double e = exponent ? *exponent : 1.0 / (2.0 * (kappa + 1.0));
    return std::pow(h, -e);
}

Vector project(const Vector& x, double h, double kappa, std::optional<double> exponent) {
    const double radius = projection_radius(h, kappa, exponent);
    const double norm = x.norm();
    if (norm <= radius) return x;
    return (radius / norm) * x;
}

// ---------------------------------------------------------------------------

Stepper::Stepper(const SdeProblem& problem, const SchemeConfig& config, double h)
    : problem_(&problem), config_(config), h_(h), d_(problem.dim()) {
    config_.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("stepper: h must be positive and finite");
    if (config_.kind == SchemeKind::ProjectedEuler) {
        radius_ = projection_radius(h, problem.constants().kappa, config_.projection_exponent);
    }
    f_.resize(d_);
    g_.resize(d_, problem.noise_dim());
    rhs_.resize(d_);
    residual_.resize(d_);
    trial_.resize(d_);
    delta_.resize(d_);
    scratch_.resize(d_);
    jacobian_.resize(d_, d_);
}

bool Stepper::advance(Vector& x, std::span<const double> dw) {
    const auto noise = as_vector(dw);
    switch (config_.kind) {
        case SchemeKind::EulerMaruyama:
            problem_->drift_into(x, f_);
            problem_->diffusion_into(x, g_);
            x += h_ * f_;
            x.noalias() += g_ * noise;
            break;
        case SchemeKind::BackwardEuler:
            problem_->diffusion_into(x, g_);
            rhs_ = x;
            rhs_.noalias() += g_ * noise;
            solve(rhs_, x);
            break;
        case SchemeKind::ProjectedEuler: {
            const double norm = x.norm();
            if (norm > radius_) x *= radius_ / norm;
            problem_->drift_into(x, f_);
            problem_->diffusion_into(x, g_);
            x += h_ * f_;
            x.noalias() += g_ * noise;
            break;
        }
    }
    return x.allFinite();
}

double Stepper::residual_into(const Vector& z, const Vector& b, Vector& out) {
    problem_->drift_into(z, f_);
    out = z - h_ * f_ - b;
    return out.norm();
}

void Stepper::newton_direction() {
    // delta = (I - h Df(z))^{-1} residual, with Df already in jacobian_.
    if (d_ == 1) {
        delta_[0] = residual_[0] / (1.0 - h_ * jacobian_(0, 0));
        return;
    }
    jacobian_ *= -h_;
    jacobian_.diagonal().array() += 1.0;
    lu_.compute(jacobian_);
    delta_ = lu_.solve(residual_);
}

void Stepper::solve(const Vector& b, Vector& z) {
    const NewtonConfig& cfg = config_.newton;
    stats_ = SolveStats{};
    z = b;
    double r = residual_into(z, b, residual_);

    bool failed = false;
    int iter = 0;
    for (; iter < cfg.max_iter && r > 0.0; ++iter) {
        problem_->jacobian_into(z, jacobian_, scratch_);
        newton_direction();
        if (!delta_.allFinite()) {
            failed = true;
            break;
        }
        trial_ = z - delta_;
        double r_trial = residual_into(trial_, b, scratch_);
        if (!(r_trial < r)) {
            if (r <= cfg.residual_tol) break;  // at the round-off floor
            if (cfg.fallback != NewtonFallback::DampedNewton) {
                failed = true;
                break;
            }
            stats_.damped = true;
            double lambda = 1.0;
            int halvings = 0;
            while (!(r_trial < r) && halvings++ < kMaxHalvings) {
                lambda *= 0.5;
                trial_ = z - lambda * delta_;
                r_trial = residual_into(trial_, b, scratch_);
            }
            if (!(r_trial < r)) {
                failed = true;
                break;
            }
            delta_ *= lambda;
        }
        z = trial_;
        residual_ = scratch_;
        r = r_trial;
        const double step = delta_.lpNorm<Eigen::Infinity>();
        if (r <= cfg.residual_tol && step <= kStepRelTol * z.lpNorm<Eigen::Infinity>()) {
            ++iter;
            break;
        }
    }
    stats_.iterations = iter;
    stats_.residual = r;
    if (!failed && r <= cfg.residual_tol) return;

    if (cfg.fallback == NewtonFallback::ScalarBisection && d_ == 1 && bisect_scalar(b, z)) return;
    throw SolverError("implicit solve did not reach residual " + std::to_string(cfg.residual_tol) +
                          " (residual " + std::to_string(r) + " after " + std::to_string(iter) + " iterations)",
                      z, r);
}

bool Stepper::bisect_scalar(const Vector& b, Vector& z) {
    // phi(z) = z - h f(z) - b is strictly increasing under the contractive
    // monotone condition; the bracket follows from |f(z)|^2 <= c2 |z|^{2 kappa} + c3.
    const auto& c = problem_->constants();
    const double b0 = std::abs(b[0]);
    double bound = b0 + h_ * std::sqrt(c.c2() * std::pow(b0, 2.0 * c.kappa) + problem_->c3()) + 1.0;
    auto phi = [&](double v) {
        trial_[0] = v;
        problem_->drift_into(trial_, f_);
        return v - h_ * f_[0] - b[0];
    };
    for (int grow = 0; grow < 60 && !(phi(-bound) <= 0.0 && phi(bound) >= 0.0); ++grow) bound *= 2.0;
    double lo = -bound;
    double hi = bound;
    if (!(phi(lo) <= 0.0 && phi(hi) >= 0.0)) return false;
    for (int i = 0; i < kMaxBisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (phi(mid) <= 0.0 ? lo : hi) = mid;
    }
    const double root = std::abs(phi(lo)) <= std::abs(phi(hi)) ? lo : hi;
    z[0] = root;
    stats_.bisection = true;
    stats_.residual = std::abs(phi(root));
    return stats_.residual <= config_.newton.residual_tol;
}

// ---------------------------------------------------------------------------

Vector em_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw) {
    check_step_inputs(problem, x, h, dw);
    Stepper stepper(problem, {SchemeKind::EulerMaruyama, {}, std::nullopt}, h);
    Vector out = x;
    stepper.advance(out, {dw.data(), static_cast<std::size_t>(dw.size())});
    return out;
}

Vector solve_implicit(const SdeProblem& problem, const Vector& b, double h, const NewtonConfig& cfg,
                      SolveStats* stats) {
    if (b.size() != problem.dim()) throw UsageError("solve_implicit: right-hand side has the wrong dimension");
    if (!b.allFinite()) throw DomainError("solve_implicit: right-hand side is not finite");
    Stepper stepper(problem, {SchemeKind::BackwardEuler, cfg, std::nullopt}, h);
    Vector z(problem.dim());
    stepper.solve(b, z);
    if (stats) *stats = stepper.last_solve();
    return z;
}

Vector backward_euler_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw,
                           const NewtonConfig& cfg) {
    check_step_inputs(problem, x, h, dw);
    Stepper stepper(problem, {SchemeKind::BackwardEuler, cfg, std::nullopt}, h);
    Vector out = x;
    stepper.advance(out, {dw.data(), static_cast<std::size_t>(dw.size())});
    return out;
}

Matrix drift_jacobian(const SdeProblem& problem, const Vector& x) { return problem.drift_jacobian(x); }

Vector projected_euler_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw,
                            const SchemeConfig& cfg) {
    check_step_inputs(problem, x, h, dw);
    SchemeConfig pe = cfg;
    pe.kind = SchemeKind::ProjectedEuler;
    Stepper stepper(problem, pe, h);
    Vector out = x;
    stepper.advance(out, {dw.data(), static_cast<std::size_t>(dw.size())});
    return out;
}

}  // namespace sdelong
