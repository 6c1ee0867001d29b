#pragma once

#include "sdelong/core.hpp"
#include "sdelong/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace sdelong {

enum class SchemeKind { EulerMaruyama, BackwardEuler, ProjectedEuler };

/// "em", "be", "pe".
std::string_view scheme_name(SchemeKind kind) noexcept;
std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept;

enum class NewtonFallback {
    DampedNewton,     ///< halve the Newton step until the residual decreases
    ScalarBisection,  ///< bisection on a certified bracket when d == 1
    Error,            ///< throw SolverError
};

struct NewtonConfig {
    double residual_tol = 1e-12;
    int max_iter = 50;
    NewtonFallback fallback = NewtonFallback::DampedNewton;

    void validate() const;
};

struct SchemeConfig {
    SchemeKind kind = SchemeKind::BackwardEuler;
    NewtonConfig newton;
    /// Replaces 1/(2(kappa+1)) in the projection radius h^{-e}.
    std::optional<double> projection_exponent;

    void validate() const;
};

/// Local weak order q1, local strong order q2 and the implied global strong
/// order q2 - 1/2.
struct SchemeOrders {
    double q1 = 1.5;
    double q2 = 1.0;
    /// Set for Euler-Maruyama, whose orders only hold under global Lipschitz
    /// coefficients.
    bool requires_global_lipschitz = false;

    double global() const noexcept { return q2 - 0.5; }
};

SchemeOrders scheme_orders(SchemeKind kind) noexcept;

/// Largest step the strong-rate and moment results admit for moment exponent p:
/// min{1/(p alpha1), 1} for backward Euler (and EM), additionally capped by
/// 1/(2 p alpha1) for projected Euler.
double step_ceiling(SchemeKind kind, const MonotoneConstants& constants, double p);

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    bool damped = false;
    bool bisection = false;
};

/// x + f(x) h + g(x) dW. May return non-finite entries for super-linear drift;
/// callers treat that as a divergent path.
Vector em_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw);

/// Solves z - h f(z) = b by Newton's method (initial guess b, analytic or
/// finite-difference Jacobian). The returned z satisfies
/// |z - h f(z) - b| <= cfg.residual_tol.
Vector solve_implicit(const SdeProblem& problem, const Vector& b, double h, const NewtonConfig& cfg = {},
                      SolveStats* stats = nullptr);

/// Z = x + f(Z) h + g(x) dW.
Vector backward_euler_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw,
                           const NewtonConfig& cfg = {});

/// Drift Jacobian used by the Newton linearization.
Matrix drift_jacobian(const SdeProblem& problem, const Vector& x);

/// R = h^{-1/(2(kappa+1))}, or h^{-exponent} with an override.
double projection_radius(double h, double kappa, std::optional<double> exponent = std::nullopt);

/// Radial projection onto the closed ball of radius projection_radius(h, ...).
/// Throws UsageError unless h is in (0, 1].
Vector project(const Vector& x, double h, double kappa, std::optional<double> exponent = std::nullopt);

/// Zbar = project(x), returns Zbar + h f(Zbar) + g(Zbar) dW.
Vector projected_euler_step(const SdeProblem& problem, const Vector& x, double h, const Vector& dw,
                            const SchemeConfig& cfg = {SchemeKind::ProjectedEuler, {}, std::nullopt});

/// One-step map with preallocated workspace, for ensemble loops.
/// Not thread-safe; use one Stepper per worker.
class Stepper {
public:
    Stepper(const SdeProblem& problem, const SchemeConfig& config, double h);

    /// Advances `x` by one step with increment `dw` (length m). Returns false
    /// when the new state is not finite.
    bool advance(Vector& x, std::span<const double> dw);

    /// Solves z - h f(z) = b into z.
    void solve(const Vector& b, Vector& z);

    double h() const noexcept { return h_; }
    const SchemeConfig& config() const noexcept { return config_; }
    const SolveStats& last_solve() const noexcept { return stats_; }

private:
    double residual_into(const Vector& z, const Vector& b, Vector& out);
    void newton_direction();
    bool bisect_scalar(const Vector& b, Vector& z);

    const SdeProblem* problem_;
    SchemeConfig config_;
    double h_;
    double radius_ = 0.0;
    int d_;

    Vector f_;
    Matrix g_;
    Vector rhs_;
    Vector residual_;
    Vector trial_;
    Vector delta_;
    Vector scratch_;
    Matrix jacobian_;
    Eigen::PartialPivLU<Matrix> lu_;
    SolveStats stats_;
};

}  // namespace sdelong
