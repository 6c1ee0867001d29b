#pragma once

#include "sdelong/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace sdelong {

/// Structural constants of the drift/diffusion pair.
///
/// alpha1 and p_star parametrize the contractive monotone condition
///   <x-y, f(x)-f(y)> + (2p*-1)/2 ||g(x)-g(y)||^2 <= -alpha1 |x-y|^2,
/// kappa and c1 the polynomial growth Lipschitz condition
///   |f(x)-f(y)|^2 <= c1 (1 + |x|^{2kappa-2} + |y|^{2kappa-2}) |x-y|^2,
/// beta1 the optional global Lipschitz constant ||g(x)-g(y)||^2 <= beta1 |x-y|^2.
struct MonotoneConstants {
    double alpha1 = 1.0;
    double p_star = 1.0;
    double kappa = 1.0;
    double c1 = 1.0;
    std::optional<double> beta1;

    /// c2 = 2 c1 (kappa + 1) / kappa.
    double c2() const noexcept { return 2.0 * c1 * (kappa + 1.0) / kappa; }

    /// Throws UsageError when a constant is outside its admissible range.
    void validate() const;
};

using DriftFn = std::function<void(const Vector& x, Vector& out)>;
using DiffusionFn = std::function<void(const Vector& x, Matrix& out)>;
using JacobianFn = std::function<void(const Vector& x, Matrix& out)>;

/// Autonomous Ito SDE dX = f(X) dt + g(X) dW with X in R^d, W in R^m.
///
/// Immutable after construction; safe to share across threads as long as the
/// supplied callables are pure.
class SdeProblem {
public:
    SdeProblem(std::string name, int dim, int noise_dim, DriftFn drift, DiffusionFn diffusion,
               MonotoneConstants constants, JacobianFn jacobian = {});

    const std::string& name() const noexcept { return name_; }
    int dim() const noexcept { return dim_; }
    int noise_dim() const noexcept { return noise_dim_; }
    const MonotoneConstants& constants() const noexcept { return constants_; }
    bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }

    /// Checked evaluation: UsageError on dimension mismatch, DomainError on
    /// non-finite input.
    Vector drift(const Vector& x) const;
    Matrix diffusion(const Vector& x) const;
    Matrix drift_jacobian(const Vector& x) const;

    /// Unchecked evaluation into preallocated storage (out must already have
    /// the right shape).
    void drift_into(const Vector& x, Vector& out) const { drift_(x, out); }
    void diffusion_into(const Vector& x, Matrix& out) const { diffusion_(x, out); }

    /// Analytic Jacobian when available, otherwise central differences with
    /// step 1e-6 (1 + |x|_inf). `scratch` must have size dim().
    void jacobian_into(const Vector& x, Matrix& out, Vector& scratch) const;

    /// c3 = 2 |f(0)|^2 + 2 c1 (kappa - 1) / kappa.
    double c3() const;

private:
    void check_state(const Vector& x) const;

    std::string name_;
    int dim_;
    int noise_dim_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    MonotoneConstants constants_;
    JacobianFn jacobian_;
};

/// Stochastic Ginzburg-Landau equation
///   dX = ((eta + sigma^2/2) X - theta X^3) dt + sigma X dW.
///
/// Constants: with a = eta + sigma^2/2 the drift satisfies
/// <x-y, f(x)-f(y)> <= a |x-y|^2, so the contractive monotone condition
/// reduces to a + (2p*-1) sigma^2 / 2 + alpha1 <= 0. alpha1 takes half of the
/// slack available at p* = 1 and p* is the largest value the remaining slack
/// allows (capped at 64). The cubic term needs kappa = 3, with
/// c1 = max(2 a^2, 9 theta^2).
/// Throws UsageError if theta <= 0 or a + sigma^2/2 >= 0 (no admissible p*).
SdeProblem ginzburg_landau(double eta, double sigma, double theta);

/// Scalar noise map for the Allen-Cahn system and the global Lipschitz
/// constant beta1 (squared) of the induced diagonal diffusion.
struct ScalarNoiseMap {
    std::function<double(double)> g;
    double beta1 = 1.0;
    std::string label = "custom";

    /// g(u) = sin(u) + 1.
    static ScalarNoiseMap sine_plus_one();
};

/// Finite-difference semidiscretization of the stochastic Allen-Cahn equation
/// on (0, 1) with K intervals: d = K - 1, m = 1,
///   f(X) = A X + X - X^3,  A = K^2 tridiag(1, -2, 1),  g(X) = (g(X_i))_i.
/// alpha1 = 1, p* = min(3.5, 1/2 + (mu - 2) / beta1) with mu the smallest
/// eigenvalue of -A, kappa = 3, c1 = max(2 ||A + I||^2, 9).
/// Throws UsageError if K < 2 or the noise map leaves no admissible p*.
SdeProblem allen_cahn(int intervals, ScalarNoiseMap noise = ScalarNoiseMap::sine_plus_one());

/// Dense K^2 tridiag(1, -2, 1) matrix of size (K-1) x (K-1).
Matrix allen_cahn_matrix(int intervals);

// ---------------------------------------------------------------------------
// Sampling-based certification of the structural assumptions.

/// Box [lo, hi]^d, `count` uniform pairs drawn from the counter stream `seed`.
struct SampleSpec {
    static constexpr std::uint64_t kDefaultSeed = 0x5DE10A6ULL;

    double lo = -10.0;
    double hi = 10.0;
    std::int64_t count = 10000;
    std::uint64_t seed = kDefaultSeed;
};

struct AssumptionReport {
    std::string condition;
    std::int64_t n_pairs = 0;
    /// Max over pairs of (LHS - RHS) / |x - y|^2.
    double worst_margin = 0.0;
    /// Largest feasible parameter, when the check scans one.
    std::optional<double> max_feasible;
    /// Implied growth constants (polynomial Lipschitz check only).
    std::optional<double> c2;
    std::optional<double> c3;
    bool pass = false;
};

/// <x-y, f(x)-f(y)> + (2p*-1)/2 ||g(x)-g(y)||^2 + alpha1 |x-y|^2 <= 0.
AssumptionReport check_contractive_monotone(const SdeProblem& problem, double p_star, double alpha1,
                                            const SampleSpec& samples = {});

/// |f(x)-f(y)|^2 - c1 (1 + |x|^{2kappa-2} + |y|^{2kappa-2}) |x-y|^2 <= 0.
AssumptionReport check_poly_lipschitz(const SdeProblem& problem, double kappa, double c1,
                                      const SampleSpec& samples = {});

/// ||g(x)-g(y)||^2 - beta1 |x-y|^2 <= 0.
AssumptionReport check_diffusion_lipschitz(const SdeProblem& problem, double beta1,
                                           const SampleSpec& samples = {});

/// Largest p* in [1, 64] for which check_contractive_monotone passes, by
/// bisection to 1e-3. Reported as max_feasible = 0 with pass = false when the
/// check already fails at p* = 1.
AssumptionReport max_feasible_pstar(const SdeProblem& problem, double alpha1, const SampleSpec& samples = {});

/// Admissible range of the moment exponent p of the strong-rate results:
/// [1, floor(p*) / (2 kappa - 1)]. Empty when hi < 1.
struct AdmissibleMoments {
    double lo = 1.0;
    double hi = 0.0;
    bool empty() const noexcept { return hi < lo; }
};
AdmissibleMoments admissible_moment_range(const MonotoneConstants& constants);

}  // namespace sdelong
