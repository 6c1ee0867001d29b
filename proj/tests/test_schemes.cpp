#include "oracles.hpp"
#include "sdelong/noise.hpp"
#include "sdelong/schemes.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdelong;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

const SdeProblem& gl() {
    static const SdeProblem p = ginzburg_landau(-1.5, 1.0, 1.0);
    return p;
}

const SdeProblem& ac() {
    static const SdeProblem p = allen_cahn(4);
    return p;
}

SchemeConfig pe_config(std::optional<double> exponent = std::nullopt) {
    return {SchemeKind::ProjectedEuler, {}, exponent};
}

}  // namespace

TEST(SchemeNames, RoundTrip) {
    for (auto k : {SchemeKind::EulerMaruyama, SchemeKind::BackwardEuler, SchemeKind::ProjectedEuler}) {
        EXPECT_EQ(parse_scheme(scheme_name(k)), k);
    }
    EXPECT_FALSE(parse_scheme("rk4").has_value());
}

TEST(EulerMaruyama, WorkedValues) {
    EXPECT_DOUBLE_EQ(em_step(gl(), vec({1.0}), 0.2, vec({0.0}))[0], 0.6);
    EXPECT_DOUBLE_EQ(em_step(gl(), vec({10.0}), 0.5, vec({0.0}))[0], -495.0);
    EXPECT_DOUBLE_EQ(em_step(gl(), vec({1.0}), 0.2, vec({0.1}))[0], 0.7);
}

TEST(EulerMaruyama, RejectsBadInput) {
    EXPECT_THROW(em_step(gl(), vec({1.0}), 0.0, vec({0.0})), UsageError);
    EXPECT_THROW(em_step(gl(), vec({1.0, 2.0}), 0.1, vec({0.0})), UsageError);
    EXPECT_THROW(em_step(gl(), vec({1.0}), 0.1, vec({0.0, 0.0})), UsageError);
    EXPECT_THROW(em_step(gl(), vec({NAN}), 0.1, vec({0.0})), DomainError);
}

TEST(SolveImplicit, MatchesBisectionOracle) {
    const Vector z = solve_implicit(gl(), vec({1.0}), 0.5);
    EXPECT_NEAR(z[0], 0.5961, 1e-4);
    EXPECT_NEAR(z[0], oracle::gl_resolvent(-1.0, 1.0, 0.5, 1.0), 1e-12);
    for (double b : {-7.0, -1.2, 0.0, 0.3, 2.5, 40.0}) {
        EXPECT_NEAR(solve_implicit(gl(), vec({b}), 0.125)[0], oracle::gl_resolvent(-1.0, 1.0, 0.125, b), 1e-12)
            << b;
    }
}

TEST(BackwardEuler, WorkedValue) {
    // b = x + g(x) dW = 1 + 1 * 0.2.
    const double z = backward_euler_step(gl(), vec({1.0}), 0.5, vec({0.2}))[0];
    EXPECT_NEAR(z, oracle::gl_resolvent(-1.0, 1.0, 0.5, 1.2), 1e-12);
    EXPECT_NEAR(z - 0.5 * (-z - z * z * z), 1.2, 1e-12);
}

TEST(SolveImplicit, ResidualIsSmallOnRandomInputs) {
    const CounterStream s(2024, 0);
    SolveStats stats;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double h = std::ldexp(1.0, -static_cast<int>(1 + i % 10));
        const Vector b1 = vec({40.0 * s.uniform(4 * i) - 20.0});
        const Vector z1 = solve_implicit(gl(), b1, h, {}, &stats);
        ASSERT_LE(std::abs(z1[0] - h * gl().drift(z1)[0] - b1[0]), 1e-12);
        ASSERT_LE(stats.residual, 1e-12);

        Vector b3(3);
        for (int k = 0; k < 3; ++k) b3[k] = 20.0 * s.uniform(4 * i + 1 + k) - 10.0;
        const Vector z3 = solve_implicit(ac(), b3, h);
        ASSERT_LE((z3 - h * ac().drift(z3) - b3).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveImplicit, ResolventIsNonExpansive) {
    // z(b) solves z - h f(z) = b; with f one-sided Lipschitz with constant a < 0
    // the resolvent contracts by 1 / (1 - h a).
    const CounterStream s(31, 0);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double h = std::ldexp(1.0, -static_cast<int>(i % 8));
        const double b1 = 10.0 * s.normal(2 * i);
        const double b2 = 10.0 * s.normal(2 * i + 1);
        const double z1 = solve_implicit(gl(), vec({b1}), h)[0];
        const double z2 = solve_implicit(gl(), vec({b2}), h)[0];
        ASSERT_LE(std::abs(z1 - z2), std::abs(b1 - b2) / (1.0 + h) * (1.0 + 1e-12) + 1e-13);
    }
}

TEST(SolveImplicit, ErrorFallbackThrowsSolverError) {
    NewtonConfig cfg;
    cfg.max_iter = 1;
    cfg.fallback = NewtonFallback::Error;
    try {
        solve_implicit(gl(), vec({50.0}), 0.5, cfg);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.residual(), cfg.residual_tol);
        EXPECT_EQ(e.last_iterate().size(), 1);
    }
}

TEST(SolveImplicit, BisectionFallbackRecoversRoot) {
    NewtonConfig cfg;
    cfg.max_iter = 1;
    cfg.fallback = NewtonFallback::ScalarBisection;
    const double z = solve_implicit(gl(), vec({50.0}), 0.5, cfg)[0];
    EXPECT_NEAR(z, oracle::gl_resolvent(-1.0, 1.0, 0.5, 50.0), 1e-10);
}

TEST(NewtonConfig, Validation) {
    EXPECT_THROW((NewtonConfig{0.0, 10, NewtonFallback::DampedNewton}.validate()), UsageError);
    EXPECT_THROW((NewtonConfig{1e-12, 0, NewtonFallback::DampedNewton}.validate()), UsageError);
}

TEST(DriftJacobian, AnalyticValues) {
    EXPECT_DOUBLE_EQ(drift_jacobian(gl(), vec({1.0}))(0, 0), -4.0);
    EXPECT_DOUBLE_EQ(drift_jacobian(gl(), vec({0.0}))(0, 0), -1.0);
    const Matrix expected = allen_cahn_matrix(4) + Matrix::Identity(3, 3);
    EXPECT_TRUE(drift_jacobian(ac(), Vector::Zero(3)).isApprox(expected, 1e-15));
}

TEST(Projection, RadiusAndWorkedValue) {
    const double h = 1.0 / 16;
    EXPECT_DOUBLE_EQ(projection_radius(h, 2.0), std::pow(2.0, 4.0 / 6.0));
    EXPECT_DOUBLE_EQ(projection_radius(h, 3.0), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(projection_radius(h, 3.0, 0.25), 2.0);
    const Vector y = project(vec({3.0, 4.0}), h, 2.0);
    EXPECT_NEAR(y[0], 0.9524, 1e-4);
    EXPECT_NEAR(y[1], 1.2699, 1e-4);
    // Inside the ball the map is the identity.
    EXPECT_EQ(project(vec({0.5, -0.5}), h, 2.0), vec({0.5, -0.5}));
    EXPECT_THROW(project(vec({1.0}), 0.0, 2.0), UsageError);
    EXPECT_THROW(project(vec({1.0}), 1.5, 2.0), UsageError);
}

TEST(Projection, OneLipschitzAndWithinDistanceBound) {
    const CounterStream s(8, 3);
    const double h = 1.0 / 64;
    const double R = projection_radius(h, 3.0);
    for (std::uint64_t i = 0; i < 10000; ++i) {
        Vector x(2), y(2);
        for (int k = 0; k < 2; ++k) {
            x[k] = 5.0 * s.normal(4 * i + k);
            y[k] = 5.0 * s.normal(4 * i + 2 + k);
        }
        const Vector px = project(x, h, 3.0);
        const Vector py = project(y, h, 3.0);
        ASSERT_LE((px - py).norm(), (x - y).norm() * (1.0 + 1e-14));
        ASSERT_LE(px.norm(), R * (1.0 + 1e-14));
        // Moves by exactly max(0, |x| - R).
        ASSERT_NEAR((px - x).norm(), std::max(0.0, x.norm() - R), 1e-12 * (1.0 + x.norm()));
    }
}

TEST(Projection, DriftOnProjectedStateIsBounded) {
    // On the ball of radius R = h^{-1/(2(k+1))}, |f|^2 <= c2 R^{2k} + c3.
    const auto& c = gl().constants();
    for (int e = 1; e <= 10; ++e) {
        const double h = std::ldexp(1.0, -e);
        const double R = projection_radius(h, c.kappa);
        for (double x : {-1e3, -R, 0.3, R, 1e6}) {
            const Vector z = project(vec({x}), h, c.kappa);
            ASSERT_LE(gl().drift(z).squaredNorm(), c.c2() * std::pow(R, 2.0 * c.kappa) + gl().c3());
        }
    }
}

TEST(ProjectedEuler, WorkedValues) {
    const double h = 1.0 / 16;
    EXPECT_NEAR(projected_euler_step(gl(), vec({10.0}), h, vec({0.0}), pe_config(1.0 / 6.0))[0], 1.2382, 1e-4);
    EXPECT_NEAR(projected_euler_step(gl(), vec({10.0}), h, vec({0.0}), pe_config())[0], 1.14905, 1e-5);
    // Inside the ball PE coincides with EM.
    EXPECT_DOUBLE_EQ(projected_euler_step(gl(), vec({0.5}), h, vec({0.1}), pe_config())[0],
                     em_step(gl(), vec({0.5}), h, vec({0.1}))[0]);
}

TEST(ProjectedEuler, BothBranchesMatchDirectFormula) {
    const double h = 1.0 / 32;
    const double R = projection_radius(h, 3.0);
    for (double x : {-5.0, -0.9, 0.0, 0.7, 1.1 * R, 8.0}) {
        const double dw = 0.05;
        const double zbar = std::abs(x) <= R ? x : R * x / std::abs(x);
        const double expected = zbar + h * (-zbar - zbar * zbar * zbar) + zbar * dw;
        EXPECT_NEAR(projected_euler_step(gl(), vec({x}), h, vec({dw}), pe_config())[0], expected, 1e-14);
    }
}

TEST(Stepper, AgreesWithFreeFunctions) {
    const double h = 1.0 / 8;
    const CounterStream s(1, 1);
    for (auto kind : {SchemeKind::EulerMaruyama, SchemeKind::BackwardEuler, SchemeKind::ProjectedEuler}) {
        Stepper stepper(gl(), {kind, {}, std::nullopt}, h);
        for (std::uint64_t i = 0; i < 100; ++i) {
            Vector x = vec({4.0 * s.normal(2 * i)});
            const Vector dw = vec({std::sqrt(h) * s.normal(2 * i + 1)});
            Vector expected;
            switch (kind) {
                case SchemeKind::EulerMaruyama: expected = em_step(gl(), x, h, dw); break;
                case SchemeKind::BackwardEuler: expected = backward_euler_step(gl(), x, h, dw); break;
                case SchemeKind::ProjectedEuler: expected = projected_euler_step(gl(), x, h, dw); break;
            }
            ASSERT_TRUE(stepper.advance(x, std::span<const double>(dw.data(), 1)));
            ASSERT_NEAR(x[0], expected[0], 1e-13 * (1.0 + std::abs(expected[0])));
        }
    }
}

TEST(Stepper, ReportsNonFiniteState) {
    Stepper em(gl(), {SchemeKind::EulerMaruyama, {}, std::nullopt}, 1.0);
    Vector x = vec({1e200});
    const double dw = 0.0;
    EXPECT_FALSE(em.advance(x, std::span<const double>(&dw, 1)));
}

TEST(Orders, PredictedValues) {
    for (auto k : {SchemeKind::BackwardEuler, SchemeKind::ProjectedEuler}) {
        const auto o = scheme_orders(k);
        EXPECT_EQ(o.q1, 1.5);
        EXPECT_EQ(o.q2, 1.0);
        EXPECT_EQ(o.global(), 0.5);
        EXPECT_FALSE(o.requires_global_lipschitz);
    }
    EXPECT_TRUE(scheme_orders(SchemeKind::EulerMaruyama).requires_global_lipschitz);
}

TEST(StepCeiling, Values) {
    const auto& g = gl().constants();
    EXPECT_EQ(step_ceiling(SchemeKind::BackwardEuler, g, 1.0), 1.0);
    EXPECT_EQ(step_ceiling(SchemeKind::ProjectedEuler, g, 1.0), 1.0);
    EXPECT_EQ(step_ceiling(SchemeKind::BackwardEuler, g, 8.0), 0.5);
    EXPECT_EQ(step_ceiling(SchemeKind::ProjectedEuler, g, 8.0), 0.25);
    const auto& a = ac().constants();
    EXPECT_EQ(step_ceiling(SchemeKind::BackwardEuler, a, 1.0), 1.0);
    EXPECT_EQ(step_ceiling(SchemeKind::ProjectedEuler, a, 1.0), 0.5);
    EXPECT_THROW(step_ceiling(SchemeKind::BackwardEuler, a, 0.5), UsageError);
}
