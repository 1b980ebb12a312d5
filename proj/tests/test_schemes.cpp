#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cirlab/errors.hpp"
#include "cirlab/schemes.hpp"
#include "oracles.hpp"

using namespace cirlab;

namespace {
CirParams params(double sigma, double x0 = 0.0) { return {2.0, 0.02, sigma, x0, 1.0}; }
}  // namespace

TEST_CASE("split_lie_step examples") {
    const auto tp = transform(params(0.2));
    CHECK(split_lie_step(0.01, 0.01, 0.0, tp) ==
          doctest::Approx(0.01009604633505958).epsilon(1e-14));
    CHECK(split_lie_step(0.0, 0.3, 0.0, transform(params(0.4))) == 0.0);
    CHECK_THROWS_AS(split_lie_step(0.0001, 0.01, 0.0, transform(params(0.8))), DomainError);
}

TEST_CASE("compact and expanded splitting forms agree") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const auto p = params(0.05 + 0.35 * u(rng));
        const double x = 0.1 * u(rng), dt = 0.1 * u(rng) + 1e-6;
        const double dw = std::sqrt(dt) * z(rng);
        const auto ref = oracle::split_expanded(x, dt, dw, p);
        const double got = split_lie_step(x, dt, dw, transform(p));
        REQUIRE(std::abs(got - ref.value) <= 1e-14 * ref.magnitude);
    }
}

TEST_CASE("splitting steps are non-negative for alpha >= 0") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const auto tp = transform(params(0.4 * u(rng) + 1e-3));
        const double x = 0.2 * u(rng), dt = 0.1 * u(rng) + 1e-8;
        const double dw = 10.0 * std::sqrt(dt) * z(rng);
        REQUIRE(split_lie_step(x, dt, dw, tp) >= 0.0);
        REQUIRE(split_strang_step(x, dt, dw, tp) >= 0.0);
    }
}

TEST_CASE("one-step conditional mean of the Lie map") {
    const auto p = params(0.3);
    const auto tp = transform(p);
    const double x = 0.005, dt = 0.05;
    std::mt19937_64 rng(23);
    std::normal_distribution<double> z(0.0, std::sqrt(dt));
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = split_lie_step(x, dt, z(rng), tp);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    const double expected = std::exp(-p.kappa * dt) * (x + p.kappa * p.theta * dt);
    CHECK(std::abs(mean - expected) < 4.0 * se);
}

TEST_CASE("split_strang_step examples") {
    const auto tp = transform(params(0.2));
    CHECK(split_strang_step(0.01, 0.01, 0.0, tp) ==
          doctest::Approx(0.010099016534063566).epsilon(1e-14));
    const auto tp0 = transform(params(0.4));
    std::mt19937_64 rng(24);
    std::normal_distribution<double> z(0.0, 0.1);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::abs(z(rng)), dw = z(rng);
        CHECK(split_strang_step(x, 0.01, dw, tp0) == split_lie_step(x, 0.01, dw, tp0));
    }
}

TEST_CASE("milstein_trunc_step examples") {
    const auto p = params(0.2);
    CHECK(milstein_trunc_step(0.01, 0.01, 0.0, p) == doctest::Approx(0.0101).epsilon(1e-14));
    CHECK(milstein_trunc_step(0.0, 0.01, 0.0, p) == doctest::Approx(0.0004).epsilon(1e-12));
    std::mt19937_64 rng(25);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        CHECK(milstein_trunc_step(std::abs(z(rng)) * 0.01, 0.05, z(rng), params(0.8)) >= 0.0);
    }
}

TEST_CASE("fully_trunc_euler_step examples") {
    const auto p = params(0.2);
    auto s = fully_trunc_euler_step(-0.01, 0.01, 0.0, p);
    CHECK(s.x_tilde == doctest::Approx(-0.0096).epsilon(1e-14));
    CHECK(s.x == 0.0);
    s = fully_trunc_euler_step(p.theta, 0.01, 0.0, p);
    CHECK(s.x_tilde == doctest::Approx(p.theta).epsilon(1e-15));
    std::mt19937_64 rng(26);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) CHECK(fully_trunc_euler_step(0.01 * z(rng), 0.05, z(rng), p).x >= 0.0);
}

TEST_CASE("drift_implicit_step examples") {
    const auto tp = transform(params(0.2));
    CHECK(drift_implicit_step(0.1, 0.01, 0.0, tp) ==
          doctest::Approx(0.10048783953639798).epsilon(1e-13));
    CHECK(drift_implicit_step(0.1, 1e-12, 0.0, tp) == doctest::Approx(0.1).epsilon(1e-9));
    // the root satisfies the implicit equation
    const double y = 0.07, dt = 0.02, dw = -0.03;
    const double yp = drift_implicit_step(y, dt, dw, tp);
    CHECK(yp == doctest::Approx(y + (tp.alpha / yp - tp.beta * yp) * dt + tp.gamma * dw).epsilon(1e-13));
    std::mt19937_64 rng(27);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) CHECK(drift_implicit_step(0.0, 0.01, z(rng), tp) > 0.0);
    CHECK_THROWS_AS(drift_implicit_step(0.1, 1.0, 0.0, tp), DomainError);
    CHECK_THROWS_AS(drift_implicit_step(0.1, 0.01, 0.0, transform(params(0.4))), DomainError);
}

TEST_CASE("projected_euler_step examples") {
    const auto tp = transform(params(0.2));
    CHECK(projected_euler_step(0.0, 0.01, 0.0, tp, 10000) == doctest::Approx(0.1005).epsilon(1e-13));
    const double y = 0.3;
    CHECK(projected_euler_step(y, 0.01, 0.02, tp, 10000) ==
          doctest::Approx(y + (tp.alpha / y - tp.beta * y) * 0.01 + tp.gamma * 0.02));
    CHECK(projected_euler_step(1e-3, 0.01, 0.0, tp, 1ull << 60) ==
          doctest::Approx(1e-3 + (tp.alpha / 1e-3 - tp.beta * 1e-3) * 0.01));
}

TEST_CASE("soft_zero_ode_step") {
    const auto p = params(0.8);
    const auto sz = make_soft_zero(p, 0.01, 2.0);
    CHECK(soft_zero_ode_step(0.0, 0.0049750004166555559, p) ==
          doctest::Approx(1.9801326693244698e-4).epsilon(1e-12));
    CHECK(soft_zero_ode_step(0.001, 0.0, p) == 0.001);
    for (double dt : {1e-3, 1.0, 10.0, 1e3}) CHECK(soft_zero_ode_step(0.0, dt, p) <= p.theta);

    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * sz.x_zero;
        const double dt = next_dt_soft_zero(x, p, sz);
        CHECK(soft_zero_ode_step(x, dt, p) == doctest::Approx(sz.x_zero).epsilon(1e-13));
    }
}

TEST_CASE("soft-zero one-step variance oracle agrees with sampling") {
    const auto p = params(0.8);
    const std::vector<double> starts(20000, 0.5);
    const double dt_max = 0.01;
    const double x_zero = make_soft_zero(p, dt_max, 2.0).x_zero;
    const double x = 0.5 * x_zero;
    const double dt = next_dt_soft_zero(x, p, make_soft_zero(p, dt_max, 2.0));
    const double mse = oracle::soft_zero_one_step_mse(p, dt_max, 2.0, starts, 99);
    // The ODE flow equals the conditional mean, so the MSE is the variance.
    CHECK(mse == doctest::Approx(oracle::exact_conditional_variance(p, x, dt)).epsilon(0.1));
}

TEST_CASE("run_trajectory: fixed fine mesh visits every cell") {
    const auto p = params(0.3, 0.01);
    const auto grid = generate(1, 0, 1e-3, 1.0);
    const auto traj = run_trajectory(SchemeId::SplitLie, MeshController::fixed(1e-3), p, grid);
    REQUIRE(traj.times.size() == grid.cells() + 1);
    CHECK(traj.step_kinds.size() == grid.cells());
    CHECK(traj.times.back() == p.horizon);
    for (std::size_t k = 0; k < traj.grid_indices.size(); ++k) {
        CHECK(traj.grid_indices[k] == k);
        CHECK(traj.states[k] >= 0.0);
    }
}

TEST_CASE("run_trajectory: soft-zero hybrid from zero") {
    const auto p = params(0.8);
    const double dt_max = 0.01;
    const auto sz = make_soft_zero(p, dt_max, 2.0);
    for (std::uint64_t path = 0; path < 20; ++path) {
        const auto grid = generate(3, path, 1e-4, 1.0);
        const auto traj =
            run_trajectory(SchemeId::SplitSoftZero, MeshController::soft_zero_hybrid(dt_max), p, grid);
        REQUIRE(traj.step_kinds.front() == StepKind::SoftZeroOde);
        CHECK(traj.states[1] >= sz.x_zero);
        CHECK(traj.times.back() == p.horizon);
        for (std::size_t n = 0; n + 1 < traj.times.size(); ++n) {
            CHECK(traj.times[n + 1] > traj.times[n]);
            CHECK(traj.times[n + 1] - traj.times[n] <= dt_max + 1e-12);
            CHECK(traj.states[n + 1] >= 0.0);
            if (traj.step_kinds[n] == StepKind::SoftZeroOde) {
                CHECK(traj.states[n] < sz.x_zero);
                // the final step may be truncated at T
                if (n + 2 < traj.times.size()) CHECK(traj.states[n + 1] >= sz.x_zero);
            }
        }
    }
}

TEST_CASE("run_trajectory is deterministic") {
    const auto p = params(0.8);
    const auto grid = generate(4, 2, 1e-4, 1.0);
    const auto c = MeshController::soft_zero_hybrid(0.005);
    const auto a = run_trajectory(SchemeId::SplitSoftZero, c, p, grid);
    const auto b = run_trajectory(SchemeId::SplitSoftZero, c, p, generate(4, 2, 1e-4, 1.0));
    CHECK(a.states == b.states);
    CHECK(a.times == b.times);
    const auto e1 = run_trajectory(SchemeId::ExactSampler, MeshController::fixed(0.01), p, grid);
    const auto e2 = run_trajectory(SchemeId::ExactSampler, MeshController::fixed(0.01), p, grid);
    CHECK(e1.states == e2.states);
    for (double x : e1.states) CHECK(x >= 0.0);
}

TEST_CASE("soft-zero hybrid at dt_max = dt_ref stays well defined") {
    const auto p = params(0.8);
    for (std::uint64_t path = 0; path < 10; ++path) {
        const auto grid = generate(5, path, 1e-4, 1.0);
        RunSummary s;
        CHECK_NOTHROW(s = integrate(SchemeId::SplitSoftZero, MeshController::soft_zero_hybrid(1e-4),
                                    p, grid));
        CHECK(s.x_final >= 0.0);
    }
}

TEST_CASE("admissibility") {
    const auto neg = params(0.8);
    const auto pos = params(0.2);
    const auto fixed = MeshController::fixed(0.01);
    CHECK_THROWS_AS(check_admissible(SchemeId::SplitLie, fixed, neg), AdmissibilityError);
    CHECK_THROWS_AS(check_admissible(SchemeId::SplitStrang, fixed, neg), AdmissibilityError);
    CHECK_THROWS_AS(check_admissible(SchemeId::DriftImplicit, fixed, params(0.4)),
                    AdmissibilityError);
    CHECK_THROWS_AS(check_admissible(SchemeId::ProjectedEuler, MeshController::heuristic(0.01), pos),
                    AdmissibilityError);
    CHECK_THROWS_AS(check_admissible(SchemeId::SplitSoftZero, fixed, neg), AdmissibilityError);
    CHECK_THROWS_AS(check_admissible(SchemeId::MilsteinTrunc, MeshController::heuristic(0.01), pos),
                    AdmissibilityError);
    CHECK_NOTHROW(check_admissible(SchemeId::SplitSoftZero, MeshController::soft_zero_hybrid(0.01), neg));
    CHECK_NOTHROW(check_admissible(SchemeId::SplitLie, MeshController::heuristic(0.01), pos));
    CHECK_NOTHROW(check_admissible(SchemeId::DriftImplicit, fixed, pos));
}

TEST_CASE("diagnostic alpha guard without soft zero aborts from x0 = 0") {
    const auto grid = generate(6, 0, 1e-3, 1.0);
    CHECK_THROWS_AS(integrate(SchemeId::SplitLie, MeshController::alpha_guard(0.01), params(0.8), grid),
                    DomainError);
}

TEST_CASE("step ceiling") {
    const auto grid = generate(7, 0, 1e-3, 1.0);
    CHECK_THROWS_AS(integrate(SchemeId::SplitLie, MeshController::fixed(0.01), params(0.2), grid, {50}),
                    StepLimitError);
    CHECK_NOTHROW(integrate(SchemeId::SplitLie, MeshController::fixed(0.01), params(0.2), grid, {100}));
}

TEST_CASE("moment bound holds for SplitLie on an adaptive mesh") {
    const auto p = params(0.3);
    const int m = 400;
    std::vector<double> finals;
    for (int k = 0; k < m; ++k) {
        const auto grid = generate(8, k, 1e-3, 1.0);
        finals.push_back(integrate(SchemeId::SplitLie, MeshController::heuristic(0.05), p, grid).x_final);
    }
    double s = 0.0, s2 = 0.0;
    for (double v : finals) {
        s += v;
        s2 += v * v;
    }
    const double mean = s / m;
    const double se = std::sqrt((s2 / m - mean * mean) / m);
    CHECK(mean <= p.x0 + p.kappa * p.theta * p.horizon + 3.0 * se);
}

TEST_CASE("drift-implicit and splitting approach each other as dt shrinks") {
    const auto p = params(0.1, 0.02);
    const int m = 200;
    double prev = INFINITY;
    for (double dt : {0.1, 0.01, 0.001}) {
        double acc = 0.0;
        for (int k = 0; k < m; ++k) {
            const auto grid = generate(9, k, 1e-4, 1.0);
            const double a = integrate(SchemeId::SplitLie, MeshController::fixed(dt), p, grid).x_final;
            const double b = integrate(SchemeId::DriftImplicit, MeshController::fixed(dt), p, grid).x_final;
            acc += (a - b) * (a - b);
        }
        const double l2 = std::sqrt(acc / m);
        CHECK(l2 < prev);
        prev = l2;
    }
}

TEST_CASE("scheme names round-trip") {
    for (auto id : {SchemeId::SplitLie, SchemeId::SplitStrang, SchemeId::SplitSoftZero,
                    SchemeId::MilsteinTrunc, SchemeId::FullyTruncEuler, SchemeId::DriftImplicit,
                    SchemeId::ProjectedEuler, SchemeId::ExactSampler}) {
        CHECK(parse_scheme(to_string(id)) == id);
    }
    CHECK_THROWS_AS(parse_scheme("euler"), std::invalid_argument);
}
