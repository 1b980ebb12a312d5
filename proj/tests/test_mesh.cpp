#include <doctest.h>

#include <cmath>
#include <random>

#include "cirlab/mesh.hpp"
#include "cirlab/schemes.hpp"

using namespace cirlab;

namespace {
const CirParams kBase{2.0, 0.02, 0.8, 0.0, 1.0};
}

TEST_CASE("alpha guard") {
    CHECK(next_dt_alpha_guard(0.01, -0.06, 0.01) == 0.01);
    CHECK(next_dt_alpha_guard(0.0005, -0.06, 0.01) ==
          doctest::Approx(0.0039583333333333333).epsilon(1e-14));
    CHECK(next_dt_alpha_guard(0.0005, 0.01, 0.01) == 0.01);
    CHECK_THROWS_AS(next_dt_alpha_guard(0.0, -0.06, 0.01), DomainError);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1e-9, 0.1);
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng), alpha = -u(rng), dt_max = u(rng);
        const double dt = next_dt_alpha_guard(x, alpha, dt_max);
        CHECK(dt > 0.0);
        CHECK(dt <= dt_max);
        CHECK(x + 2.0 * alpha * dt >= 0.05 * x * (1.0 - 1e-12));
    }
}

TEST_CASE("soft-zero threshold") {
    const auto sz = make_soft_zero(kBase, 0.01, 2.0);
    CHECK(sz.x_zero == doctest::Approx(1.9801326693244698e-4).epsilon(1e-13));
    for (double dt : {0.1, 0.01, 1e-3, 1e-5}) {
        CHECK(make_soft_zero(kBase, dt, 2.0).x_zero <= 2.0 * kBase.kappa * kBase.theta * dt / 2.0);
    }
    CHECK(make_soft_zero(kBase, 1e-12, 2.0).x_zero < 1e-13);
    CHECK_THROWS_AS(make_soft_zero(kBase, 0.01, 1.0), std::invalid_argument);
}

TEST_CASE("soft-zero step length") {
    const auto sz = make_soft_zero(kBase, 0.01, 2.0);
    const double dt = next_dt_soft_zero(0.0, kBase, sz);
    CHECK(dt == doctest::Approx(0.0049750004166555559).epsilon(1e-12));
    CHECK(soft_zero_ode_step(0.0, dt, kBase) == doctest::Approx(sz.x_zero).epsilon(1e-14));
    CHECK(dt <= 0.01);

    const double big_rho = next_dt_soft_zero(0.0, kBase, make_soft_zero(kBase, 0.01, 1e9));
    CHECK(big_rho < 1e-10);
    CHECK(big_rho > 0.0);

    CHECK_THROWS_AS(next_dt_soft_zero(sz.x_zero, kBase, sz), DomainError);
    CHECK_THROWS_AS(next_dt_soft_zero(0.1, kBase, sz), DomainError);
}

TEST_CASE("heuristic step") {
    CHECK(next_dt_heuristic(0.0, 0.01) == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(next_dt_heuristic(0.02, 0.01) == doctest::Approx(0.0087004850656140781).epsilon(1e-14));
    CHECK(next_dt_heuristic(10.0, 0.01) == 0.01);
    double prev = 0.0;
    for (double x = 0.0; x < 0.2; x += 1e-3) {
        const double dt = next_dt_heuristic(x, 0.01);
        CHECK(dt > prev);
        CHECK(dt >= 0.0025);
        CHECK(dt <= 0.01);
        prev = dt;
    }
}

TEST_CASE("controllers emit 0 < dt <= dt_max and route the hybrid") {
    const auto tp = transform(kBase);
    const auto sz = make_soft_zero(kBase, 0.01, 2.0);
    const auto hybrid = MeshController::soft_zero_hybrid(0.01);

    auto d = hybrid.decide(0.0, kBase, tp, sz);
    CHECK(d.kind == StepKind::SoftZeroOde);
    d = hybrid.decide(sz.x_zero, kBase, tp, sz);  // boundary is outside the region
    CHECK(d.kind == StepKind::Stochastic);
    CHECK(d.dt == doctest::Approx(0.95 * sz.x_zero / 0.12));

    const CirParams pos{2.0, 0.02, 0.2, 0.0, 1.0};
    d = hybrid.decide(0.05, pos, transform(pos), make_soft_zero(pos, 0.01, 2.0));
    CHECK(d.dt == 0.01);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (const auto& c : {MeshController::fixed(0.01), MeshController::heuristic(0.01), hybrid,
                          MeshController::alpha_guard(0.01)}) {
        for (int i = 0; i < 2000; ++i) {
            const double x = u(rng) + 1e-12;
            const auto step = c.decide(x, kBase, tp, sz);
            CHECK(step.dt > 0.0);
            CHECK(step.dt <= 0.01);
        }
    }
}

TEST_CASE("alpha guard without soft zero aborts at zero") {
    const auto tp = transform(kBase);
    CHECK_THROWS_AS(MeshController::alpha_guard(0.01).decide(0.0, kBase, tp, {}), DomainError);
}

TEST_CASE("controller names round-trip") {
    for (auto k : {ControllerKind::Fixed, ControllerKind::AlphaGuard, ControllerKind::SoftZeroHybrid,
                   ControllerKind::Heuristic}) {
        CHECK(parse_controller(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_controller("adaptive"), std::invalid_argument);
}
