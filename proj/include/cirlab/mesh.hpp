#pragma once

#include <string>
#include <string_view>

#include "cirlab/model.hpp"

namespace cirlab {

/// Soft-zero region [0, x_zero) used by the hybrid splitting scheme.
struct SoftZeroConfig {
    double rho = 2.0;
    double x_zero = 0.0;
};

/// x_zero = theta (1 - e^{-kappa dt_max}) / rho. Requires rho > 1, dt_max > 0.
SoftZeroConfig make_soft_zero(const CirParams& p, double dt_max, double rho);

/// Largest step keeping the splitting radicand positive when alpha < 0:
/// min{0.95 x / (2 |alpha|), dt_max}. Throws DomainError for x <= 0.
double next_dt_alpha_guard(double x, double alpha, double dt_max);

/// Duration of the exact flow of u' = kappa (theta - u) from x to x_zero:
/// -log((x_zero - theta) / (x - theta)) / kappa. Throws DomainError unless
/// 0 <= x < x_zero < theta.
double next_dt_soft_zero(double x, const CirParams& p, const SoftZeroConfig& cfg);

/// dt_max / (1 + 3 exp(-150 x)).
double next_dt_heuristic(double x, double dt_max);

enum class ControllerKind { Fixed, AlphaGuard, SoftZeroHybrid, Heuristic };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller(std::string_view name);

enum class StepKind { Stochastic, SoftZeroOde };

std::string_view to_string(StepKind kind);

struct StepDecision {
    double dt = 0.0;
    StepKind kind = StepKind::Stochastic;
};

/// A timestep rule. decide() reads only the current state; it never sees the
/// Wiener path.
struct MeshController {
    ControllerKind kind = ControllerKind::Fixed;
    double dt_max = 0.0;
    double rho = 2.0;

    static MeshController fixed(double dt) { return {ControllerKind::Fixed, dt, 2.0}; }
    static MeshController alpha_guard(double dt_max) {
        return {ControllerKind::AlphaGuard, dt_max, 2.0};
    }
    static MeshController soft_zero_hybrid(double dt_max, double rho = 2.0) {
        return {ControllerKind::SoftZeroHybrid, dt_max, rho};
    }
    static MeshController heuristic(double dt_max) {
        return {ControllerKind::Heuristic, dt_max, 2.0};
    }

    /// Next step from state x. For SoftZeroHybrid: x < x_zero takes an ODE
    /// step, otherwise alpha < 0 takes the alpha guard, otherwise dt_max.
    StepDecision decide(double x, const CirParams& p, const TransformedParams& tp,
                        const SoftZeroConfig& sz) const;
};

}  // namespace cirlab
