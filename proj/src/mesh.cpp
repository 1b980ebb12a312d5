#include "cirlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cirlab {

SoftZeroConfig make_soft_zero(const CirParams& p, double dt_max, double rho) {
    if (!(rho > 1.0)) throw std::invalid_argument("soft-zero rho must exceed 1");
    if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
    return {rho, p.theta * (-std::expm1(-p.kappa * dt_max)) / rho};
}

double next_dt_alpha_guard(double x, double alpha, double dt_max) {
    if (!(x > 0.0)) {
        throw DomainError("alpha guard: state must be positive (soft zero disabled?)");
    }
    if (alpha >= 0.0) return dt_max;
    return std::min(0.95 * x / (2.0 * std::abs(alpha)), dt_max);
}

double next_dt_soft_zero(double x, const CirParams& p, const SoftZeroConfig& cfg) {
    if (!(x >= 0.0 && x < cfg.x_zero)) {
        throw DomainError("soft-zero step requires 0 <= x < x_zero");
    }
    if (!(cfg.x_zero < p.theta)) throw DomainError("soft-zero threshold must lie below theta");
    // log((x_zero - theta) / (x - theta)) written with log1p for small gaps.
    return -std::log1p((cfg.x_zero - x) / (x - p.theta)) / p.kappa;
}

double next_dt_heuristic(double x, double dt_max) {
    return dt_max / (1.0 + 3.0 * std::exp(-150.0 * x));
}

std::string_view to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Fixed: return "fixed";
        case ControllerKind::AlphaGuard: return "alpha_guard";
        case ControllerKind::SoftZeroHybrid: return "soft_zero_hybrid";
        case ControllerKind::Heuristic: return "heuristic";
    }
    return "unknown";
}

ControllerKind parse_controller(std::string_view name) {
    for (auto k : {ControllerKind::Fixed, ControllerKind::AlphaGuard,
                   ControllerKind::SoftZeroHybrid, ControllerKind::Heuristic}) {
        if (name == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown controller: " + std::string(name));
}

std::string_view to_string(StepKind kind) {
    return kind == StepKind::Stochastic ? "stochastic" : "soft_zero_ode";
}

StepDecision MeshController::decide(double x, const CirParams& p, const TransformedParams& tp,
                                    const SoftZeroConfig& sz) const {
    switch (kind) {
        case ControllerKind::Fixed:
            return {dt_max, StepKind::Stochastic};
        case ControllerKind::AlphaGuard:
            return {next_dt_alpha_guard(x, tp.alpha, dt_max), StepKind::Stochastic};
        case ControllerKind::SoftZeroHybrid:
            if (x < sz.x_zero) return {next_dt_soft_zero(x, p, sz), StepKind::SoftZeroOde};
            if (tp.alpha < 0.0) {
                return {next_dt_alpha_guard(x, tp.alpha, dt_max), StepKind::Stochastic};
            }
            return {dt_max, StepKind::Stochastic};
        case ControllerKind::Heuristic:
            return {next_dt_heuristic(x, dt_max), StepKind::Stochastic};
    }
    throw std::logic_error("unreachable controller kind");
}

}  // namespace cirlab
