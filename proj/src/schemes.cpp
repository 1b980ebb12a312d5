#include "cirlab/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cirlab {

namespace {

constexpr SchemeId kAllSchemes[] = {
    SchemeId::SplitLie,       SchemeId::SplitStrang,     SchemeId::SplitSoftZero,
    SchemeId::MilsteinTrunc,  SchemeId::FullyTruncEuler, SchemeId::DriftImplicit,
    SchemeId::ProjectedEuler, SchemeId::ExactSampler,
};

// Radicand clamping is only used by the soft-zero hybrid when the alpha guard
// asks for less than one fine cell.
double lie_map(double x, double dt, double dw, const TransformedParams& tp, bool clamp) {
    double radicand = x + 2.0 * tp.alpha * dt;
    if (radicand < 0.0) {
        if (!clamp) throw DomainError("split step: negative radicand x + 2 alpha dt");
        radicand = 0.0;
    }
    const double root = std::sqrt(radicand) + tp.gamma * dw;
    return std::exp(-2.0 * tp.beta * dt) * root * root;
}

bool is_lamperti_space(SchemeId id) {
    return id == SchemeId::DriftImplicit || id == SchemeId::ProjectedEuler;
}

}  // namespace

std::string_view to_string(SchemeId id) {
    switch (id) {
        case SchemeId::SplitLie: return "split_lie";
        case SchemeId::SplitStrang: return "split_strang";
        case SchemeId::SplitSoftZero: return "split_soft_zero";
        case SchemeId::MilsteinTrunc: return "milstein_trunc";
        case SchemeId::FullyTruncEuler: return "fully_trunc_euler";
        case SchemeId::DriftImplicit: return "drift_implicit";
        case SchemeId::ProjectedEuler: return "projected_euler";
        case SchemeId::ExactSampler: return "exact_sampler";
    }
    return "unknown";
}

SchemeId parse_scheme(std::string_view name) {
    for (SchemeId id : kAllSchemes) {
        if (name == to_string(id)) return id;
    }
    throw std::invalid_argument("unknown scheme: " + std::string(name));
}

MeshController default_controller(SchemeId id, double dt_max, double rho) {
    if (id == SchemeId::SplitSoftZero) return MeshController::soft_zero_hybrid(dt_max, rho);
    return MeshController::fixed(dt_max);
}

double split_lie_step(double x, double dt, double dw, const TransformedParams& tp) {
    return lie_map(x, dt, dw, tp, false);
}

double split_strang_step(double x, double dt, double dw, const TransformedParams& tp) {
    const double radicand = x + tp.alpha * dt;
    if (radicand < 0.0) throw DomainError("Strang step: negative radicand x + alpha dt");
    const double root = std::sqrt(radicand) + tp.gamma * dw;
    return std::exp(-2.0 * tp.beta * dt) * root * root + tp.alpha * dt;
}

double milstein_trunc_step(double x, double dt, double dw, const CirParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double r1 = std::max(0.5 * p.sigma * std::sqrt(dt),
                               std::sqrt(std::max(0.25 * s2 * dt, x)) + 0.5 * p.sigma * dw);
    return std::max(r1 * r1 + dt * (p.kappa * (p.theta - x) - 0.25 * s2), 0.0);
}

TruncatedEulerState fully_trunc_euler_step(double x_tilde, double dt, double dw,
                                           const CirParams& p) {
    const double pos = std::max(x_tilde, 0.0);
    TruncatedEulerState next;
    next.x_tilde = x_tilde + dt * p.kappa * (p.theta - pos) + p.sigma * std::sqrt(pos) * dw;
    next.x = std::max(next.x_tilde, 0.0);
    return next;
}

double drift_implicit_step(double y, double dt, double dw, const TransformedParams& tp) {
    if (!(tp.alpha > 0.0)) throw DomainError("drift-implicit step requires alpha > 0");
    if (!(tp.beta * dt < 1.0)) throw DomainError("drift-implicit step requires beta * dt < 1");
    // Root of (1 + beta dt) Y^2 - (y + gamma dW) Y - alpha dt = 0, i.e. the
    // implicit step Y+ = y + (alpha / Y+ - beta Y+) dt + gamma dW.
    const double denom = 1.0 + tp.beta * dt;
    const double half = (y + tp.gamma * dw) / (2.0 * denom);
    return half + std::sqrt(half * half + tp.alpha * dt / denom);
}

double projected_euler_step(double y, double dt, double dw, const TransformedParams& tp,
                            std::size_t n_steps) {
    const double floor_value = std::pow(static_cast<double>(std::max<std::size_t>(n_steps, 1)),
                                        -0.25);
    const double y_hat = std::max(floor_value, y);
    return y_hat + (tp.alpha / y_hat - tp.beta * y_hat) * dt + tp.gamma * dw;
}

double soft_zero_ode_step(double x, double dt, const CirParams& p) {
    return conditional_mean(p, x, dt);
}

void check_admissible(SchemeId scheme, const MeshController& controller, const CirParams& p) {
    p.validate();
    if (!(controller.dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
    const TransformedParams tp = transform(p);
    const auto reject = [&](const std::string& why) {
        throw AdmissibilityError(std::string(to_string(scheme)) + " with " +
                                 std::string(to_string(controller.kind)) + ": " + why);
    };

    switch (scheme) {
        case SchemeId::SplitLie:
        case SchemeId::SplitStrang:
            if (controller.kind == ControllerKind::SoftZeroHybrid) {
                reject("use split_soft_zero for the soft-zero hybrid");
            }
            if (tp.alpha < 0.0 && controller.kind != ControllerKind::AlphaGuard) {
                reject("alpha < 0 requires the soft-zero hybrid");
            }
            break;
        case SchemeId::SplitSoftZero:
            if (controller.kind != ControllerKind::SoftZeroHybrid) {
                reject("requires the soft_zero_hybrid controller");
            }
            break;
        case SchemeId::DriftImplicit:
            if (!(tp.alpha > 0.0)) reject("only defined for alpha > 0");
            if (!(tp.beta * controller.dt_max < 1.0)) reject("requires beta * dt < 1");
            [[fallthrough]];
        case SchemeId::MilsteinTrunc:
        case SchemeId::FullyTruncEuler:
        case SchemeId::ProjectedEuler:
        case SchemeId::ExactSampler:
            if (controller.kind != ControllerKind::Fixed) reject("runs on fixed meshes only");
            break;
    }
}

RunSummary integrate(SchemeId scheme, const MeshController& controller, const CirParams& p,
                     const WienerGrid& grid, const RunOptions& opts, const NodeVisitor& visit) {
    check_admissible(scheme, controller, p);
    const TransformedParams tp = transform(p);
    const std::size_t cells = grid.cells();
    const double dt_ref = grid.dt_ref();
    const std::size_t max_steps = opts.max_steps == 0 ? cells : opts.max_steps;

    SoftZeroConfig sz;
    if (controller.kind == ControllerKind::SoftZeroHybrid) {
        sz = make_soft_zero(p, controller.dt_max, controller.rho);
    }

    std::size_t projected_n = 0;
    if (scheme == SchemeId::ProjectedEuler) {
        const std::size_t per_step =
            std::max<std::size_t>(1, snap_to_grid(controller.dt_max, dt_ref, SnapMode::Floor, cells));
        projected_n = (cells + per_step - 1) / per_step;
    }

    std::mt19937_64 exact_rng(derive_seed(grid.seed(), grid.path_index(), 0xE7AC7ull));

    double x = p.x0;
    double y = std::sqrt(p.x0);
    double x_tilde = p.x0;
    const bool clamp = controller.kind == ControllerKind::SoftZeroHybrid;

    RunSummary summary;
    if (visit) visit(0, x, StepKind::Stochastic);

    std::size_t k = 0;
    while (k < cells) {
        if (summary.steps >= max_steps) {
            throw StepLimitError("trajectory exceeded " + std::to_string(max_steps) + " steps");
        }
        const StepDecision d = controller.decide(x, p, tp, sz);
        const SnapMode mode = d.kind == StepKind::SoftZeroOde ? SnapMode::Ceil : SnapMode::Floor;
        const std::size_t step_cells =
            std::max<std::size_t>(1, snap_to_grid(d.dt, dt_ref, mode, cells));
        const std::size_t j = std::min(k + step_cells, cells);
        const double dt = static_cast<double>(j - k) * dt_ref;

        if (d.kind == StepKind::SoftZeroOde) {
            x = soft_zero_ode_step(x, dt, p);
            ++summary.soft_zero_steps;
        } else {
            const double dw = grid.increment(k, j);
            switch (scheme) {
                case SchemeId::SplitLie:
                case SchemeId::SplitSoftZero:
                    x = lie_map(x, dt, dw, tp, clamp);
                    break;
                case SchemeId::SplitStrang:
                    x = split_strang_step(x, dt, dw, tp);
                    break;
                case SchemeId::MilsteinTrunc:
                    x = milstein_trunc_step(x, dt, dw, p);
                    break;
                case SchemeId::FullyTruncEuler: {
                    const auto next = fully_trunc_euler_step(x_tilde, dt, dw, p);
                    x_tilde = next.x_tilde;
                    x = next.x;
                    break;
                }
                case SchemeId::DriftImplicit:
                    y = drift_implicit_step(y, dt, dw, tp);
                    break;
                case SchemeId::ProjectedEuler:
                    y = projected_euler_step(y, dt, dw, tp, projected_n);
                    break;
                case SchemeId::ExactSampler:
                    x = exact_conditional_sample(p, x, dt, exact_rng);
                    break;
            }
            if (is_lamperti_space(scheme)) x = y * y;
        }
        k = j;
        ++summary.steps;
        if (visit) visit(k, x, d.kind);
    }
    summary.x_final = x;
    return summary;
}

Trajectory run_trajectory(SchemeId scheme, const MeshController& controller, const CirParams& p,
                          const WienerGrid& grid, const RunOptions& opts) {
    Trajectory traj;
    const NodeVisitor record = [&](std::size_t cell, double x, StepKind kind) {
        if (!traj.times.empty()) traj.step_kinds.push_back(kind);
        traj.times.push_back(grid.time_at(cell));
        traj.states.push_back(x);
        traj.grid_indices.push_back(cell);
    };
    integrate(scheme, controller, p, grid, opts, record);
    return traj;
}

}  // namespace cirlab
