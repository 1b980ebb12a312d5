#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "cirlab/mesh.hpp"
#include "cirlab/model.hpp"
#include "cirlab/wiener.hpp"

namespace cirlab {

enum class SchemeId {
    SplitLie,
    SplitStrang,
    SplitSoftZero,
    MilsteinTrunc,
    FullyTruncEuler,
    DriftImplicit,
    ProjectedEuler,
    ExactSampler,
};

std::string_view to_string(SchemeId id);
SchemeId parse_scheme(std::string_view name);

/// Controller a scheme runs under when none is named explicitly.
MeshController default_controller(SchemeId id, double dt_max, double rho = 2.0);

// ---------------------------------------------------------------------------
// One-step maps. X-space maps take and return X; Lamperti-space maps take and
// return Y = sqrt(X).

/// Lie-Trotter splitting: e^{-2 beta dt} (sqrt(x + 2 alpha dt) + gamma dW)^2.
/// Throws DomainError if x + 2 alpha dt < 0.
double split_lie_step(double x, double dt, double dw, const TransformedParams& tp);

/// Strang variant: e^{-2 beta dt} (sqrt(x + alpha dt) + gamma dW)^2 + alpha dt.
double split_strang_step(double x, double dt, double dw, const TransformedParams& tp);

/// Truncated Milstein:
///   R = max{sigma sqrt(dt) / 2, sqrt(max{sigma^2 dt / 4, x}) + sigma dW / 2}
///   X+ = max{R^2 + dt (kappa (theta - x) - sigma^2 / 4), 0}
double milstein_trunc_step(double x, double dt, double dw, const CirParams& p);

struct TruncatedEulerState {
    double x_tilde = 0.0;  // unclamped auxiliary value carried between steps
    double x = 0.0;        // reported state, max{x_tilde, 0}
};

TruncatedEulerState fully_trunc_euler_step(double x_tilde, double dt, double dw,
                                           const CirParams& p);

/// Drift-implicit square-root Euler in Y. Requires alpha > 0 and beta dt < 1.
double drift_implicit_step(double y, double dt, double dw, const TransformedParams& tp);

/// Projected Euler in Y with threshold n_steps^{-1/4}. Output may be negative.
double projected_euler_step(double y, double dt, double dw, const TransformedParams& tp,
                            std::size_t n_steps);

/// Exact flow of u' = kappa (theta - u) over dt.
double soft_zero_ode_step(double x, double dt, const CirParams& p);

// ---------------------------------------------------------------------------
// Trajectory driver.

struct Trajectory {
    std::vector<double> times;             // t_0 = 0 .. t_N = T
    std::vector<double> states;            // X at each node
    std::vector<StepKind> step_kinds;      // one per step (size N)
    std::vector<std::size_t> grid_indices; // fine cell index of each node
};

struct RunOptions {
    /// Step ceiling; 0 means the number of fine cells (every step consumes at
    /// least one cell, so this is never binding by default).
    std::size_t max_steps = 0;
};

/// Summary of a run for callers that only need terminal values.
struct RunSummary {
    double x_final = 0.0;
    std::size_t steps = 0;
    std::size_t soft_zero_steps = 0;
};

/// Called at every node, including t_0, with (cell index, X, kind of the step
/// that produced the node; Stochastic for t_0).
using NodeVisitor = std::function<void(std::size_t, double, StepKind)>;

/// Throws AdmissibilityError if the combination may not be run.
void check_admissible(SchemeId scheme, const MeshController& controller, const CirParams& p);

/// Steps from t = 0 to the end of the grid: ask the controller, snap the step
/// to the fine grid (down for stochastic steps, at least one cell; up for
/// soft-zero ODE steps), truncate at T, then apply the one-step map with the
/// Wiener increment over the snapped cells. ODE steps consume no noise but the
/// Wiener clock still advances over them.
RunSummary integrate(SchemeId scheme, const MeshController& controller, const CirParams& p,
                     const WienerGrid& grid, const RunOptions& opts = {},
                     const NodeVisitor& visit = {});

Trajectory run_trajectory(SchemeId scheme, const MeshController& controller, const CirParams& p,
                          const WienerGrid& grid, const RunOptions& opts = {});

}  // namespace cirlab
