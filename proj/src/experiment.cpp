#include "cirlab/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "cirlab/errors.hpp"
#include "cirlab/wiener.hpp"

namespace cirlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kExactReferenceTag = 0x5EFE7E2Cull;

enum class PathCode : int { Ok = 0, Domain = 1, StepLimit = 2 };

struct PathOutcome {
    double abs_err = 0.0;
    double sq_err = 0.0;
    std::size_t steps = 0;
    std::size_t soft_steps = 0;
    PathCode code = PathCode::Ok;
};

struct ActiveCell {
    std::size_t row = 0;
    SchemeId scheme = SchemeId::SplitLie;
    MeshController controller;
};

int resolve_threads(int threads) {
    return threads > 0 ? threads : omp_get_max_threads();
}

// Builds the grid and reference for one path and evaluates every active cell
// on it. Writes active.size() outcomes starting at `out`.
void evaluate_path(const CirParams& p, std::span<const ActiveCell> active, const GridConfig& g,
                   const ErrorOptions& o, std::size_t path, PathOutcome* out) {
    const std::uint64_t path_index = g.first_path + path;
    const WienerGrid grid = generate(g.seed, path_index, g.dt_ref, p.horizon);
    const bool over_nodes = o.functional == ErrorFunctional::MaxOverNodes;
    const MeshController ref_controller = MeshController::fixed(g.dt_ref);

    std::vector<double> ref_path;
    double ref_final = 0.0;
    if (o.reference == ReferenceKind::ExactSampler) {
        std::mt19937_64 rng(derive_seed(g.seed, path_index, kExactReferenceTag));
        ref_final = exact_conditional_sample(p, p.x0, p.horizon, rng);
    } else if (over_nodes) {
        ref_path.resize(grid.cells() + 1);
        const RunSummary s =
            integrate(SchemeId::MilsteinTrunc, ref_controller, p, grid, {},
                      [&](std::size_t cell, double x, StepKind) { ref_path[cell] = x; });
        ref_final = s.x_final;
    } else {
        ref_final = integrate(SchemeId::MilsteinTrunc, ref_controller, p, grid).x_final;
    }

    const RunOptions run_opts{o.max_steps};
    for (std::size_t c = 0; c < active.size(); ++c) {
        PathOutcome& res = out[c];
        try {
            double err = 0.0;
            RunSummary s;
            if (over_nodes) {
                s = integrate(active[c].scheme, active[c].controller, p, grid, run_opts,
                              [&](std::size_t cell, double x, StepKind) {
                                  err = std::max(err, std::abs(x - ref_path[cell]));
                              });
            } else {
                s = integrate(active[c].scheme, active[c].controller, p, grid, run_opts);
                err = std::abs(s.x_final - ref_final);
            }
            res.abs_err = err;
            res.sq_err = err * err;
            res.steps = s.steps;
            res.soft_steps = s.soft_zero_steps;
        } catch (const StepLimitError&) {
            res.code = PathCode::StepLimit;
        } catch (const DomainError&) {
            res.code = PathCode::Domain;
        }
    }
}

double sample_sd(std::span<const double> values, double mean) {
    if (values.size() < 2) return kNaN;
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        dev[i] = (values[i] - mean) * (values[i] - mean);
    }
    return std::sqrt(pairwise_sum(dev) / static_cast<double>(values.size() - 1));
}

ErrorRow reduce_cell(std::span<const PathOutcome> outcomes, std::size_t stride, std::size_t c,
                     std::size_t num_paths, std::size_t num_batches, double horizon) {
    ErrorRow row;
    row.num_paths = num_paths;
    for (std::size_t m = 0; m < num_paths; ++m) {
        const PathCode code = outcomes[m * stride + c].code;
        if (code != PathCode::Ok) {
            row.status = code == PathCode::StepLimit ? status::kStepLimit : status::kDomainError;
            row.l1 = row.l1_stderr = row.l2 = row.l2_stderr = kNaN;
            row.avg_dt = row.soft_zero_fraction = kNaN;
            return row;
        }
    }

    std::vector<double> abs_err(num_paths), sq_err(num_paths);
    std::size_t steps = 0, soft = 0;
    for (std::size_t m = 0; m < num_paths; ++m) {
        const PathOutcome& o = outcomes[m * stride + c];
        abs_err[m] = o.abs_err;
        sq_err[m] = o.sq_err;
        steps += o.steps;
        soft += o.soft_steps;
    }

    const BatchEstimate l1 = batch_means(abs_err, num_batches);
    row.l1 = l1.mean;
    row.l1_stderr = l1.std_error;

    row.l2 = std::sqrt(pairwise_sum(sq_err) / static_cast<double>(num_paths));
    const std::size_t per_batch = num_paths / num_batches;
    std::vector<double> batch_l2(num_batches);
    for (std::size_t b = 0; b < num_batches; ++b) {
        const std::span<const double> chunk(sq_err.data() + b * per_batch, per_batch);
        batch_l2[b] = std::sqrt(pairwise_sum(chunk) / static_cast<double>(per_batch));
    }
    const double l2_batch_mean = pairwise_sum(batch_l2) / static_cast<double>(num_batches);
    row.l2_stderr = sample_sd(batch_l2, l2_batch_mean) / std::sqrt(static_cast<double>(num_batches));

    row.avg_dt = static_cast<double>(num_paths) * horizon / static_cast<double>(steps);
    row.soft_zero_fraction = static_cast<double>(soft) / static_cast<double>(steps);
    if (row.soft_zero_fraction > 0.9) row.status = status::kSoftZeroDominated;
    return row;
}

void check_grid_config(const GridConfig& g) {
    if (g.num_paths == 0) throw std::invalid_argument("num_paths must be positive");
    if (g.num_batches == 0) throw std::invalid_argument("num_batches must be positive");
    if (g.num_paths % g.num_batches != 0) {
        throw std::invalid_argument("num_paths must be divisible by num_batches");
    }
}

std::string format_sigma(double sigma) {
    std::ostringstream os;
    os << sigma;
    return os.str();
}

}  // namespace

Candidate make_candidate(SchemeId scheme) {
    return make_candidate(scheme, default_controller(scheme, 1.0).kind);
}

Candidate make_candidate(SchemeId scheme, ControllerKind controller) {
    Candidate c;
    c.scheme = scheme;
    c.controller = controller;
    c.label = std::string(to_string(scheme));
    if (controller != default_controller(scheme, 1.0).kind) {
        c.label += "+" + std::string(to_string(controller));
    }
    return c;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

BatchEstimate batch_means(std::span<const double> values, std::size_t num_batches) {
    if (num_batches == 0 || values.empty() || values.size() % num_batches != 0) {
        throw std::invalid_argument("batch_means: sample count must be a multiple of num_batches");
    }
    const std::size_t per_batch = values.size() / num_batches;
    std::vector<double> means(num_batches);
    for (std::size_t b = 0; b < num_batches; ++b) {
        means[b] = pairwise_sum(values.subspan(b * per_batch, per_batch)) /
                   static_cast<double>(per_batch);
    }
    BatchEstimate est;
    est.mean = pairwise_sum(values) / static_cast<double>(values.size());
    const double batch_mean = pairwise_sum(means) / static_cast<double>(num_batches);
    est.std_error = sample_sd(means, batch_mean) / std::sqrt(static_cast<double>(num_batches));
    return est;
}

std::vector<ErrorRow> strong_error_cells(const CirParams& p, std::span<const CellSpec> cells,
                                         const GridConfig& grid, const ErrorOptions& opts) {
    p.validate();
    check_grid_config(grid);
    if (opts.reference == ReferenceKind::ExactSampler &&
        opts.functional == ErrorFunctional::MaxOverNodes) {
        throw std::invalid_argument("the exact-sampler reference supports terminal errors only");
    }
    cell_count(p.horizon, grid.dt_ref);

    std::vector<ErrorRow> rows(cells.size());
    std::vector<ActiveCell> active;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CellSpec& cell = cells[i];
        rows[i].scheme = cell.candidate.label;
        rows[i].sigma = p.sigma;
        rows[i].dt_max = cell.dt_max;
        rows[i].num_paths = grid.num_paths;
        MeshController controller{cell.candidate.controller, cell.dt_max, opts.rho};
        try {
            check_admissible(cell.candidate.scheme, controller, p);
            active.push_back({i, cell.candidate.scheme, controller});
        } catch (const AdmissibilityError&) {
            rows[i].status = status::kInadmissible;
            rows[i].l1 = rows[i].l1_stderr = rows[i].l2 = rows[i].l2_stderr = kNaN;
            rows[i].avg_dt = rows[i].soft_zero_fraction = kNaN;
        }
    }
    if (active.empty()) return rows;

    const std::size_t stride = active.size();
    const std::size_t num_paths = grid.num_paths;
    std::vector<PathOutcome> outcomes(num_paths * stride);

    if (opts.execution == Execution::Serial) {
        for (std::size_t m = 0; m < num_paths; ++m) {
            evaluate_path(p, active, grid, opts, m, outcomes.data() + m * stride);
        }
    } else {
        const auto n = static_cast<std::ptrdiff_t>(num_paths);
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(opts.threads))
        for (std::ptrdiff_t m = 0; m < n; ++m) {
            const auto path = static_cast<std::size_t>(m);
            evaluate_path(p, active, grid, opts, path, outcomes.data() + path * stride);
        }
    }

    for (std::size_t c = 0; c < active.size(); ++c) {
        ErrorRow reduced =
            reduce_cell(outcomes, stride, c, num_paths, grid.num_batches, p.horizon);
        ErrorRow& row = rows[active[c].row];
        reduced.scheme = std::move(row.scheme);
        reduced.sigma = row.sigma;
        reduced.dt_max = row.dt_max;
        row = std::move(reduced);
    }
    return rows;
}

ErrorRow strong_error(SchemeId scheme, const MeshController& controller, const CirParams& p,
                      const GridConfig& grid, const ErrorOptions& opts) {
    ErrorOptions o = opts;
    o.rho = controller.rho;
    const CellSpec cell{make_candidate(scheme, controller.kind), controller.dt_max};
    return strong_error_cells(p, std::span(&cell, 1), grid, o).front();
}

RateFit fit_rate(std::span<const RatePoint> points) {
    std::vector<RatePoint> sorted(points.begin(), points.end());
    for (const RatePoint& pt : sorted) {
        if (!(pt.error > 0.0) || !std::isfinite(pt.error)) {
            throw std::invalid_argument("fit_rate: errors must be positive and finite");
        }
        if (!(pt.dt > 0.0)) throw std::invalid_argument("fit_rate: dt must be positive");
    }
    std::sort(sorted.begin(), sorted.end(), [](const RatePoint& a, const RatePoint& b) {
        return a.dt < b.dt || (a.dt == b.dt && a.error < b.error);
    });
    std::set<double> distinct;
    for (const RatePoint& pt : sorted) distinct.insert(pt.dt);
    if (distinct.size() < 2) throw std::invalid_argument("fit_rate: need two distinct dt values");

    const std::size_t n = sorted.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = std::log10(sorted[i].dt);
        ys[i] = std::log10(sorted[i].error);
    }
    const double mx = pairwise_sum(xs) / static_cast<double>(n);
    const double my = pairwise_sum(ys) / static_cast<double>(n);
    std::vector<double> sxx(n), sxy(n);
    for (std::size_t i = 0; i < n; ++i) {
        sxx[i] = (xs[i] - mx) * (xs[i] - mx);
        sxy[i] = (xs[i] - mx) * (ys[i] - my);
    }
    const double s_xx = pairwise_sum(sxx);

    RateFit fit;
    fit.points = n;
    fit.slope = pairwise_sum(sxy) / s_xx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        std::vector<double> resid(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            resid[i] = r * r;
        }
        fit.slope_stderr = std::sqrt(pairwise_sum(resid) / static_cast<double>(n - 2) / s_xx);
    } else {
        fit.slope_stderr = kNaN;
    }
    return fit;
}

MomentResult moment_check(SchemeId scheme, const MeshController& controller, const CirParams& p,
                          const GridConfig& grid, const ErrorOptions& opts) {
    check_admissible(scheme, controller, p);
    switch (scheme) {
        case SchemeId::SplitLie:
        case SchemeId::SplitStrang:
        case SchemeId::SplitSoftZero:
        case SchemeId::ExactSampler:
            break;
        default:
            throw std::invalid_argument("moment_check applies to the splitting family");
    }
    check_grid_config(grid);

    const std::size_t num_paths = grid.num_paths;
    std::vector<double> finals(num_paths);
    std::vector<int> failed(num_paths, 0);
    const auto run_one = [&](std::size_t m) {
        const WienerGrid g = generate(grid.seed, grid.first_path + m, grid.dt_ref, p.horizon);
        try {
            finals[m] = integrate(scheme, controller, p, g, {opts.max_steps}).x_final;
        } catch (const DomainError&) {
            failed[m] = 1;
        }
    };
    if (opts.execution == Execution::Serial) {
        for (std::size_t m = 0; m < num_paths; ++m) run_one(m);
    } else {
        const auto n = static_cast<std::ptrdiff_t>(num_paths);
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(opts.threads))
        for (std::ptrdiff_t m = 0; m < n; ++m) run_one(static_cast<std::size_t>(m));
    }
    for (std::size_t m = 0; m < num_paths; ++m) {
        if (failed[m]) {
            throw DomainError("moment_check: path " + std::to_string(m) + " left the domain");
        }
    }

    MomentResult r;
    r.num_paths = num_paths;
    r.mean = pairwise_sum(finals) / static_cast<double>(num_paths);
    r.std_error = sample_sd(finals, r.mean) / std::sqrt(static_cast<double>(num_paths));
    r.bound = p.x0 + p.kappa * p.theta * p.horizon;
    r.pass = r.mean <= r.bound + 3.0 * r.std_error;
    return r;
}

// ---------------------------------------------------------------------------

std::vector<double> preset_ladder(std::string_view preset) {
    if (preset == "desk") return {0.1, 0.01, 0.005, 0.001, 0.0005};
    if (preset == "paper") return {0.1, 0.01, 0.005, 0.001, 0.0005, 0.0001};
    throw std::invalid_argument("unknown preset: " + std::string(preset));
}

double preset_dt_ref(std::string_view preset) {
    if (preset == "desk") return 1e-4;
    if (preset == "paper") return 1e-5;
    throw std::invalid_argument("unknown preset: " + std::string(preset));
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> warnings;
    CirParams p = params;
    p.validate();
    for (double s : sigma_list) {
        p.sigma = s;
        p.validate();
    }
    cell_count(params.horizon, dt_ref);
    check_grid_config({dt_ref, seed, num_paths, num_batches, 0});
    if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
    if (candidates.empty()) throw std::invalid_argument("no schemes configured");
    std::set<std::string> labels;
    for (const Candidate& c : candidates) {
        if (!labels.insert(c.label).second) {
            throw std::invalid_argument("duplicate scheme label: " + c.label);
        }
    }
    if (dt_ladder.empty()) throw std::invalid_argument("dt_ladder is empty");

    const double kappa = params.kappa;
    const double theory_cap = std::min(1.0, 1.0 / kappa);
    const double strict_cap =
        std::min({1.0, 1.0 / (2.0 * kappa),
                  1.0 / (4.0 * kappa * std::abs(1.0 - kappa) + params.theta * kappa * kappa)});
    for (double dt : dt_ladder) {
        if (!(dt > 0.0)) throw std::invalid_argument("dt_ladder entries must be positive");
        const double ratio = dt / dt_ref;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || ratio < 0.5) {
            throw std::invalid_argument("dt_ladder entry is not a multiple of dt_ref");
        }
        if (dt > theory_cap * (1.0 + 1e-12)) {
            throw std::invalid_argument("dt_ladder entry exceeds min{1, 1/kappa}");
        }
        if (dt > params.horizon) throw std::invalid_argument("dt_ladder entry exceeds horizon");
        if (!(dt < strict_cap)) {
            std::ostringstream os;
            os << "dt_max=" << dt << " violates the X-space convergence step bound " << strict_cap;
            warnings.push_back(os.str());
        }
    }
    if (reference == ReferenceKind::ExactSampler && functional == ErrorFunctional::MaxOverNodes) {
        throw std::invalid_argument("the exact-sampler reference supports terminal errors only");
    }
    if (average_step_mode &&
        std::none_of(candidates.begin(), candidates.end(),
                     [](const Candidate& c) { return c.controller != ControllerKind::Fixed; })) {
        throw std::invalid_argument("average_step_mode needs an adaptive scheme");
    }
    return warnings;
}

std::vector<RateRow> fit_rates(std::span<const ErrorRow> rows,
                               std::vector<std::string>* annotations) {
    std::vector<std::pair<std::string, double>> groups;
    for (const ErrorRow& r : rows) {
        const auto key = std::make_pair(r.scheme, r.sigma);
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    const auto note = [&](std::string msg) {
        if (annotations) annotations->push_back(std::move(msg));
    };

    std::vector<RateRow> out;
    for (const auto& [scheme, sigma] : groups) {
        for (const char* norm : {"l1", "l2"}) {
            std::vector<RatePoint> pts;
            bool flagged = false;
            for (const ErrorRow& r : rows) {
                if (r.scheme != scheme || r.sigma != sigma || !r.usable()) continue;
                const double e = std::string_view(norm) == "l1" ? r.l1 : r.l2;
                if (!(e > 0.0)) continue;
                pts.push_back({r.dt_max, e});
                flagged = flagged || r.status == status::kSoftZeroDominated;
            }
            const std::string tag = scheme + " sigma=" + format_sigma(sigma) + " " + norm;
            try {
                RateRow row{scheme, sigma, norm, fit_rate(pts)};
                if (flagged) note(tag + ": fit includes soft-zero dominated rows");
                out.push_back(std::move(row));
            } catch (const std::invalid_argument&) {
                note(tag + ": not enough usable rows to fit a rate");
            }
        }
    }
    return out;
}

CampaignResult run_campaign(const ExperimentConfig& cfg, Execution execution, int threads) {
    CampaignResult result;
    result.warnings = cfg.validate();

    const std::vector<double> sigmas =
        cfg.sigma_list.empty() ? std::vector<double>{cfg.params.sigma} : cfg.sigma_list;
    const GridConfig grid{cfg.dt_ref, cfg.seed, cfg.num_paths, cfg.num_batches, 0};
    ErrorOptions opts;
    opts.rho = cfg.rho;
    opts.functional = cfg.functional;
    opts.reference = cfg.reference;
    opts.max_steps = cfg.max_steps;
    opts.execution = execution;
    opts.threads = threads;

    for (double sigma : sigmas) {
        CirParams p = cfg.params;
        p.sigma = sigma;

        if (!cfg.average_step_mode) {
            std::vector<CellSpec> cells;
            for (const Candidate& c : cfg.candidates) {
                for (double dt : cfg.dt_ladder) cells.push_back({c, dt});
            }
            auto rows = strong_error_cells(p, cells, grid, opts);
            result.rows.insert(result.rows.end(), rows.begin(), rows.end());
            continue;
        }

        // Adaptive candidates first; fixed-step candidates then run at the
        // first adaptive candidate's floor-snapped mean step.
        std::vector<CellSpec> adaptive_cells;
        for (const Candidate& c : cfg.candidates) {
            if (c.controller == ControllerKind::Fixed) continue;
            for (double dt : cfg.dt_ladder) adaptive_cells.push_back({c, dt});
        }
        const auto adaptive_rows = strong_error_cells(p, adaptive_cells, grid, opts);
        const std::size_t cells_total = cell_count(p.horizon, cfg.dt_ref);

        std::vector<CellSpec> fixed_cells;
        std::vector<double> ladder_dt;
        for (const Candidate& c : cfg.candidates) {
            if (c.controller != ControllerKind::Fixed) continue;
            for (std::size_t k = 0; k < cfg.dt_ladder.size(); ++k) {
                const ErrorRow& source = adaptive_rows[k];
                double dt = cfg.dt_ladder[k];
                if (source.usable()) {
                    const std::size_t snapped = std::max<std::size_t>(
                        1, snap_to_grid(source.avg_dt, cfg.dt_ref, SnapMode::Floor, cells_total));
                    dt = static_cast<double>(snapped) * cfg.dt_ref;
                } else {
                    result.annotations.push_back(
                        "average-step source unusable at dt_max=" + format_sigma(dt) +
                        "; fixed schemes use dt_max");
                }
                fixed_cells.push_back({c, dt});
                ladder_dt.push_back(cfg.dt_ladder[k]);
            }
        }
        auto fixed_rows = strong_error_cells(p, fixed_cells, grid, opts);
        for (std::size_t i = 0; i < fixed_rows.size(); ++i) fixed_rows[i].dt_max = ladder_dt[i];

        std::size_t ai = 0, fi = 0;
        for (const Candidate& c : cfg.candidates) {
            auto& src = c.controller == ControllerKind::Fixed ? fixed_rows : adaptive_rows;
            std::size_t& idx = c.controller == ControllerKind::Fixed ? fi : ai;
            for (std::size_t k = 0; k < cfg.dt_ladder.size(); ++k) result.rows.push_back(src[idx++]);
        }
    }

    result.rates = fit_rates(result.rows, &result.annotations);
    return result;
}

}  // namespace cirlab
