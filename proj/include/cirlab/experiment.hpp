#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cirlab/mesh.hpp"
#include "cirlab/model.hpp"
#include "cirlab/schemes.hpp"

namespace cirlab {

/// Which functional of the pathwise error is reported.
enum class ErrorFunctional {
    Terminal,      // |X_cand(T) - X_ref(T)|
    MaxOverNodes,  // max over the candidate's nodes of |X_cand(t_n) - X_ref(t_n)|
};

/// Reference used for the "true" solution.
enum class ReferenceKind {
    MilsteinFine,  // truncated Milstein at dt_ref on the same Wiener grid
    ExactSampler,  // exact transition draw at T; not pathwise, diagnostics only
};

/// Path-loop execution. Both produce bit-identical numbers; Serial is kept as
/// the reference implementation for tests and the benchmark.
enum class Execution { Serial, Parallel };

/// A scheme under test together with its step controller kind.
struct Candidate {
    std::string label;
    SchemeId scheme = SchemeId::SplitLie;
    ControllerKind controller = ControllerKind::Fixed;
};

Candidate make_candidate(SchemeId scheme);
Candidate make_candidate(SchemeId scheme, ControllerKind controller);

struct GridConfig {
    double dt_ref = 1e-4;
    std::uint64_t seed = 20210101;
    std::size_t num_paths = 1000;
    std::size_t num_batches = 20;
    std::size_t first_path = 0;
};

struct ErrorOptions {
    double rho = 2.0;
    ErrorFunctional functional = ErrorFunctional::Terminal;
    ReferenceKind reference = ReferenceKind::MilsteinFine;
    std::size_t max_steps = 0;
    Execution execution = Execution::Parallel;
    int threads = 0;  // 0: OpenMP default
};

/// One (candidate, dt_max) cell to evaluate at a fixed parameter set.
struct CellSpec {
    Candidate candidate;
    double dt_max = 0.0;
};

namespace status {
inline constexpr const char* kOk = "ok";
inline constexpr const char* kSoftZeroDominated = "flag_soft_zero";
inline constexpr const char* kInadmissible = "inadmissible";
inline constexpr const char* kDomainError = "domain_error";
inline constexpr const char* kStepLimit = "step_limit";
}  // namespace status

struct ErrorRow {
    std::string scheme;
    double sigma = 0.0;
    double dt_max = 0.0;
    double l1 = 0.0;
    double l1_stderr = 0.0;
    double l2 = 0.0;
    double l2_stderr = 0.0;
    double avg_dt = 0.0;
    double soft_zero_fraction = 0.0;
    std::size_t num_paths = 0;
    std::string status = status::kOk;

    bool usable() const { return status == status::kOk || status == status::kSoftZeroDominated; }
};

/// Evaluates every cell on the same M Wiener paths. For each path the fine
/// grid and the reference are built once and shared by all cells. Rows come
/// back in `cells` order; a cell whose scheme fails on any path is reported
/// with the status of the lowest-indexed failing path.
std::vector<ErrorRow> strong_error_cells(const CirParams& p, std::span<const CellSpec> cells,
                                         const GridConfig& grid, const ErrorOptions& opts = {});

ErrorRow strong_error(SchemeId scheme, const MeshController& controller, const CirParams& p,
                      const GridConfig& grid, const ErrorOptions& opts = {});

/// Batch-means estimate of a mean: values split into num_batches consecutive
/// batches; stderr = sd(batch means) / sqrt(num_batches).
struct BatchEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

BatchEstimate batch_means(std::span<const double> values, std::size_t num_batches);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

struct RatePoint {
    double dt = 0.0;
    double error = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;  // NaN with only two points
    std::size_t points = 0;
};

/// Least-squares line through (log10 dt, log10 error). Points are sorted
/// before fitting so input order never changes the result. Throws
/// std::invalid_argument on non-positive errors or fewer than two distinct dt.
RateFit fit_rate(std::span<const RatePoint> points);

struct MomentResult {
    double mean = 0.0;
    double std_error = 0.0;
    double bound = 0.0;  // X0 + kappa theta T
    bool pass = false;   // mean <= bound + 3 stderr
    std::size_t num_paths = 0;
};

/// Sample mean of X at T over grid.num_paths paths, checked against the
/// uniform first-moment bound of the splitting scheme.
MomentResult moment_check(SchemeId scheme, const MeshController& controller, const CirParams& p,
                          const GridConfig& grid, const ErrorOptions& opts = {});

// ---------------------------------------------------------------------------
// Campaigns

struct ExperimentConfig {
    CirParams params;
    std::vector<double> sigma_list;
    std::vector<Candidate> candidates;
    std::vector<double> dt_ladder;
    double dt_ref = 1e-4;
    std::size_t num_paths = 1000;
    std::size_t num_batches = 20;
    std::uint64_t seed = 20210101;
    double rho = 2.0;
    std::string output = "cirlab-out";
    ErrorFunctional functional = ErrorFunctional::Terminal;
    ReferenceKind reference = ReferenceKind::MilsteinFine;
    /// Fixed-step candidates run at the floor-snapped mean step of the first
    /// adaptive candidate instead of dt_max.
    bool average_step_mode = false;
    std::size_t max_steps = 0;

    /// Throws std::invalid_argument on hard violations; returns warnings.
    std::vector<std::string> validate() const;
};

/// Desk preset: dt_ref 1e-4 with ladder {0.1 .. 5e-4}. Paper preset:
/// dt_ref 1e-5 with ladder {0.1 .. 1e-4}.
std::vector<double> preset_ladder(std::string_view preset);
double preset_dt_ref(std::string_view preset);

struct RateRow {
    std::string scheme;
    double sigma = 0.0;
    std::string norm;  // "l1" or "l2"
    RateFit fit;
};

struct CampaignResult {
    std::vector<ErrorRow> rows;
    std::vector<RateRow> rates;
    std::vector<std::string> warnings;
    std::vector<std::string> annotations;
};

CampaignResult run_campaign(const ExperimentConfig& cfg, Execution execution = Execution::Parallel,
                            int threads = 0);

/// Rate rows for every (scheme, sigma, norm) group with at least two usable
/// rows. Groups that cannot be fitted are reported through `annotations`.
std::vector<RateRow> fit_rates(std::span<const ErrorRow> rows,
                               std::vector<std::string>* annotations = nullptr);

}  // namespace cirlab
