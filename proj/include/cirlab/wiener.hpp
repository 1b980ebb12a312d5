#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cirlab {

/// Philox4x32-10 counter-based generator.
/// Output is a pure function of (key, counter).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key);
};

/// Maps 64 random bits to a double strictly inside (0, 1).
double to_open_unit(std::uint64_t bits);

/// Deterministic 64-bit seed derived from (seed, stream, tag); used to key
/// auxiliary std:: engines off the same reproducibility token.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag);

/// A fine-grid Brownian path on [0, cells * dt_ref]. Immutable once built.
class WienerGrid {
public:
    WienerGrid(std::uint64_t seed, std::uint64_t path_index, double dt_ref, double horizon,
               std::vector<double> increments);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_index_; }
    double dt_ref() const { return dt_ref_; }
    std::size_t cells() const { return increments_.size(); }
    double horizon() const { return horizon_; }
    /// k * dt_ref, except that the last node reports the horizon exactly.
    double time_at(std::size_t cell_index) const {
        return cell_index == cells() ? horizon_ : static_cast<double>(cell_index) * dt_ref_;
    }
    std::span<const double> increments() const { return increments_; }

    /// Compensated sum of the fine increments with indices in [i, j). Throws
    /// std::out_of_range unless i <= j <= cells().
    double increment(std::size_t i, std::size_t j) const;

    /// W(t_k) for k = 0..cells(), built by a compensated running sum.
    std::vector<double> cumulative() const;

private:
    std::uint64_t seed_;
    std::uint64_t path_index_;
    double dt_ref_;
    double horizon_;
    std::vector<double> increments_;
};

/// Builds the path keyed by (seed, path_index). Each pair of cells shares one
/// Philox block, turned into two Normal(0, dt_ref) draws by Box-Muller, so the
/// value of cell k never depends on how many paths or threads are in use.
/// Requires dt_ref > 0 and horizon an integer multiple of dt_ref (>= 1 cell).
WienerGrid generate(std::uint64_t seed, std::uint64_t path_index, double dt_ref, double horizon);

/// Number of whole fine cells in `horizon`; throws std::invalid_argument
/// unless horizon / dt_ref is an integer to within 1e-9.
std::size_t cell_count(double horizon, double dt_ref);

enum class SnapMode { Floor, Ceil };

/// floor/ceil(t / dt_ref) with a 1e-9 * dt_ref tolerance, capped at max_cells.
std::size_t snap_to_grid(double t, double dt_ref, SnapMode mode, std::size_t max_cells);

}  // namespace cirlab
