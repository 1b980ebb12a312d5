#include "cirlab/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cirlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline void neumaier_add(double& sum, double& carry, double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ splitmix64(~tag));
}

WienerGrid::WienerGrid(std::uint64_t seed, std::uint64_t path_index, double dt_ref,
                       double horizon, std::vector<double> increments)
    : seed_(seed),
      path_index_(path_index),
      dt_ref_(dt_ref),
      horizon_(horizon),
      increments_(std::move(increments)) {}

double WienerGrid::increment(std::size_t i, std::size_t j) const {
    if (i > j || j > increments_.size()) {
        throw std::out_of_range("WienerGrid::increment: bad range [" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
    }
    double sum = 0.0, carry = 0.0;
    for (std::size_t k = i; k < j; ++k) neumaier_add(sum, carry, increments_[k]);
    return sum + carry;
}

std::vector<double> WienerGrid::cumulative() const {
    std::vector<double> w(increments_.size() + 1, 0.0);
    double sum = 0.0, carry = 0.0;
    for (std::size_t k = 0; k < increments_.size(); ++k) {
        neumaier_add(sum, carry, increments_[k]);
        w[k + 1] = sum + carry;
    }
    return w;
}

std::size_t cell_count(double horizon, double dt_ref) {
    if (!(dt_ref > 0.0)) throw std::invalid_argument("dt_ref must be positive");
    if (!(horizon >= dt_ref)) throw std::invalid_argument("horizon must be at least dt_ref");
    const double ratio = horizon / dt_ref;
    const double whole = std::round(ratio);
    if (std::abs(ratio - whole) > 1e-9 * std::max(1.0, whole)) {
        throw std::invalid_argument("horizon must be an integer multiple of dt_ref");
    }
    return static_cast<std::size_t>(whole);
}

WienerGrid generate(std::uint64_t seed, std::uint64_t path_index, double dt_ref, double horizon) {
    const std::size_t cells = cell_count(horizon, dt_ref);
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
    const double scale = std::sqrt(dt_ref);

    std::vector<double> inc(cells);
    for (std::size_t block = 0; 2 * block < cells; ++block) {
        const Philox4x32::Counter ctr = {
            static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
            static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32)};
        const auto out = Philox4x32::generate(ctr, key);
        const double u1 = to_open_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
        const double u2 = to_open_unit((static_cast<std::uint64_t>(out[2]) << 32) | out[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        inc[2 * block] = scale * radius * std::cos(angle);
        if (2 * block + 1 < cells) inc[2 * block + 1] = scale * radius * std::sin(angle);
    }
    return WienerGrid(seed, path_index, dt_ref, horizon, std::move(inc));
}

std::size_t snap_to_grid(double t, double dt_ref, SnapMode mode, std::size_t max_cells) {
    if (t <= 0.0) return 0;
    const double ratio = t / dt_ref;
    constexpr double tol = 1e-9;
    double cells = 0.0;
    if (mode == SnapMode::Floor) {
        cells = std::floor(ratio + tol);
    } else {
        cells = std::ceil(ratio - tol);
    }
    if (cells >= static_cast<double>(max_cells)) return max_cells;
    return static_cast<std::size_t>(std::max(cells, 0.0));
}

}  // namespace cirlab
