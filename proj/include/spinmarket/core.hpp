#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "spinmarket/rng.hpp"

namespace spinmarket {

/// Agent decision: sell, stay inactive, or buy.
enum class Spin : std::int8_t { sell = -1, inactive = 0, buy = 1 };

constexpr int value(Spin s) { return static_cast<int>(s); }
constexpr Spin operator-(Spin s) { return static_cast<Spin>(-value(s)); }

/// When the activity threshold lambda*|M| is evaluated during a step.
///   frozen: once, from the magnetization at the start of the step.
///   live:   before every single-site update, from the current spin sum.
enum class ThresholdMode { frozen, live };

std::string_view to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

/// Full definition of one simulation run.
struct ModelParams {
    double coupling = 1.0;  // J
    double sigma = 1.0;
    double lambda = 0.0;
    int side = 32;
    std::uint64_t thermalization_steps = 5000;
    std::uint64_t measurement_steps = 1;
    std::uint64_t seed = 0;
    ThresholdMode threshold_mode = ThresholdMode::frozen;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Ordered real samples; t0 is the time index of values[0].
struct Series {
    std::int64_t t0 = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> span() const { return values; }
};

/// L x L periodic lattice of spins with an incrementally maintained spin sum.
class SpinLattice {
public:
    explicit SpinLattice(int side, Spin fill = Spin::inactive);
    SpinLattice(int side, std::vector<Spin> cells);

    /// Each cell drawn uniformly from {-1, 0, +1} via rng.uniform_index(3), row-major.
    static SpinLattice random(int side, Rng& rng);

    int side() const { return side_; }
    std::size_t size() const { return cells_.size(); }
    std::size_t index(int row, int col) const;

    Spin at(std::size_t i) const;
    Spin at(int row, int col) const { return at(index(row, col)); }
    void set(std::size_t i, Spin s);

    std::span<const Spin> cells() const { return cells_; }
    std::int64_t spin_sum() const { return spin_sum_; }
    std::int64_t recompute_spin_sum() const;
    std::size_t count(Spin s) const;

    /// Sum of the four periodic nearest-neighbor spins of site i (unchecked).
    int neighbor_sum(std::size_t i) const {
        const auto n = cells_.size();
        const auto l = static_cast<std::size_t>(side_);
        const std::size_t col = i % l;
        const std::size_t up = i >= l ? i - l : i + n - l;
        const std::size_t down = i + l < n ? i + l : i + l - n;
        const std::size_t left = col != 0 ? i - 1 : i + l - 1;
        const std::size_t right = col + 1 != l ? i + 1 : i + 1 - l;
        return value(cells_[up]) + value(cells_[down]) + value(cells_[left]) + value(cells_[right]);
    }

    /// Unchecked write used by the update kernel.
    void assign(std::size_t i, Spin s) {
        spin_sum_ += value(s) - value(cells_[i]);
        cells_[i] = s;
    }

    friend bool operator==(const SpinLattice&, const SpinLattice&) = default;

private:
    int side_;
    std::vector<Spin> cells_;
    std::int64_t spin_sum_ = 0;
};

/// Threshold signum: +1 above q, -1 below -q, 0 inside the closed band [-q, q].
constexpr Spin threshold_sign(double x, double q) {
    if (x > q) return Spin::buy;
    if (x < -q) return Spin::sell;
    return Spin::inactive;
}

/// J times the sum of the four nearest-neighbor spins of site i.
/// Throws std::out_of_range for i >= N.
double local_field(const SpinLattice& lattice, std::size_t i, double coupling);

/// Applies the agent update rule to site i with an externally supplied noise
/// draw and threshold, writes the new spin, and returns it.
/// Throws std::out_of_range for i >= N.
Spin update_site(SpinLattice& lattice, std::size_t i, const ModelParams& params, double threshold_q,
                 double noise);

/// spin_sum / N. Debug builds verify the cached sum against a full recount.
double magnetization(const SpinLattice& lattice);

/// lambda * |M| for the lattice's current state.
inline double activity_threshold(const SpinLattice& lattice, double lambda) {
    return lambda * std::abs(static_cast<double>(lattice.spin_sum())) / static_cast<double>(lattice.size());
}

/// Anything that can feed the update kernel: a site index and a noise value per update.
template <typename S>
concept UpdateSource = requires(S& s, std::uint64_t n) {
    { s.uniform_index(n) } -> std::convertible_to<std::uint64_t>;
    { s.standard_normal() } -> std::convertible_to<double>;
};

/// One time step: N single-site updates, each drawing a site (uniform, with
/// replacement) and then a noise value, in that order. Returns M after the step.
template <UpdateSource Source>
double step(SpinLattice& lattice, const ModelParams& params, Source& source) {
    const std::size_t n = lattice.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double coupling = params.coupling;
    const double sigma = params.sigma;
    const bool live = params.threshold_mode == ThresholdMode::live;
    double q = activity_threshold(lattice, params.lambda);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(source.uniform_index(n));
        const double noise = source.standard_normal();
        if (live) {
            q = params.lambda * std::abs(static_cast<double>(lattice.spin_sum())) * inv_n;
        }
        const double x = coupling * lattice.neighbor_sum(i) + sigma * noise;
        lattice.assign(i, threshold_sign(x, q));
    }
    return magnetization(lattice);
}

/// Stateful driver for one run: owns the lattice and the random stream.
class Simulation {
public:
    /// Validates params, seeds the stream, and draws a random initial lattice.
    explicit Simulation(const ModelParams& params);
    /// Starts from an explicit configuration; the stream is still seeded from params.seed.
    Simulation(const ModelParams& params, SpinLattice initial);

    const ModelParams& params() const { return params_; }
    const SpinLattice& lattice() const { return lattice_; }
    std::uint64_t steps_done() const { return steps_done_; }

    double advance() {
        ++steps_done_;
        return step(lattice_, params_, rng_);
    }

    void thermalize();

    /// Runs measurement_steps steps and records M once per step. Samples are
    /// indexed from t0 = thermalization_steps + 1.
    template <typename Observer>
    Series measure(Observer&& observe) {
        Series out;
        out.t0 = static_cast<std::int64_t>(steps_done_) + 1;
        out.values.reserve(params_.measurement_steps);
        for (std::uint64_t t = 0; t < params_.measurement_steps; ++t) {
            out.values.push_back(advance());
            observe(lattice_);
        }
        return out;
    }

    Series measure() {
        return measure([](const SpinLattice&) {});
    }

private:
    ModelParams params_;
    Rng rng_;
    SpinLattice lattice_;
    std::uint64_t steps_done_ = 0;
};

/// Thermalize, then record M(t) for measurement_steps steps.
Series run_simulation(const ModelParams& params);
/// Same, from an explicit initial configuration (test hook).
Series run_simulation(const ModelParams& params, SpinLattice initial);

}  // namespace spinmarket
