#include "spinmarket/core.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>
#include <string>

#include "spinmarket/errors.hpp"

namespace spinmarket {

std::string_view to_string(ThresholdMode mode) {
    return mode == ThresholdMode::live ? "live" : "frozen";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
    if (text == "frozen") return ThresholdMode::frozen;
    if (text == "live") return ThresholdMode::live;
    throw ConfigError("threshold-mode must be 'frozen' or 'live', got '" + std::string(text) + "'");
}

void ModelParams::validate() const {
    if (!std::isfinite(coupling)) throw ConfigError("coupling must be finite");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("sigma must be a finite value >= 0, got " + std::to_string(sigma));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be a finite value >= 0, got " + std::to_string(lambda));
    }
    if (side < 2) throw ConfigError("lattice-size must be >= 2, got " + std::to_string(side));
    if (side > 46340) throw ConfigError("lattice-size must be <= 46340, got " + std::to_string(side));
    if (measurement_steps < 1) throw ConfigError("steps must be >= 1");
}

namespace {

void check_side(int side) {
    if (side < 1) throw std::invalid_argument("lattice side must be positive");
}

void check_index(const SpinLattice& lattice, std::size_t i) {
    if (i >= lattice.size()) {
        throw std::out_of_range("site index " + std::to_string(i) + " outside lattice of " +
                                std::to_string(lattice.size()) + " sites");
    }
}

}  // namespace

SpinLattice::SpinLattice(int side, Spin fill) : side_(side) {
    check_side(side);
    const auto n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    cells_.assign(n, fill);
    spin_sum_ = static_cast<std::int64_t>(n) * value(fill);
}

SpinLattice::SpinLattice(int side, std::vector<Spin> cells) : side_(side), cells_(std::move(cells)) {
    check_side(side);
    if (cells_.size() != static_cast<std::size_t>(side) * static_cast<std::size_t>(side)) {
        throw std::invalid_argument("cell count does not match side*side");
    }
    for (Spin s : cells_) {
        if (value(s) < -1 || value(s) > 1) throw std::invalid_argument("spin value outside {-1,0,+1}");
    }
    spin_sum_ = recompute_spin_sum();
}

SpinLattice SpinLattice::random(int side, Rng& rng) {
    check_side(side);
    std::vector<Spin> cells(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
    for (auto& c : cells) c = static_cast<Spin>(static_cast<int>(rng.uniform_index(3)) - 1);
    return SpinLattice(side, std::move(cells));
}

std::size_t SpinLattice::index(int row, int col) const {
    if (row < 0 || row >= side_ || col < 0 || col >= side_) {
        throw std::out_of_range("lattice coordinate out of range");
    }
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(side_) + static_cast<std::size_t>(col);
}

Spin SpinLattice::at(std::size_t i) const {
    check_index(*this, i);
    return cells_[i];
}

void SpinLattice::set(std::size_t i, Spin s) {
    check_index(*this, i);
    assign(i, s);
}

std::int64_t SpinLattice::recompute_spin_sum() const {
    return std::accumulate(cells_.begin(), cells_.end(), std::int64_t{0},
                           [](std::int64_t acc, Spin s) { return acc + value(s); });
}

std::size_t SpinLattice::count(Spin s) const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s));
}

double local_field(const SpinLattice& lattice, std::size_t i, double coupling) {
    check_index(lattice, i);
    return coupling * lattice.neighbor_sum(i);
}

Spin update_site(SpinLattice& lattice, std::size_t i, const ModelParams& params, double threshold_q,
                 double noise) {
    const Spin s = threshold_sign(local_field(lattice, i, params.coupling) + params.sigma * noise, threshold_q);
    lattice.assign(i, s);
    return s;
}

double magnetization(const SpinLattice& lattice) {
    assert(lattice.spin_sum() == lattice.recompute_spin_sum());
    return static_cast<double>(lattice.spin_sum()) / static_cast<double>(lattice.size());
}

namespace {

ModelParams validated(const ModelParams& params) {
    params.validate();
    return params;
}

}  // namespace

Simulation::Simulation(const ModelParams& params)
    : params_(validated(params)), rng_(params.seed), lattice_(SpinLattice::random(params.side, rng_)) {}

Simulation::Simulation(const ModelParams& params, SpinLattice initial)
    : params_(validated(params)), rng_(params.seed), lattice_(std::move(initial)) {
    if (lattice_.side() != params_.side) {
        throw ConfigError("initial lattice side " + std::to_string(lattice_.side()) +
                          " does not match lattice-size " + std::to_string(params_.side));
    }
}

void Simulation::thermalize() {
    while (steps_done_ < params_.thermalization_steps) advance();
}

Series run_simulation(const ModelParams& params) {
    Simulation sim(params);
    sim.thermalize();
    return sim.measure();
}

Series run_simulation(const ModelParams& params, SpinLattice initial) {
    Simulation sim(params, std::move(initial));
    sim.thermalize();
    return sim.measure();
}

}  // namespace spinmarket
