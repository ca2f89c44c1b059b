#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "spinmarket/core.hpp"

namespace spinmarket {

/// Population moments (divisor n).
struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double stdev = 0.0;
    /// m4 / m2^2 - 3; NaN when the variance is zero.
    double excess_kurtosis = 0.0;

    bool zero_variance() const { return variance == 0.0; }
};

/// Throws DataError for fewer than two samples.
SummaryStats summary(std::span<const double> x);
inline SummaryStats summary(const Series& x) { return summary(x.span()); }

/// Standard error of the sample excess kurtosis of n i.i.d. Gaussian samples.
double kurtosis_standard_error(std::size_t n);

/// Equal-width bins over [edges.front(), edges.back()]. Bins are half-open
/// [lo, hi) except the last, which also includes its upper edge. Samples
/// outside the range count toward n_total and underflow/overflow only.
struct Histogram {
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_total = 0;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;
    bool standardized = false;
    double mean_used = 0.0;   // subtracted before binning (0 if not standardized)
    double stdev_used = 1.0;  // divided out before binning (1 if not standardized)

    std::size_t bins() const { return counts.size(); }
    std::uint64_t in_range() const;
};

struct HistogramOptions {
    std::size_t bins = 101;
    std::optional<std::pair<double, double>> range;
    bool standardize = false;
};

/// Throws DataError on empty input or on zero variance with standardize set;
/// ConfigError for zero bins or an empty/inverted range.
Histogram histogram(std::span<const double> x, const HistogramOptions& options);

/// Expected standard-normal counts per bin: n_total * (Phi(hi) - Phi(lo)).
std::vector<double> gaussian_reference(std::span<const double> edges, std::uint64_t n_total);

double standard_normal_cdf(double x);

/// C(tau) = <(x_t - mu)(x_{t-tau} - mu)> / var(x) for tau = 0..max_lag, where
/// mu and var are taken once over the whole series and the lagged product is
/// averaged over the n - tau available pairs. C(0) = 1. Output t0 is 0, so
/// element k is lag k.
/// Throws ConfigError for max_lag < 1, DataError when length <= max_lag + 1
/// or the series has zero variance.
Series autocorrelation(std::span<const double> x, std::size_t max_lag);
inline Series autocorrelation(const Series& x, std::size_t max_lag) { return autocorrelation(x.span(), max_lag); }

Series abs_series(const Series& x);

enum class DecayModel { exponential, power_law };

std::string_view to_string(DecayModel model);

/// Least-squares line through (tau, log C) for exponential decay or
/// (log tau, log C) for a power law.
struct DecayFit {
    DecayModel model = DecayModel::exponential;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::int64_t lag_min = 0;
    std::int64_t lag_max = 0;

    /// Decay rate of C ~ exp(-rate * tau); equals -slope. For a power law,
    /// slope itself is the exponent.
    double rate() const { return -slope; }
};

/// c is indexed by lag starting at c.t0. Throws ConfigError for a range outside
/// c or with fewer than two points (or lag_min < 1 for power_law), DataError if
/// any C in the range is not strictly positive.
DecayFit fit_decay(const Series& c, DecayModel model, std::int64_t lag_min, std::int64_t lag_max);

}  // namespace spinmarket
