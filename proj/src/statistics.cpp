#include "spinmarket/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spinmarket/errors.hpp"

namespace spinmarket {

namespace {

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double central_moment2(std::span<const double> x, double mean) {
    double acc = 0.0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(x.size());
}

}  // namespace

SummaryStats summary(std::span<const double> x) {
    if (x.size() < 2) throw DataError("summary needs at least 2 samples, got " + std::to_string(x.size()));
    SummaryStats s;
    s.n = x.size();
    s.mean = mean_of(x);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d2 = (v - s.mean) * (v - s.mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(s.n);
    m4 /= static_cast<double>(s.n);
    s.variance = m2;
    s.stdev = std::sqrt(m2);
    s.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : std::numeric_limits<double>::quiet_NaN();
    return s;
}

double kurtosis_standard_error(std::size_t n) {
    if (n < 4) return std::numeric_limits<double>::infinity();
    const auto k = static_cast<double>(n);
    // Standard error of skewness first, then of kurtosis (Cramer 1946).
    const double ses = std::sqrt(6.0 * k * (k - 1.0) / ((k - 2.0) * (k + 1.0) * (k + 3.0)));
    return 2.0 * ses * std::sqrt((k * k - 1.0) / ((k - 3.0) * (k + 5.0)));
}

std::uint64_t Histogram::in_range() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Histogram histogram(std::span<const double> x, const HistogramOptions& options) {
    if (x.empty()) throw DataError("histogram of an empty series");
    if (options.bins < 1) throw ConfigError("bins must be >= 1");

    Histogram h;
    h.standardized = options.standardize;
    std::vector<double> values(x.begin(), x.end());
    if (options.standardize) {
        if (x.size() < 2) throw DataError("standardization needs at least 2 samples");
        const SummaryStats s = summary(x);
        if (s.zero_variance()) throw DataError("cannot standardize a zero-variance series");
        h.mean_used = s.mean;
        h.stdev_used = s.stdev;
        for (double& v : values) v = (v - s.mean) / s.stdev;
    }

    double lo = 0.0;
    double hi = 0.0;
    if (options.range) {
        std::tie(lo, hi) = *options.range;
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw ConfigError("histogram range must satisfy lo < hi");
        }
    } else {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
    }

    const std::size_t bins = options.bins;
    const double width = (hi - lo) / static_cast<double>(bins);
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
    h.edges.back() = hi;
    h.counts.assign(bins, 0);
    h.n_total = values.size();

    for (double v : values) {
        if (v < lo) {
            ++h.underflow;
            continue;
        }
        if (v > hi) {
            ++h.overflow;
            continue;
        }
        auto b = static_cast<std::size_t>((v - lo) / width);
        b = std::min(b, bins - 1);
        // Floating division can land one bin off near an edge; settle it against the stored edges.
        if (v < h.edges[b]) --b;
        else if (b + 1 < bins && v >= h.edges[b + 1]) ++b;
        ++h.counts[b];
    }
    return h;
}

double standard_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

std::vector<double> gaussian_reference(std::span<const double> edges, std::uint64_t n_total) {
    std::vector<double> expected;
    if (edges.size() < 2) return expected;
    expected.reserve(edges.size() - 1);
    const auto n = static_cast<double>(n_total);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        // Upper-tail form keeps precision for bins far in the right tail.
        const double lo = edges[b];
        const double hi = edges[b + 1];
        const double mass = lo >= 0.0 ? standard_normal_cdf(-lo) - standard_normal_cdf(-hi)
                                      : standard_normal_cdf(hi) - standard_normal_cdf(lo);
        expected.push_back(n * mass);
    }
    return expected;
}

Series autocorrelation(std::span<const double> x, std::size_t max_lag) {
    if (max_lag < 1) throw ConfigError("max-lag must be >= 1");
    const std::size_t n = x.size();
    if (n <= max_lag + 1) {
        throw DataError("autocorrelation needs more than max_lag + 1 = " + std::to_string(max_lag + 1) +
                        " samples, got " + std::to_string(n));
    }
    const double mu = mean_of(x);
    const double var = central_moment2(x, mu);
    if (var == 0.0) throw DataError("autocorrelation of a zero-variance series");

    std::vector<double> centered(n);
    std::transform(x.begin(), x.end(), centered.begin(), [mu](double v) { return v - mu; });

    Series c{0, std::vector<double>(max_lag + 1)};
    c.values[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t t = lag; t < n; ++t) acc += centered[t] * centered[t - lag];
        c.values[lag] = acc / static_cast<double>(n - lag) / var;
    }
    return c;
}

Series abs_series(const Series& x) {
    Series out{x.t0, x.values};
    for (double& v : out.values) v = std::abs(v);
    return out;
}

std::string_view to_string(DecayModel model) {
    return model == DecayModel::power_law ? "power_law" : "exponential";
}

DecayFit fit_decay(const Series& c, DecayModel model, std::int64_t lag_min, std::int64_t lag_max) {
    const std::int64_t first = c.t0;
    const std::int64_t last = c.t0 + static_cast<std::int64_t>(c.size()) - 1;
    if (lag_min < first || lag_max > last || lag_max <= lag_min) {
        throw ConfigError("fit range [" + std::to_string(lag_min) + ", " + std::to_string(lag_max) +
                          "] must hold at least two lags inside [" + std::to_string(first) + ", " +
                          std::to_string(last) + "]");
    }
    if (model == DecayModel::power_law && lag_min < 1) {
        throw ConfigError("power-law fit needs lag_min >= 1");
    }

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::int64_t lag = lag_min; lag <= lag_max; ++lag) {
        const double v = c[static_cast<std::size_t>(lag - first)];
        if (!(v > 0.0)) {
            throw DataError("fit_decay: C(" + std::to_string(lag) + ") = " + std::to_string(v) +
                            " is not positive; log-domain fit undefined");
        }
        const auto tau = static_cast<double>(lag);
        xs.push_back(model == DecayModel::exponential ? tau : std::log(tau));
        ys.push_back(std::log(v));
    }

    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }

    DecayFit fit;
    fit.model = model;
    fit.lag_min = lag_min;
    fit.lag_max = lag_max;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace spinmarket
