#pragma once

#include "spinmarket/core.hpp"

namespace spinmarket {

/// Constant fundamental price P0 (> 0).
struct PriceParams {
    double p0 = 1.0;

    void validate() const;
};

/// P(t) = p0 * exp(M(t)). Throws DataError on empty input.
Series price_series(const Series& magnetization, const PriceParams& price = {});

/// r_tau(t) = log(P(t) / P(t - tau)) = M(t) - M(t - tau); p0 cancels, so the
/// exponentials are never formed. Output starts at t0 + tau.
/// Throws ConfigError for tau < 1 and DataError when tau >= length.
Series log_returns(const Series& magnetization, std::int64_t tau);

}  // namespace spinmarket
