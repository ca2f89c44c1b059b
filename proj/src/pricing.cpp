#include "spinmarket/pricing.hpp"

#include <cmath>
#include <string>

#include "spinmarket/errors.hpp"

namespace spinmarket {

void PriceParams::validate() const {
    if (!(p0 > 0.0) || !std::isfinite(p0)) throw ConfigError("p0 must be a finite value > 0");
}

Series price_series(const Series& magnetization, const PriceParams& price) {
    price.validate();
    if (magnetization.empty()) throw DataError("price_series: empty magnetization series");
    Series out{magnetization.t0, {}};
    out.values.reserve(magnetization.size());
    for (double m : magnetization.values) out.values.push_back(price.p0 * std::exp(m));
    return out;
}

Series log_returns(const Series& magnetization, std::int64_t tau) {
    if (tau < 1) throw ConfigError("tau must be >= 1, got " + std::to_string(tau));
    const auto lag = static_cast<std::size_t>(tau);
    if (lag >= magnetization.size()) {
        throw DataError("tau " + std::to_string(tau) + " must be smaller than the series length " +
                        std::to_string(magnetization.size()));
    }
    Series out{magnetization.t0 + tau, {}};
    out.values.reserve(magnetization.size() - lag);
    for (std::size_t t = lag; t < magnetization.size(); ++t) {
        out.values.push_back(magnetization[t] - magnetization[t - lag]);
    }
    return out;
}

}  // namespace spinmarket
