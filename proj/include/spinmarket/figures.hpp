#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spinmarket/csv.hpp"
#include "spinmarket/svg.hpp"

namespace spinmarket::figures {

enum class AcfAxes { linear, semilog, loglog };
enum class AcfColumn { c_r, c_abs_r, both };

AcfAxes parse_acf_axes(std::string_view text);
AcfColumn parse_acf_column(std::string_view text);

/// One panel per series: value against t.
svg::Figure returns_figure(const std::vector<std::pair<std::string, Series>>& series);

/// Counts against bin centre on a log axis, each curve followed by its dashed
/// Gaussian reference. With shift set, curve k (and its reference) is
/// multiplied by 10^k; the factor is a plotting transform only.
/// Throws DataError if a histogram has no rows or only zero counts.
svg::Figure histogram_figure(const std::vector<std::pair<std::string, csv::HistogramTable>>& histograms,
                             bool shift);

/// One panel per requested axes style. Lags start at 1 on log-x panels.
svg::Figure autocorrelation_figure(const csv::AutocorrelationTable& table, AcfColumn column,
                                   const std::vector<AcfAxes>& axes);

}  // namespace spinmarket::figures
