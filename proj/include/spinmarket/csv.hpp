#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spinmarket/core.hpp"
#include "spinmarket/statistics.hpp"

namespace spinmarket::csv {

// Every file has one header row, comma separators, '\n' line ends, and
// numbers in shortest round-trip decimal form (std::to_chars), so reading a
// written value gives back the identical double.

std::string format_double(double v);
double parse_double(std::string_view text);

/// Header plus numeric rows.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
};

/// Throws DataError on I/O failure, header mismatch (if expected is non-empty),
/// ragged rows, or unparsable fields.
Table read_table(const std::filesystem::path& path, const std::vector<std::string>& expected = {});
void write_table(const std::filesystem::path& path, const Table& table);

/// Columns `t,value`.
void write_series(const std::filesystem::path& path, const Series& series);
Series read_series(const std::filesystem::path& path);

/// Columns `bin_lo,bin_hi,count,gaussian_expected`.
void write_histogram(const std::filesystem::path& path, const Histogram& h);

struct HistogramTable {
    std::vector<double> bin_lo;
    std::vector<double> bin_hi;
    std::vector<double> count;
    std::vector<double> gaussian_expected;
};
HistogramTable read_histogram(const std::filesystem::path& path);

/// Columns `lag,c_r,c_abs_r`; both series must have equal length and t0 = 0.
void write_autocorrelation(const std::filesystem::path& path, const Series& c_r, const Series& c_abs_r);

struct AutocorrelationTable {
    Series c_r;
    Series c_abs_r;
};
AutocorrelationTable read_autocorrelation(const std::filesystem::path& path);

}  // namespace spinmarket::csv
