#include "spinmarket/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spinmarket/errors.hpp"

namespace spinmarket::csv {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ',';
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw DataError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw DataError("missing column '" + std::string(name) + "'");
}

Table read_table(const std::filesystem::path& path, const std::vector<std::string>& expected) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");

    Table table;
    for (auto field : split(trim_cr(line))) table.columns.emplace_back(field);
    if (!expected.empty() && table.columns != expected) {
        throw DataError(path.string() + ": expected header '" + join(expected) + "', got '" +
                        join(table.columns) + "'");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim_cr(line);
        if (text.empty()) continue;
        const auto fields = split(text);
        if (fields.size() != table.columns.size()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size()) + " fields, got " + std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        try {
            for (auto f : fields) row.push_back(parse_double(f));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ostringstream out;
    out << join(table.columns) << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write " + path.string());
    const std::string text = out.str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw DataError("write failed for " + path.string());
}

void write_series(const std::filesystem::path& path, const Series& series) {
    Table table{{"t", "value"}, {}};
    table.rows.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        table.rows.push_back({static_cast<double>(series.t0 + static_cast<std::int64_t>(i)), series[i]});
    }
    write_table(path, table);
}

Series read_series(const std::filesystem::path& path) {
    const Table table = read_table(path, {"t", "value"});
    if (table.rows.empty()) throw DataError(path.string() + ": series has no samples");
    Series s;
    s.t0 = static_cast<std::int64_t>(table.rows.front()[0]);
    s.values.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i][0] != static_cast<double>(s.t0 + static_cast<std::int64_t>(i))) {
            throw DataError(path.string() + ": time index is not consecutive at row " + std::to_string(i + 1));
        }
        s.values.push_back(table.rows[i][1]);
    }
    return s;
}

void write_histogram(const std::filesystem::path& path, const Histogram& h) {
    const auto expected = gaussian_reference(h.edges, h.n_total);
    Table table{{"bin_lo", "bin_hi", "count", "gaussian_expected"}, {}};
    for (std::size_t b = 0; b < h.bins(); ++b) {
        table.rows.push_back({h.edges[b], h.edges[b + 1], static_cast<double>(h.counts[b]), expected[b]});
    }
    write_table(path, table);
}

HistogramTable read_histogram(const std::filesystem::path& path) {
    const Table table = read_table(path, {"bin_lo", "bin_hi", "count", "gaussian_expected"});
    HistogramTable h;
    for (const auto& row : table.rows) {
        h.bin_lo.push_back(row[0]);
        h.bin_hi.push_back(row[1]);
        h.count.push_back(row[2]);
        h.gaussian_expected.push_back(row[3]);
    }
    return h;
}

void write_autocorrelation(const std::filesystem::path& path, const Series& c_r, const Series& c_abs_r) {
    if (c_r.size() != c_abs_r.size() || c_r.t0 != 0 || c_abs_r.t0 != 0) {
        throw DataError("autocorrelation columns must share length and start at lag 0");
    }
    Table table{{"lag", "c_r", "c_abs_r"}, {}};
    for (std::size_t k = 0; k < c_r.size(); ++k) {
        table.rows.push_back({static_cast<double>(k), c_r[k], c_abs_r[k]});
    }
    write_table(path, table);
}

AutocorrelationTable read_autocorrelation(const std::filesystem::path& path) {
    const Table table = read_table(path, {"lag", "c_r", "c_abs_r"});
    if (table.rows.empty()) throw DataError(path.string() + ": no autocorrelation rows");
    AutocorrelationTable out;
    out.c_r.t0 = out.c_abs_r.t0 = static_cast<std::int64_t>(table.rows.front()[0]);
    for (const auto& row : table.rows) {
        out.c_r.values.push_back(row[1]);
        out.c_abs_r.values.push_back(row[2]);
    }
    return out;
}

}  // namespace spinmarket::csv
