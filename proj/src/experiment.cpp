#include "spinmarket/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spinmarket/csv.hpp"
#include "spinmarket/errors.hpp"
#include "spinmarket/rng.hpp"
#include "spinmarket/svg.hpp"

#ifndef SPINMARKET_VERSION
#define SPINMARKET_VERSION "dev"
#endif

namespace spinmarket {

namespace fs = std::filesystem;

std::string_view version() { return SPINMARKET_VERSION; }

namespace {

/// Thrown by the flag parsers when --help is given; carries the usage text.
struct HelpRequested {
    std::string text;
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string_view::npos ? text.size() : comma;
        items.push_back(trim(text.substr(start, end - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return items;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view text, const std::string& expected) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + key + ": expected " + expected);
}

std::int64_t parse_int(const std::string& key, std::string_view text, std::int64_t lo, std::int64_t hi,
                       const std::string& expected) {
    const std::string t = trim(text);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || v < lo || v > hi) {
        bad_value(key, text, expected);
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        bad_value(key, text, "an unsigned 64-bit integer");
    }
    return v;
}

double parse_real(const std::string& key, std::string_view text, double lo, bool lo_open,
                  const std::string& expected) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v) ||
        (lo_open ? !(v > lo) : !(v >= lo))) {
        bad_value(key, text, expected);
    }
    return v;
}

constexpr std::int64_t kMaxInt = std::numeric_limits<std::int32_t>::max();

Artifact parse_artifact(std::string_view text) {
    if (text == "series") return Artifact::series;
    if (text == "histogram") return Artifact::histogram;
    if (text == "autocorrelation") return Artifact::autocorrelation;
    if (text == "figures") return Artifact::figures;
    bad_value("emit", text, "a list drawn from series, histogram, autocorrelation, figures");
}

std::string_view to_string(Artifact a) {
    switch (a) {
        case Artifact::series: return "series";
        case Artifact::histogram: return "histogram";
        case Artifact::autocorrelation: return "autocorrelation";
        case Artifact::figures: return "figures";
    }
    return "";
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

/// Key -> setter, in canonical order. Shared by config files and flags.
const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"lattice-size",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.side = static_cast<int>(parse_int("lattice-size", v, 2, 46340, "an integer in [2, 46340]"));
         }},
        {"coupling",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.coupling = parse_real("coupling", v, -std::numeric_limits<double>::infinity(), true,
                                           "a finite real number");
         }},
        {"sigma",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.sigma = parse_real("sigma", v, 0.0, false, "a real number >= 0");
         }},
        {"lambda",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.lambda = parse_real("lambda", v, 0.0, false, "a real number >= 0");
         }},
        {"threshold-mode",
         [](ExperimentConfig& c, std::string_view v) { c.model.threshold_mode = parse_threshold_mode(trim(v)); }},
        {"thermalization",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.thermalization_steps = static_cast<std::uint64_t>(
                 parse_int("thermalization", v, 0, std::numeric_limits<std::int64_t>::max(), "an integer >= 0"));
         }},
        {"steps",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.measurement_steps = static_cast<std::uint64_t>(
                 parse_int("steps", v, 1, std::numeric_limits<std::int64_t>::max(), "an integer >= 1"));
         }},
        {"seed",
         [](ExperimentConfig& c, std::string_view v) {
             c.model.seed = parse_u64("seed", v);
             c.seed_given = true;
         }},
        {"tau",
         [](ExperimentConfig& c, std::string_view v) {
             c.taus.clear();
             for (const auto& item : split_list(v)) {
                 c.taus.push_back(parse_int("tau", item, 1, kMaxInt, "an integer >= 1 (tau must be >= 1)"));
             }
         }},
        {"max-lag",
         [](ExperimentConfig& c, std::string_view v) {
             c.max_lag = static_cast<std::size_t>(parse_int("max-lag", v, 1, kMaxInt, "an integer >= 1"));
         }},
        {"bins",
         [](ExperimentConfig& c, std::string_view v) {
             c.bins = static_cast<std::size_t>(parse_int("bins", v, 1, 1000000, "an integer in [1, 1000000]"));
         }},
        {"hist-range",
         [](ExperimentConfig& c, std::string_view v) {
             c.hist_half_width = parse_real("hist-range", v, 0.0, true, "a real number > 0");
         }},
        {"fit-min",
         [](ExperimentConfig& c, std::string_view v) {
             c.fit_min = parse_int("fit-min", v, 1, kMaxInt, "an integer >= 1");
         }},
        {"fit-max",
         [](ExperimentConfig& c, std::string_view v) {
             c.fit_max = parse_int("fit-max", v, 2, kMaxInt, "an integer >= 2");
         }},
        {"p0", [](ExperimentConfig& c, std::string_view v) { c.price.p0 = parse_real("p0", v, 0.0, true, "a real number > 0"); }},
        {"emit",
         [](ExperimentConfig& c, std::string_view v) {
             c.outputs.clear();
             for (const auto& item : split_list(v)) c.outputs.push_back(parse_artifact(item));
         }},
        {"format",
         [](ExperimentConfig& c, std::string_view v) {
             const std::string f = trim(v);
             if (f != "csv") bad_value("format", v, "csv");
             c.format = f;
         }},
        {"out", [](ExperimentConfig& c, std::string_view v) { c.output_dir = trim(v); }},
        {"input", [](ExperimentConfig& c, std::string_view v) { c.input = trim(v); }},
    };
    return table;
}

const Setter& setter_for(const std::string& key, const std::string& source) {
    for (const auto& [name, fn] : setters()) {
        if (name == key) return fn;
    }
    std::string valid;
    for (const auto& [name, fn] : setters()) valid += (valid.empty() ? "" : ", ") + name;
    throw ConfigError(source + ": unknown key '" + key + "' (valid keys: " + valid + ")");
}

std::string join_ints(const std::vector<std::int64_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw DataError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> reversed(std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    return args;
}

void parse_with(CLI::App& app, const std::vector<std::string>& args) {
    try {
        app.parse(reversed(args));
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }
}

/// Resolves a missing seed from entropy; returns how it was obtained.
std::string resolve_seed(ExperimentConfig& config) {
    if (config.seed_given) return "config";
    config.model.seed = entropy_seed();
    config.seed_given = true;
    return "entropy";
}

struct OutputLog {
    fs::path dir;
    std::vector<fs::path> files;

    fs::path add(const std::string& name) {
        files.push_back(dir / name);
        return files.back();
    }
};

void finish_record(RunRecord& record, const OutputLog& log, std::chrono::steady_clock::time_point start) {
    for (const auto& f : log.files) {
        record.files.push_back({fs::relative(f, log.dir).generic_string(), fnv1a64_hex(f)});
    }
    record.duration_seconds = elapsed_since(start);
    const fs::path path = log.dir / "run_record.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << record.to_json().dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

nlohmann::json config_json(const ExperimentConfig& config) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : config_entries(config)) j[k] = v;
    return j;
}

void write_series_outputs(OutputLog& log, const Series& m, const ExperimentConfig& config) {
    csv::write_series(log.add("magnetization.csv"), m);
    csv::write_series(log.add("price.csv"), price_series(m, config.price));
    for (auto tau : config.taus) {
        csv::write_series(log.add("returns_tau" + std::to_string(tau) + ".csv"), log_returns(m, tau));
    }
}

void check_taus_fit(const Series& m, const ExperimentConfig& config) {
    for (auto tau : config.taus) {
        if (static_cast<std::size_t>(tau) >= m.size()) {
            throw DataError("tau " + std::to_string(tau) + " is not smaller than the series length " +
                            std::to_string(m.size()));
        }
    }
}

csv::HistogramTable to_table(const Histogram& h) {
    csv::HistogramTable t;
    const auto expected = gaussian_reference(h.edges, h.n_total);
    for (std::size_t b = 0; b < h.bins(); ++b) {
        t.bin_lo.push_back(h.edges[b]);
        t.bin_hi.push_back(h.edges[b + 1]);
        t.count.push_back(static_cast<double>(h.counts[b]));
        t.gaussian_expected.push_back(expected[b]);
    }
    return t;
}

void write_summary(const fs::path& path, const AnalysisResult& result) {
    csv::Table table{{"tau", "n", "mean", "variance", "stdev", "excess_kurtosis", "kurtosis_se"}, {}};
    for (const auto& a : result.per_tau) {
        table.rows.push_back({static_cast<double>(a.tau), static_cast<double>(a.stats.n), a.stats.mean,
                              a.stats.variance, a.stats.stdev, a.stats.excess_kurtosis,
                              kurtosis_standard_error(a.stats.n)});
    }
    csv::write_table(path, table);
}

void write_fits(const fs::path& path, const AnalysisResult& result) {
    std::ostringstream os;
    os << "series,model,lag_min,lag_max,slope,intercept,r_squared,status\n";
    for (const auto& f : result.fits) {
        std::string status = f.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << f.series << ',' << to_string(f.model) << ',';
        if (f.fit) {
            os << f.fit->lag_min << ',' << f.fit->lag_max << ',' << csv::format_double(f.fit->slope) << ','
               << csv::format_double(f.fit->intercept) << ',' << csv::format_double(f.fit->r_squared);
        } else {
            os << ",,nan,nan,nan";
        }
        os << ',' << status << '\n';
    }
    write_text(path, os.str());
}

void write_analysis(OutputLog& log, const AnalysisResult& result, const ExperimentConfig& config) {
    if (config.wants(Artifact::histogram)) {
        for (const auto& a : result.per_tau) {
            csv::write_histogram(log.add("histogram_tau" + std::to_string(a.tau) + ".csv"), a.histogram);
        }
    }
    if (config.wants(Artifact::autocorrelation)) {
        csv::write_autocorrelation(log.add("autocorrelation.csv"), result.c_r, result.c_abs_r);
    }
    write_summary(log.add("summary.csv"), result);
    write_fits(log.add("decay_fit.csv"), result);
    if (config.wants(Artifact::figures)) {
        std::vector<std::pair<std::string, csv::HistogramTable>> hists;
        for (const auto& a : result.per_tau) hists.emplace_back("tau=" + std::to_string(a.tau), to_table(a.histogram));
        auto hist_fig = figures::histogram_figure(hists, true);
        auto acf_fig = figures::autocorrelation_figure(
            {result.c_r, result.c_abs_r}, figures::AcfColumn::both,
            {figures::AcfAxes::linear, figures::AcfAxes::semilog, figures::AcfAxes::loglog});
        for (auto* fig : {&hist_fig, &acf_fig}) {
            for (const auto& [k, v] : config_entries(config)) fig->metadata[k] = v;
        }
        svg::write(log.add("histograms.svg"), hist_fig);
        svg::write(log.add("autocorrelation.svg"), acf_fig);
    }
}

}  // namespace

bool ExperimentConfig::wants(Artifact a) const {
    return std::find(outputs.begin(), outputs.end(), a) != outputs.end();
}

void ExperimentConfig::validate() const {
    model.validate();
    price.validate();
    if (taus.empty()) throw ConfigError("tau: at least one lag is required");
    for (auto tau : taus) {
        if (tau < 1) throw ConfigError("tau must be >= 1, got " + std::to_string(tau));
        if (static_cast<std::uint64_t>(tau) >= model.measurement_steps) {
            throw ConfigError("tau " + std::to_string(tau) + " must be smaller than steps (" +
                              std::to_string(model.measurement_steps) + ")");
        }
    }
    if (max_lag < 1) throw ConfigError("max-lag must be >= 1");
    if (bins < 1) throw ConfigError("bins must be >= 1");
    if (!(hist_half_width > 0.0)) throw ConfigError("hist-range must be > 0");
    if (fit_min < 1 || fit_max <= fit_min || static_cast<std::size_t>(fit_max) > max_lag) {
        throw ConfigError("fit range must satisfy 1 <= fit-min < fit-max <= max-lag, got [" +
                          std::to_string(fit_min) + ", " + std::to_string(fit_max) + "] with max-lag " +
                          std::to_string(max_lag));
    }
    if (format != "csv") throw ConfigError("format must be csv");
}

void apply_config_text(ExperimentConfig& config, std::string_view text, const std::string& source) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        try {
            setter_for(key, where)(config, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            throw ConfigError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
        }
    }
}

void apply_config_file(ExperimentConfig& config, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(config, buffer.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("lattice-size", std::to_string(config.model.side));
    e.emplace_back("coupling", csv::format_double(config.model.coupling));
    e.emplace_back("sigma", csv::format_double(config.model.sigma));
    e.emplace_back("lambda", csv::format_double(config.model.lambda));
    e.emplace_back("threshold-mode", std::string(to_string(config.model.threshold_mode)));
    e.emplace_back("thermalization", std::to_string(config.model.thermalization_steps));
    e.emplace_back("steps", std::to_string(config.model.measurement_steps));
    if (config.seed_given) e.emplace_back("seed", std::to_string(config.model.seed));
    e.emplace_back("tau", join_ints(config.taus));
    e.emplace_back("max-lag", std::to_string(config.max_lag));
    e.emplace_back("bins", std::to_string(config.bins));
    e.emplace_back("hist-range", csv::format_double(config.hist_half_width));
    e.emplace_back("fit-min", std::to_string(config.fit_min));
    e.emplace_back("fit-max", std::to_string(config.fit_max));
    e.emplace_back("p0", csv::format_double(config.price.p0));
    std::string emit;
    for (auto a : config.outputs) emit += (emit.empty() ? "" : ",") + std::string(to_string(a));
    e.emplace_back("emit", emit);
    e.emplace_back("format", config.format);
    e.emplace_back("out", config.output_dir.generic_string());
    if (!config.input.empty()) e.emplace_back("input", config.input.generic_string());
    return e;
}

std::string to_config_text(const ExperimentConfig& config) {
    std::string text = "# spinmarket " + std::string(version()) + " run configuration\n";
    for (const auto& [k, v] : config_entries(config)) text += k + " = " + v + "\n";
    return text;
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"spinmarket experiment options"};
    std::string config_path;
    app.add_option("--config", config_path, "Flat key = value config file; flags override it");
    std::map<std::string, std::string> scalar;
    std::vector<std::string> taus;
    std::vector<CLI::Option*> opts;
    static const std::map<std::string, std::string> help = {
        {"lattice-size", "Lattice side L (N = L*L agents), default 32"},
        {"coupling", "Neighbor coupling J, default 1"},
        {"sigma", "Noise amplitude, default 1"},
        {"lambda", "Activity threshold scale, q = lambda*|M|, default 0"},
        {"threshold-mode", "frozen (q fixed per step) | live (q per update), default frozen"},
        {"thermalization", "Discarded steps before measurement, default 5000"},
        {"steps", "Measured steps, default 50000"},
        {"seed", "RNG seed; drawn from entropy and recorded when absent"},
        {"max-lag", "Largest autocorrelation lag, default 200"},
        {"bins", "Histogram bins, default 101"},
        {"hist-range", "Standardized histogram half-width, default 5"},
        {"fit-min", "First lag of the decay fit, default 1"},
        {"fit-max", "Last lag of the decay fit, default 50"},
        {"p0", "Price scale, default 1"},
        {"emit", "Comma list of series, histogram, autocorrelation, figures"},
        {"format", "Table format, csv"},
        {"out", "Output directory, default out"},
        {"input", "analyze: existing magnetization CSV instead of a fresh run"},
    };
    for (const auto& [name, fn] : setters()) {
        if (name == "tau") {
            opts.push_back(app.add_option("--tau", taus, "Return lag (repeatable), default 1 and 16"));
        } else {
            const auto it = help.find(name);
            opts.push_back(app.add_option("--" + name, scalar[name], it == help.end() ? "" : it->second));
        }
    }
    parse_with(app, args);

    ExperimentConfig config;
    if (!config_path.empty()) apply_config_file(config, config_path);
    std::size_t k = 0;
    for (const auto& [name, fn] : setters()) {
        CLI::Option* opt = opts[k++];
        if (opt->count() == 0) continue;
        if (name == "tau") {
            std::string joined;
            for (const auto& t : taus) joined += (joined.empty() ? "" : ",") + t;
            fn(config, joined);
        } else {
            fn(config, scalar[name]);
        }
    }
    config.validate();
    return config;
}

std::string fnv1a64_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

nlohmann::json RunRecord::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["software_version"] = software_version;
    j["seed"] = seed;
    j["seed_source"] = seed_source;
    j["config"] = config;
    j["duration_seconds"] = duration_seconds;
    j["files"] = nlohmann::json::array();
    for (const auto& f : files) j["files"].push_back({{"file", f.file}, {"fnv1a64", f.fnv1a64}});
    return j;
}

AnalysisResult analyze_magnetization(const Series& magnetization, const ExperimentConfig& config) {
    check_taus_fit(magnetization, config);
    AnalysisResult result;
    for (auto tau : config.taus) {
        const Series r = log_returns(magnetization, tau);
        TauAnalysis a;
        a.tau = tau;
        a.stats = summary(r);
        if (a.stats.zero_variance()) {
            throw DataError("returns at tau " + std::to_string(tau) + " have zero variance");
        }
        double widest = 0.0;
        for (double v : r.values) widest = std::max(widest, std::abs(v - a.stats.mean) / a.stats.stdev);
        const double half = std::max(config.hist_half_width, std::ceil(widest));
        a.histogram = histogram(r.span(), {config.bins, std::pair{-half, half}, true});
        result.per_tau.push_back(std::move(a));
    }

    const Series r1 = log_returns(magnetization, 1);
    result.c_r = autocorrelation(r1, config.max_lag);
    result.c_abs_r = autocorrelation(abs_series(r1), config.max_lag);

    for (const auto& [name, c] : {std::pair<std::string, const Series*>{"c_r", &result.c_r},
                                  std::pair<std::string, const Series*>{"c_abs_r", &result.c_abs_r}}) {
        for (auto model : {DecayModel::exponential, DecayModel::power_law}) {
            FitOutcome outcome{name, model, std::nullopt, "ok"};
            try {
                outcome.fit = fit_decay(*c, model, config.fit_min, config.fit_max);
            } catch (const DataError& e) {
                outcome.status = e.what();
            }
            result.fits.push_back(std::move(outcome));
        }
    }
    return result;
}

RunRecord cmd_simulate(ExperimentConfig config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    RunRecord record;
    record.command = "simulate";
    record.seed_source = resolve_seed(config);
    record.seed = config.model.seed;
    record.software_version = std::string(version());

    ensure_directory(config.output_dir);
    OutputLog log{config.output_dir, {}};
    const Series m = run_simulation(config.model);
    if (config.wants(Artifact::series)) write_series_outputs(log, m, config);
    if (config.wants(Artifact::figures)) {
        std::vector<std::pair<std::string, Series>> traces{{"r(t), tau=1", log_returns(m, 1)}};
        auto fig = figures::returns_figure(traces);
        for (const auto& [k, v] : config_entries(config)) fig.metadata[k] = v;
        svg::write(log.add("returns.svg"), fig);
    }
    write_text(log.add("run_config.txt"), to_config_text(config));
    record.config = config_json(config);
    finish_record(record, log, start);
    return record;
}

RunRecord cmd_analyze(ExperimentConfig config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    RunRecord record;
    record.command = "analyze";
    record.software_version = std::string(version());
    ensure_directory(config.output_dir);
    OutputLog log{config.output_dir, {}};

    Series m;
    if (config.input.empty()) {
        record.seed_source = resolve_seed(config);
        record.seed = config.model.seed;
        m = run_simulation(config.model);
        if (config.wants(Artifact::series)) write_series_outputs(log, m, config);
    } else {
        record.seed_source = "input:" + config.input.generic_string();
        record.seed = config.model.seed;
        m = csv::read_series(config.input);
    }
    write_analysis(log, analyze_magnetization(m, config), config);
    write_text(log.add("run_config.txt"), to_config_text(config));
    record.config = config_json(config);
    finish_record(record, log, start);
    return record;
}

PlotRequest parse_plot_request(const std::vector<std::string>& args) {
    CLI::App app{"spinmarket plot options"};
    std::string kind;
    std::vector<std::string> inputs;
    std::string output;
    std::string column = "both";
    std::vector<std::string> axes;
    bool shift = false;
    app.add_option("--kind", kind, "returns | histogram | acf")->required();
    app.add_option("--input", inputs, "Input CSV (repeatable)")->required();
    app.add_option("--out", output, "Output SVG path")->required();
    app.add_option("--column", column, "acf: c_r | c_abs_r | both");
    app.add_option("--axes", axes, "acf: linear | semilog | loglog (repeatable)");
    app.add_flag("--shift", shift, "histogram: shift curve k up by 10^k");
    parse_with(app, args);

    PlotRequest req;
    if (kind == "returns") req.kind = PlotKind::returns;
    else if (kind == "histogram") req.kind = PlotKind::histogram;
    else if (kind == "acf" || kind == "autocorrelation") req.kind = PlotKind::autocorrelation;
    else throw ConfigError("--kind must be returns, histogram or acf; got '" + kind + "'");
    for (const auto& i : inputs) req.inputs.emplace_back(i);
    req.output = output;
    req.shift = shift;
    req.column = figures::parse_acf_column(column);
    if (!axes.empty()) {
        req.axes.clear();
        for (const auto& a : axes) req.axes.push_back(figures::parse_acf_axes(a));
    }
    return req;
}

void cmd_plot(const PlotRequest& request) {
    if (request.inputs.empty()) throw ConfigError("plot needs at least one --input");
    for (const auto& in : request.inputs) {
        if (!fs::exists(in)) throw DataError("missing artifact " + in.string());
    }
    svg::Figure fig;
    switch (request.kind) {
        case PlotKind::returns: {
            std::vector<std::pair<std::string, Series>> series;
            for (const auto& in : request.inputs) series.emplace_back(in.stem().string(), csv::read_series(in));
            fig = figures::returns_figure(series);
            break;
        }
        case PlotKind::histogram: {
            std::vector<std::pair<std::string, csv::HistogramTable>> hists;
            for (const auto& in : request.inputs) hists.emplace_back(in.stem().string(), csv::read_histogram(in));
            fig = figures::histogram_figure(hists, request.shift);
            break;
        }
        case PlotKind::autocorrelation: {
            if (request.inputs.size() != 1) throw ConfigError("acf plot takes exactly one --input");
            fig = figures::autocorrelation_figure(csv::read_autocorrelation(request.inputs.front()), request.column,
                                                  request.axes);
            break;
        }
    }
    std::string sources;
    for (const auto& in : request.inputs) sources += (sources.empty() ? "" : ";") + in.generic_string();
    fig.metadata["sources"] = sources;
    fig.metadata["software_version"] = std::string(version());
    if (!request.output.parent_path().empty()) ensure_directory(request.output.parent_path());
    svg::write(request.output, fig);
}

// ---------------------------------------------------------------------------
// reproduce recipes

namespace {

struct RecipeRun {
    std::string label;
    double lambda;
    double sigma;
};

std::vector<RecipeRun> recipe_runs(const std::string& figure) {
    const std::vector<RecipeRun> lambdas{
        {"lambda0", 0.0, 1.0}, {"lambda5", 5.0, 1.0}, {"lambda10", 10.0, 1.0}, {"lambda15", 15.0, 1.0}};
    if (figure == "fig1") return lambdas;
    if (figure == "fig2") {
        auto runs = lambdas;
        runs.push_back({"lambda10_sigma2", 10.0, 2.0});
        runs.push_back({"lambda10_sigma0.5", 10.0, 0.5});
        return runs;
    }
    if (figure == "fig3") return {{"lambda10", 10.0, 1.0}};
    if (figure == "fig4" || figure == "fig5") return {{"lambda15", 15.0, 1.0}};
    throw ConfigError("unknown figure recipe '" + figure + "' (valid: fig1, fig2, fig3, fig4, fig5, all)");
}

RunRecord reproduce_one(const std::string& figure, ExperimentConfig base) {
    const auto start = std::chrono::steady_clock::now();
    const auto runs = recipe_runs(figure);
    RunRecord record;
    record.command = "reproduce " + figure;
    record.software_version = std::string(version());
    record.seed_source = resolve_seed(base);
    record.seed = base.model.seed;

    const fs::path dir = base.output_dir / figure;
    ensure_directory(dir);
    OutputLog log{dir, {}};

    std::vector<ExperimentConfig> configs;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        ExperimentConfig c = base;
        c.model.lambda = runs[i].lambda;
        c.model.sigma = runs[i].sigma;
        c.model.seed = mix_seed(base.model.seed, i);
        c.validate();
        configs.push_back(std::move(c));
    }

    // Independent runs in parallel; each simulation stays sequential.
    std::vector<std::future<Series>> pending;
    for (const auto& c : configs) {
        pending.push_back(std::async(std::launch::async, [model = c.model] { return run_simulation(model); }));
    }
    std::vector<Series> results;
    for (auto& f : pending) results.push_back(f.get());

    svg::Figure fig;
    std::vector<svg::Figure> extra;
    auto kurtosis_rows = csv::Table{{"lambda", "sigma", "tau", "n", "excess_kurtosis", "kurtosis_se"}, {}};
    auto add_kurtosis = [&](const ExperimentConfig& c, const AnalysisResult& a) {
        for (const auto& t : a.per_tau) {
            kurtosis_rows.rows.push_back({c.model.lambda, c.model.sigma, static_cast<double>(t.tau),
                                          static_cast<double>(t.stats.n), t.stats.excess_kurtosis,
                                          kurtosis_standard_error(t.stats.n)});
        }
    };

    if (figure == "fig1") {
        std::vector<std::pair<std::string, Series>> traces;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            Series r = log_returns(results[i], 1);
            csv::write_series(log.add("returns_" + runs[i].label + ".csv"), r);
            traces.emplace_back(runs[i].label, std::move(r));
        }
        fig = figures::returns_figure(traces);
        fig.title = "Returns r(t), J=1, sigma=1, different lambda";
    } else if (figure == "fig2") {
        std::vector<std::pair<std::string, csv::HistogramTable>> by_lambda;
        std::vector<std::pair<std::string, csv::HistogramTable>> by_sigma;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            ExperimentConfig c = configs[i];
            c.taus = {16};
            const auto a = analyze_magnetization(results[i], c);
            add_kurtosis(c, a);
            csv::write_histogram(log.add("histogram_" + runs[i].label + "_tau16.csv"), a.per_tau[0].histogram);
            (i < 4 ? by_lambda : by_sigma).emplace_back(runs[i].label, to_table(a.per_tau[0].histogram));
        }
        fig = figures::histogram_figure(by_lambda, false);
        fig.title = "Standardized r_16, J=1, sigma=1, different lambda";
        auto right = figures::histogram_figure(by_sigma, false);
        right.title = "Standardized r_16, J=1, lambda=10, sigma=2 and 0.5";
        extra.push_back(std::move(right));
    } else if (figure == "fig3") {
        ExperimentConfig c = configs[0];
        c.taus = {1, 2, 4, 8, 16, 32};
        const auto a = analyze_magnetization(results[0], c);
        add_kurtosis(c, a);
        std::vector<std::pair<std::string, csv::HistogramTable>> hists;
        for (const auto& t : a.per_tau) {
            csv::write_histogram(log.add("histogram_tau" + std::to_string(t.tau) + ".csv"), t.histogram);
            hists.emplace_back("tau=" + std::to_string(t.tau), to_table(t.histogram));
        }
        fig = figures::histogram_figure(hists, true);
        fig.title = "Standardized r_tau, J=1, sigma=1, lambda=10, shifted by 10^k";
    } else {
        const auto a = analyze_magnetization(results[0], configs[0]);
        csv::write_autocorrelation(log.add("autocorrelation.csv"), a.c_r, a.c_abs_r);
        if (figure == "fig4") {
            fig = figures::autocorrelation_figure({a.c_r, a.c_abs_r}, figures::AcfColumn::c_r,
                                                  {figures::AcfAxes::linear});
            fig.title = "Autocorrelation of returns, J=1, sigma=1, lambda=15";
        } else {
            write_fits(log.add("decay_fit.csv"), a);
            fig = figures::autocorrelation_figure({a.c_r, a.c_abs_r}, figures::AcfColumn::c_abs_r,
                                                  {figures::AcfAxes::loglog, figures::AcfAxes::semilog});
            fig.title = "Autocorrelation of absolute returns, J=1, sigma=1, lambda=15";
        }
    }
    if (!kurtosis_rows.rows.empty()) csv::write_table(log.add("kurtosis.csv"), kurtosis_rows);

    auto stamp = [&](svg::Figure& f) {
        for (const auto& [k, v] : config_entries(base)) f.metadata[k] = v;
        f.metadata["recipe"] = figure;
    };
    stamp(fig);
    svg::write(log.add(figure + ".svg"), fig);
    for (std::size_t k = 0; k < extra.size(); ++k) {
        stamp(extra[k]);
        svg::write(log.add(figure + "_" + std::string(1, static_cast<char>('b' + k)) + ".svg"), extra[k]);
    }

    nlohmann::json cfg = config_json(base);
    cfg["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        cfg["runs"].push_back({{"label", runs[i].label},
                               {"lambda", runs[i].lambda},
                               {"sigma", runs[i].sigma},
                               {"seed", configs[i].model.seed}});
    }
    record.config = cfg;
    finish_record(record, log, start);
    return record;
}

}  // namespace

const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4", "fig5"};
    return names;
}

RunRecord cmd_reproduce(const std::string& figure, ExperimentConfig config) {
    config.validate();
    if (figure != "all") return reproduce_one(figure, std::move(config));
    resolve_seed(config);
    RunRecord combined;
    combined.command = "reproduce all";
    combined.software_version = std::string(version());
    combined.seed = config.model.seed;
    combined.seed_source = "config";
    for (const auto& name : recipe_names()) {
        RunRecord r = reproduce_one(name, config);
        combined.duration_seconds += r.duration_seconds;
        for (auto& f : r.files) combined.files.push_back({name + "/" + f.file, f.fnv1a64});
    }
    combined.config = config_json(config);
    return combined;
}

// ---------------------------------------------------------------------------
// command line

namespace {

constexpr const char* kUsage =
    "usage: spinmarket <command> [options]\n"
    "\n"
    "commands:\n"
    "  simulate   run the model, write magnetization/price/return CSVs and run_record.json\n"
    "  analyze    histograms, autocorrelation, summaries and decay fits (from --input or a fresh run)\n"
    "  plot       render SVG figures from CSV artifacts (--kind returns|histogram|acf)\n"
    "  reproduce  run a figure recipe end to end: fig1 fig2 fig3 fig4 fig5 all\n"
    "\n"
    "run 'spinmarket <command> --help' for the options of a command\n";

void report(std::ostream& out, const RunRecord& record) {
    out << record.command << ": seed " << record.seed << " (" << record.seed_source << "), "
        << record.files.size() << " files, " << std::fixed << std::setprecision(2) << record.duration_seconds
        << " s\n";
    for (const auto& f : record.files) out << "  " << f.file << "  " << f.fnv1a64 << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << kUsage;
        return 1;
    }
    const std::string& command = args.front();
    if (command == "-h" || command == "--help" || command == "help") {
        out << kUsage;
        return 0;
    }
    if (command == "--version") {
        out << "spinmarket " << version() << '\n';
        return 0;
    }
    std::vector<std::string> rest(args.begin() + 1, args.end());
    try {
        if (command == "simulate") {
            report(out, cmd_simulate(parse_config(rest)));
        } else if (command == "analyze") {
            report(out, cmd_analyze(parse_config(rest)));
        } else if (command == "plot") {
            const auto req = parse_plot_request(rest);
            cmd_plot(req);
            out << "plot: wrote " << req.output.string() << '\n';
        } else if (command == "reproduce") {
            if (rest.empty() || rest.front().starts_with("-")) {
                if (!rest.empty() && (rest.front() == "--help" || rest.front() == "-h")) {
                    out << "usage: spinmarket reproduce <fig1|fig2|fig3|fig4|fig5|all> [experiment options]\n";
                    return 0;
                }
                throw ConfigError("reproduce needs a recipe name: fig1, fig2, fig3, fig4, fig5 or all");
            }
            const std::string figure = rest.front();
            if (figure != "all" && std::find(recipe_names().begin(), recipe_names().end(), figure) ==
                                       recipe_names().end()) {
                throw ConfigError("unknown figure recipe '" + figure + "' (valid: fig1, fig2, fig3, fig4, fig5, all)");
            }
            report(out, cmd_reproduce(figure, parse_config({rest.begin() + 1, rest.end()})));
        } else {
            err << "unknown command '" << command << "'\n" << kUsage;
            return 1;
        }
    } catch (const HelpRequested& help) {
        out << help.text;
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace spinmarket
