#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinmarket/core.hpp"
#include "spinmarket/figures.hpp"
#include "spinmarket/pricing.hpp"
#include "spinmarket/statistics.hpp"

namespace spinmarket {

std::string_view version();

enum class Artifact { series, histogram, autocorrelation, figures };

/// Everything a simulate/analyze/reproduce invocation depends on.
struct ExperimentConfig {
    ModelParams model = [] {
        ModelParams m;
        m.measurement_steps = 50000;
        return m;
    }();
    bool seed_given = false;
    PriceParams price;
    std::vector<std::int64_t> taus{1, 16};
    std::size_t max_lag = 200;
    std::size_t bins = 101;
    /// Standardized histograms span [-w, w], widened to a whole number that
    /// covers every sample so the counts always add up to n_total.
    double hist_half_width = 5.0;
    std::int64_t fit_min = 1;
    std::int64_t fit_max = 50;
    std::vector<Artifact> outputs{Artifact::series, Artifact::histogram, Artifact::autocorrelation};
    std::filesystem::path output_dir = "out";
    std::string format = "csv";
    /// analyze: magnetization series (`t,value`) to read instead of simulating.
    std::filesystem::path input;

    bool wants(Artifact a) const;
    /// Throws ConfigError naming the offending key and its valid range.
    void validate() const;
};

/// Flat `key = value` config text. Keys are the long flag names without the
/// leading dashes; list values are comma separated; '#' starts a comment.
/// Unknown keys and malformed values throw ConfigError.
void apply_config_text(ExperimentConfig& config, std::string_view text, const std::string& source = "config");
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Ordered (key, value) snapshot; feeding it back through apply_config_text
/// reproduces the configuration exactly.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);
std::string to_config_text(const ExperimentConfig& config);

/// Parses flags (everything after the subcommand). A `--config FILE` is
/// applied first and explicit flags override it.
ExperimentConfig parse_config(const std::vector<std::string>& args);

struct FileChecksum {
    std::string file;
    std::string fnv1a64;
};

/// Provenance written as run_record.json next to the outputs.
struct RunRecord {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string seed_source;
    std::string software_version;
    double duration_seconds = 0.0;
    std::vector<FileChecksum> files;

    nlohmann::json to_json() const;
};

std::string fnv1a64_hex(const std::filesystem::path& path);

struct TauAnalysis {
    std::int64_t tau = 0;
    SummaryStats stats;
    Histogram histogram;
};

struct FitOutcome {
    std::string series;  // "c_r" or "c_abs_r"
    DecayModel model = DecayModel::exponential;
    std::optional<DecayFit> fit;
    std::string status;  // "ok" or the reason the fit was not possible
};

struct AnalysisResult {
    std::vector<TauAnalysis> per_tau;
    Series c_r;
    Series c_abs_r;
    std::vector<FitOutcome> fits;
};

/// Statistics for one magnetization series: standardized histograms and
/// summaries per tau, autocorrelation of r_1 and |r_1|, and decay fits.
AnalysisResult analyze_magnetization(const Series& magnetization, const ExperimentConfig& config);

/// Runs the model and writes magnetization.csv, price.csv, returns_tau<k>.csv,
/// run_config.txt and run_record.json. A missing seed is drawn from entropy.
RunRecord cmd_simulate(ExperimentConfig config);

/// Reads config.input (or simulates when empty) and writes histogram_tau<k>.csv,
/// autocorrelation.csv, summary.csv, decay_fit.csv, and figures if requested.
RunRecord cmd_analyze(ExperimentConfig config);

enum class PlotKind { returns, histogram, autocorrelation };

struct PlotRequest {
    PlotKind kind = PlotKind::returns;
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output;
    bool shift = false;
    figures::AcfColumn column = figures::AcfColumn::both;
    std::vector<figures::AcfAxes> axes{figures::AcfAxes::linear};
};

PlotRequest parse_plot_request(const std::vector<std::string>& args);

/// Writes one SVG document; nothing is written when the inputs are unusable.
void cmd_plot(const PlotRequest& request);

/// Figure recipes: fig1 .. fig5, or all. Output goes to <out>/<figure>/.
const std::vector<std::string>& recipe_names();
RunRecord cmd_reproduce(const std::string& figure, ExperimentConfig config);

/// Entry point behind the executable. Returns the process exit code:
/// 0 success, 1 configuration error, 2 runtime/data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spinmarket
