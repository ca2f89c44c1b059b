#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "spinmarket/csv.hpp"
#include "spinmarket/errors.hpp"
#include "spinmarket/experiment.hpp"
#include "spinmarket/svg.hpp"

using namespace spinmarket;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("spinmarket_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    const int rc = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.model.side = 8;
    c.model.lambda = 10.0;
    c.model.thermalization_steps = 50;
    c.model.measurement_steps = 1500;
    c.model.seed = 31;
    c.seed_given = true;
    c.max_lag = 40;
    c.fit_max = 20;
    c.output_dir = out;
    return c;
}

/// Parses the polyline of a labelled curve and maps it back to data coordinates.
std::vector<std::pair<double, double>> curve_points(const std::string& doc, const std::string& panel_title,
                                                    const std::string& label) {
    const auto g = doc.find("data-title=\"" + panel_title + "\"");
    REQUIRE(g != std::string::npos);
    auto attr = [&](const std::string& name) {
        const auto at = doc.find(name + "=\"", g);
        const auto start = at + name.size() + 2;
        return std::string(doc, start, doc.find('"', start) - start);
    };
    svg::PanelMapping map;
    map.left = std::stod(attr("data-left"));
    map.top = std::stod(attr("data-top"));
    map.width = std::stod(attr("data-width"));
    map.height = std::stod(attr("data-height"));
    map.u_min = std::stod(attr("data-u-min"));
    map.u_max = std::stod(attr("data-u-max"));
    map.v_min = std::stod(attr("data-v-min"));
    map.v_max = std::stod(attr("data-v-max"));
    map.x_scale = attr("data-x-scale") == "log" ? svg::Scale::log : svg::Scale::linear;
    map.y_scale = attr("data-y-scale") == "log" ? svg::Scale::log : svg::Scale::linear;

    const auto c = doc.find("data-label=\"" + label + "\"", g);
    REQUIRE(c != std::string::npos);
    const auto p = doc.find("points=\"", c) + 8;
    std::istringstream pts(std::string(doc, p, doc.find('"', p) - p));
    std::vector<std::pair<double, double>> out;
    std::string pair;
    while (pts >> pair) {
        const auto comma = pair.find(',');
        out.emplace_back(map.from_px(csv::parse_double(pair.substr(0, comma))),
                         map.from_py(csv::parse_double(pair.substr(comma + 1))));
    }
    return out;
}

}  // namespace

TEST_CASE("parse_config defaults follow the paper-scale protocol") {
    const auto c = parse_config({"--lambda", "10", "--sigma", "1", "--coupling", "1", "--steps", "50000", "--seed", "42"});
    CHECK(c.model.side == 32);
    CHECK(c.model.thermalization_steps == 5000);
    CHECK(c.model.lambda == 10.0);
    CHECK(c.model.measurement_steps == 50000);
    CHECK(c.model.seed == 42);
    CHECK(c.seed_given);
    CHECK(c.model.threshold_mode == ThresholdMode::frozen);
    CHECK(c.taus == std::vector<std::int64_t>{1, 16});
    CHECK(c.max_lag == 200);
}

TEST_CASE("parse_config rejects bad values with the offending key") {
    CHECK_THROWS_WITH_AS(parse_config({"--tau", "0"}), doctest::Contains("tau"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({"--sigma", "-1"}), doctest::Contains("sigma"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({"--lattice-size", "1"}), doctest::Contains("lattice-size"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({"--lambda", "abc"}), doctest::Contains("lambda"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({"--threshold-mode", "sometimes"}), doctest::Contains("threshold-mode"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config({"--no-such-flag", "1"}), ConfigError);
    CHECK_THROWS_AS(parse_config({"--steps", "10", "--tau", "10"}), ConfigError);
    CHECK_THROWS_AS(parse_config({"--format", "parquet"}), ConfigError);
}

TEST_CASE("config file values are overridden by flags") {
    TempDir dir;
    std::ofstream(dir / "run.cfg") << "# experiment\nlambda = 15\nsigma = 0.5   # comment\ntau = 1, 4,16\n";
    const auto from_file = parse_config({"--config", (dir / "run.cfg").string()});
    CHECK(from_file.model.lambda == 15.0);
    CHECK(from_file.model.sigma == 0.5);
    CHECK(from_file.taus == std::vector<std::int64_t>{1, 4, 16});

    const auto overridden = parse_config({"--config", (dir / "run.cfg").string(), "--lambda", "10", "--tau", "2",
                                          "--tau", "8"});
    CHECK(overridden.model.lambda == 10.0);
    CHECK(overridden.model.sigma == 0.5);
    CHECK(overridden.taus == std::vector<std::int64_t>{2, 8});

    std::ofstream(dir / "bad.cfg") << "lambda = 1\nlamda = 2\n";
    CHECK_THROWS_WITH_AS(parse_config({"--config", (dir / "bad.cfg").string()}), doctest::Contains("lamda"),
                         ConfigError);
    std::ofstream(dir / "noeq.cfg") << "lambda 2\n";
    CHECK_THROWS_AS(parse_config({"--config", (dir / "noeq.cfg").string()}), ConfigError);
    CHECK_THROWS_AS(parse_config({"--config", (dir / "missing.cfg").string()}), ConfigError);
}

TEST_CASE("config snapshot text round-trips") {
    ExperimentConfig c = small_config("some/dir");
    c.model.coupling = 0.1 + 0.2;
    c.model.sigma = 1.0 / 3.0;
    c.model.threshold_mode = ThresholdMode::live;
    c.price.p0 = 2.5;
    c.taus = {1, 3, 9};
    c.outputs = {Artifact::histogram, Artifact::figures};
    ExperimentConfig back;
    apply_config_text(back, to_config_text(c));
    CHECK(config_entries(back) == config_entries(c));
    CHECK(back.model.coupling == c.model.coupling);
    CHECK(back.model.sigma == c.model.sigma);
}

TEST_CASE("CSV values round-trip exactly") {
    TempDir dir;
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> mag(-1e3, 1e3);
    std::uniform_int_distribution<int> expo(-300, 300);
    Series s{-7, {}};
    for (int k = 0; k < 5000; ++k) s.values.push_back(std::ldexp(mag(gen), expo(gen) / 10));
    s.values.push_back(0.1);
    s.values.push_back(-0.0);
    s.values.push_back(5e-324);
    csv::write_series(dir / "s.csv", s);
    const Series back = csv::read_series(dir / "s.csv");
    CHECK(back.t0 == s.t0);
    REQUIRE(back.size() == s.size());
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(std::signbit(back[k]) == std::signbit(s[k]));
    CHECK(back.values == s.values);
    CHECK(slurp(dir / "s.csv").rfind("t,value\n-7,", 0) == 0);
}

TEST_CASE("CSV reader rejects malformed input") {
    TempDir dir;
    std::ofstream(dir / "hdr.csv") << "time,value\n0,1\n";
    CHECK_THROWS_AS(csv::read_series(dir / "hdr.csv"), DataError);
    std::ofstream(dir / "ragged.csv") << "t,value\n0,1\n1\n";
    CHECK_THROWS_AS(csv::read_series(dir / "ragged.csv"), DataError);
    std::ofstream(dir / "nan.csv") << "t,value\n0,abc\n";
    CHECK_THROWS_AS(csv::read_series(dir / "nan.csv"), DataError);
    std::ofstream(dir / "gap.csv") << "t,value\n0,1\n2,1\n";
    CHECK_THROWS_AS(csv::read_series(dir / "gap.csv"), DataError);
    CHECK_THROWS_AS(csv::read_series(dir / "absent.csv"), DataError);
}

TEST_CASE("simulate writes deterministic, checksummed outputs") {
    TempDir a;
    TempDir b;
    const RunRecord ra = cmd_simulate(small_config(a.path));
    const RunRecord rb = cmd_simulate(small_config(b.path));
    REQUIRE(ra.files.size() == rb.files.size());
    for (std::size_t k = 0; k < ra.files.size(); ++k) {
        CHECK(ra.files[k].file == rb.files[k].file);
        if (ra.files[k].file != "run_config.txt") CHECK(ra.files[k].fnv1a64 == rb.files[k].fnv1a64);
    }
    CHECK(slurp(a / "magnetization.csv") == slurp(b / "magnetization.csv"));
    CHECK(fs::exists(a / "returns_tau16.csv"));
    CHECK(fs::exists(a / "price.csv"));

    const auto record = nlohmann::json::parse(slurp(a / "run_record.json"));
    CHECK(record["seed"] == 31);
    CHECK(record["config"]["lambda"] == "10");
    CHECK(record["files"].size() == ra.files.size());

    // Re-running from the snapshot reproduces the series.
    TempDir c;
    auto again = parse_config({"--config", (a / "run_config.txt").string(), "--out", c.path.string()});
    cmd_simulate(again);
    CHECK(slurp(c / "magnetization.csv") == slurp(a / "magnetization.csv"));
}

TEST_CASE("simulate without a seed records the entropy seed it used") {
    TempDir dir;
    ExperimentConfig c = small_config(dir.path);
    c.seed_given = false;
    c.model.measurement_steps = 100;
    c.max_lag = 10;
    c.fit_max = 5;
    const RunRecord r = cmd_simulate(c);
    CHECK(r.seed_source == "entropy");
    const std::string snapshot = slurp(dir / "run_config.txt");
    CHECK(snapshot.find("seed = " + std::to_string(r.seed)) != std::string::npos);
}

TEST_CASE("analyze emits the documented tables") {
    TempDir dir;
    ExperimentConfig sim = small_config(dir / "sim");
    cmd_simulate(sim);

    ExperimentConfig c = small_config(dir / "analysis");
    c.input = dir / "sim" / "magnetization.csv";
    c.outputs = {Artifact::histogram, Artifact::autocorrelation, Artifact::figures};
    c.taus = {1, 2, 4};
    cmd_analyze(c);

    for (std::int64_t tau : c.taus) {
        const auto table = csv::read_table(dir / "analysis" / ("histogram_tau" + std::to_string(tau) + ".csv"),
                                           {"bin_lo", "bin_hi", "count", "gaussian_expected"});
        double counts = 0;
        for (const auto& row : table.rows) counts += row[2];
        CHECK(counts == static_cast<double>(1500 - tau));
        CHECK(table.rows.size() == 101);
    }
    const auto acf = csv::read_table(dir / "analysis" / "autocorrelation.csv", {"lag", "c_r", "c_abs_r"});
    REQUIRE(acf.rows.size() == 41);
    CHECK(acf.rows[0][0] == 0.0);
    CHECK(std::abs(acf.rows[0][1] - 1.0) <= 1e-12);
    CHECK(std::abs(acf.rows[0][2] - 1.0) <= 1e-12);

    const auto summary_table = csv::read_table(dir / "analysis" / "summary.csv");
    CHECK(summary_table.rows.size() == 3);
    CHECK(summary_table.columns[5] == "excess_kurtosis");
    CHECK(slurp(dir / "analysis" / "decay_fit.csv").rfind("series,model,lag_min,lag_max,slope,intercept,r_squared,status\n", 0) == 0);
    CHECK(fs::exists(dir / "analysis" / "histograms.svg"));
    CHECK(fs::exists(dir / "analysis" / "autocorrelation.svg"));
}

TEST_CASE("analyze refuses degenerate input") {
    TempDir dir;
    csv::write_series(dir / "flat.csv", Series{0, std::vector<double>(500, 0.25)});
    ExperimentConfig c = small_config(dir / "out");
    c.input = dir / "flat.csv";
    c.max_lag = 10;
    c.fit_max = 5;
    CHECK_THROWS_AS(cmd_analyze(c), DataError);
    c.input = dir / "nope.csv";
    CHECK_THROWS_AS(cmd_analyze(c), DataError);
}

TEST_CASE("plot: histogram, empty input, and lossless acf mapping") {
    TempDir dir;
    SUBCASE("empty histogram emits nothing") {
        std::ofstream(dir / "h.csv") << "bin_lo,bin_hi,count,gaussian_expected\n-1,0,0,0.3\n0,1,0,0.3\n";
        PlotRequest req;
        req.kind = PlotKind::histogram;
        req.inputs = {dir / "h.csv"};
        req.output = dir / "h.svg";
        CHECK_THROWS_AS(cmd_plot(req), DataError);
        CHECK_FALSE(fs::exists(dir / "h.svg"));
    }
    SUBCASE("missing artifact") {
        PlotRequest req;
        req.kind = PlotKind::returns;
        req.inputs = {dir / "none.csv"};
        req.output = dir / "r.svg";
        CHECK_THROWS_AS(cmd_plot(req), DataError);
    }
    SUBCASE("six shifted histograms with dashed references") {
        std::vector<fs::path> inputs;
        for (int k = 0; k < 6; ++k) {
            Histogram h;
            h.edges = {-2, -1, 0, 1, 2};
            h.counts = {1, 40, 50, 9};
            h.n_total = 100;
            inputs.push_back(dir / ("h" + std::to_string(k) + ".csv"));
            csv::write_histogram(inputs.back(), h);
        }
        PlotRequest req;
        req.kind = PlotKind::histogram;
        req.inputs = inputs;
        req.output = dir / "fig3.svg";
        req.shift = true;
        cmd_plot(req);
        const std::string doc = slurp(dir / "fig3.svg");
        std::size_t curves = 0;
        std::size_t dashed = 0;
        for (auto p = doc.find("class=\"curve\""); p != std::string::npos; p = doc.find("class=\"curve\"", p + 1)) {
            ++curves;
        }
        for (auto p = doc.find("stroke-dasharray"); p != std::string::npos; p = doc.find("stroke-dasharray", p + 1)) {
            ++dashed;
        }
        CHECK(curves == 12);
        CHECK(dashed == 6);
        const auto top = curve_points(doc, "", "h5");
        REQUIRE(top.size() == 4);
        CHECK(top[1].second == doctest::Approx(40.0 * 1e5).epsilon(1e-12));
    }
    SUBCASE("semi-log plot of an exponential keeps the fitted slope") {
        Series c_r{0, {}};
        Series c_abs{0, {}};
        for (int lag = 0; lag <= 60; ++lag) {
            c_r.values.push_back(lag == 0 ? 1.0 : 0.0);
            c_abs.values.push_back(std::exp(-0.07 * lag));
        }
        csv::write_autocorrelation(dir / "acf.csv", c_r, c_abs);
        const auto req = parse_plot_request({"--kind", "acf", "--input", (dir / "acf.csv").string(), "--out",
                                             (dir / "acf.svg").string(), "--column", "c_abs_r", "--axes", "semilog",
                                             "--axes", "loglog"});
        cmd_plot(req);
        const std::string doc = slurp(dir / "acf.svg");
        const auto pts = curve_points(doc, "semi-log", "c_abs_r");
        REQUIRE(pts.size() == 61);
        Series replot{0, {}};
        for (std::size_t k = 0; k < pts.size(); ++k) {
            CHECK(pts[k].first == doctest::Approx(static_cast<double>(k)).epsilon(1e-12));
            replot.values.push_back(pts[k].second);
        }
        const DecayFit from_plot = fit_decay(replot, DecayModel::exponential, 1, 60);
        const DecayFit from_table = fit_decay(c_abs, DecayModel::exponential, 1, 60);
        CHECK(std::abs(from_plot.slope - from_table.slope) < 1e-6);
        CHECK(doc.find("<metadata>") != std::string::npos);
        CHECK(curve_points(doc, "log-log", "c_abs_r").size() == 60);
    }
}

TEST_CASE("command line exit codes") {
    TempDir dir;
    std::string out;
    std::string err;
    CHECK(cli({}, &out, &err) == 1);
    CHECK(cli({"--help"}, &out) == 0);
    CHECK(cli({"frobnicate"}) == 1);
    CHECK(cli({"simulate", "--tau", "0"}, nullptr, &err) == 1);
    CHECK(err.find("tau") != std::string::npos);
    CHECK(cli({"simulate", "--help"}, &out) == 0);
    CHECK(out.find("--lambda") != std::string::npos);
    CHECK(cli({"reproduce", "fig9"}) == 1);
    CHECK(cli({"analyze", "--input", (dir / "missing.csv").string(), "--out", (dir / "a").string()}) == 2);

    std::ofstream(dir / "blocker") << "x";
    CHECK(cli({"simulate", "--steps", "100", "--max-lag", "10", "--fit-max", "5", "--lattice-size", "4", "--seed",
               "1", "--out", (dir / "blocker" / "sub").string()},
              nullptr, &err) == 2);

    CHECK(cli({"simulate", "--steps", "300", "--thermalization", "10", "--lattice-size", "6", "--seed", "3",
               "--max-lag", "20", "--fit-max", "10", "--out", (dir / "ok").string()},
              &out) == 0);
    CHECK(fs::exists(dir / "ok" / "run_record.json"));
}

TEST_CASE("reproduce recipe writes its figure and CSVs") {
    TempDir dir;
    ExperimentConfig c = small_config(dir.path);
    c.model.measurement_steps = 600;
    const RunRecord r = cmd_reproduce("fig3", c);
    CHECK(fs::exists(dir / "fig3" / "fig3.svg"));
    CHECK(fs::exists(dir / "fig3" / "histogram_tau32.csv"));
    CHECK(fs::exists(dir / "fig3" / "kurtosis.csv"));
    CHECK(fs::exists(dir / "fig3" / "run_record.json"));
    CHECK(r.files.size() == 8);
}
