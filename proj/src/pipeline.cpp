#include "pipeline.hpp"

#include "csv.hpp"
#include "errors.hpp"
#include "kernel_shap.hpp"
#include "model_selection.hpp"
#include "parallel.hpp"
#include "phenology.hpp"
#include "stats.hpp"
#include "svg_plot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace phenoflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string input_path(const PipelineConfig& config, const std::string& explicit_path,
                       const char* name) {
    if (!explicit_path.empty()) return explicit_path;
    return (fs::path(config.out_dir) / name).string();
}

std::string out_path(const PipelineConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
}

/// Deterministic seed for a named sub-stream of the master seed.
std::uint64_t derive_seed(std::uint64_t base, const std::string& label) {
    return fit_seed(base, label, 0);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << text;
    if (!out) fail(Errc::io_error, "short write to " + path);
}

double round_to(double value, int digits) {
    double scale = std::pow(10.0, digits);
    return std::round(value * scale) / scale;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

enum class TargetKind { Sos, Pos, Peak };

TargetKind target_kind(const std::string& name) {
    if (name == "sos") return TargetKind::Sos;
    if (name == "pos") return TargetKind::Pos;
    if (name == "peak") return TargetKind::Peak;
    fail(Errc::invalid_config, "unknown target '" + name + "' (expected sos, pos or peak)");
}

double target_value(const PhenologyMetrics& m, TargetKind kind) {
    switch (kind) {
    case TargetKind::Sos: return m.sos;
    case TargetKind::Pos: return m.pos;
    default: return m.peak;
    }
}

// ---------------------------------------------------------------------------
// Config JSON

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(Errc::invalid_config,
                 std::string("config: unknown key '") + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void parse_fit_options(const json& j, FitOptions& fit) {
    reject_unknown_keys(j,
                        {"lambda", "restarts", "max_iter", "gtol", "xtol", "a_lo", "a_hi",
                         "b_lo", "b_hi", "c_lo", "c_hi", "d_lo", "d_hi"},
                        "fit");
    get_if_present(j, "lambda", fit.lambda);
    get_if_present(j, "restarts", fit.restarts);
    get_if_present(j, "max_iter", fit.max_iter);
    get_if_present(j, "gtol", fit.gtol);
    get_if_present(j, "xtol", fit.xtol);
    get_if_present(j, "a_lo", fit.a_lo);
    get_if_present(j, "a_hi", fit.a_hi);
    get_if_present(j, "b_lo", fit.b_lo);
    get_if_present(j, "b_hi", fit.b_hi);
    get_if_present(j, "c_lo", fit.c_lo);
    get_if_present(j, "c_hi", fit.c_hi);
    get_if_present(j, "d_lo", fit.d_lo);
    get_if_present(j, "d_hi", fit.d_hi);
}

void parse_synthetic(const json& j, SyntheticConfig& s) {
    reject_unknown_keys(
        j, {"seed",           "first_year",          "n_years",
            "transects",      "base_a1",             "base_p",
            "base_b1",        "base_b2",             "base_c",
            "base_d",         "soil_base_mean",      "soil_amplitude",
            "warming_offsets", "sos_sensitivity",    "pos_sensitivity",
            "peak_sensitivity", "air_anomaly_sd",    "precip_anomaly_sd",
            "irradiance_anomaly_sd", "air_gain",     "precip_gain",
            "irradiance_gain", "ndvi_noise_sd",      "plot_soil_jitter_sd",
            "season_jitter_sd", "amplitude_jitter_sd", "baseline_jitter_sd",
            "soil_noise_sd",  "weather_noise_sd",    "corrupt_fraction",
            "week_start",     "week_end",            "week_step"},
        "synthetic");
    get_if_present(j, "seed", s.seed);
    get_if_present(j, "first_year", s.first_year);
    get_if_present(j, "n_years", s.n_years);
    get_if_present(j, "transects", s.transects);
    get_if_present(j, "base_a1", s.base_a1);
    get_if_present(j, "base_p", s.base_p);
    get_if_present(j, "base_b1", s.base_b1);
    get_if_present(j, "base_b2", s.base_b2);
    get_if_present(j, "base_c", s.base_c);
    get_if_present(j, "base_d", s.base_d);
    get_if_present(j, "soil_base_mean", s.soil_base_mean);
    get_if_present(j, "soil_amplitude", s.soil_amplitude);
    if (auto it = j.find("warming_offsets"); it != j.end()) {
        if (!it->is_array() || it->size() != 5) {
            fail(Errc::invalid_config, "config: warming_offsets must hold 5 numbers");
        }
        for (int i = 0; i < 5; ++i) s.warming_offsets[i] = (*it)[static_cast<size_t>(i)];
    }
    get_if_present(j, "sos_sensitivity", s.sos_sensitivity);
    get_if_present(j, "pos_sensitivity", s.pos_sensitivity);
    get_if_present(j, "peak_sensitivity", s.peak_sensitivity);
    get_if_present(j, "air_anomaly_sd", s.air_anomaly_sd);
    get_if_present(j, "precip_anomaly_sd", s.precip_anomaly_sd);
    get_if_present(j, "irradiance_anomaly_sd", s.irradiance_anomaly_sd);
    get_if_present(j, "air_gain", s.air_gain);
    get_if_present(j, "precip_gain", s.precip_gain);
    get_if_present(j, "irradiance_gain", s.irradiance_gain);
    get_if_present(j, "ndvi_noise_sd", s.ndvi_noise_sd);
    get_if_present(j, "plot_soil_jitter_sd", s.plot_soil_jitter_sd);
    get_if_present(j, "season_jitter_sd", s.season_jitter_sd);
    get_if_present(j, "amplitude_jitter_sd", s.amplitude_jitter_sd);
    get_if_present(j, "baseline_jitter_sd", s.baseline_jitter_sd);
    get_if_present(j, "soil_noise_sd", s.soil_noise_sd);
    get_if_present(j, "weather_noise_sd", s.weather_noise_sd);
    get_if_present(j, "corrupt_fraction", s.corrupt_fraction);
    get_if_present(j, "week_start", s.week_start);
    get_if_present(j, "week_end", s.week_end);
    get_if_present(j, "week_step", s.week_step);
}

} // namespace

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::invalid_config, std::string("config: ") + e.what());
    }
    if (!j.is_object()) fail(Errc::invalid_config, "config: top level must be a JSON object");

    PipelineConfig config;
    try {
        reject_unknown_keys(j,
                            {"out_dir", "seed", "ndvi_path", "soil_path", "weather_path",
                             "plots_path", "qc_threshold", "fit", "train_ratio",
                             "tuning_budget", "cv_folds", "shap_budget", "background_cap",
                             "shap_max_instances", "svg", "synthetic"},
                            "the top-level object");
        get_if_present(j, "out_dir", config.out_dir);
        get_if_present(j, "seed", config.seed);
        get_if_present(j, "ndvi_path", config.ndvi_path);
        get_if_present(j, "soil_path", config.soil_path);
        get_if_present(j, "weather_path", config.weather_path);
        get_if_present(j, "plots_path", config.plots_path);
        get_if_present(j, "qc_threshold", config.qc_threshold);
        if (auto it = j.find("fit"); it != j.end()) parse_fit_options(*it, config.fit);
        get_if_present(j, "train_ratio", config.train_ratio);
        get_if_present(j, "tuning_budget", config.tuning_budget);
        get_if_present(j, "cv_folds", config.cv_folds);
        get_if_present(j, "shap_budget", config.shap_budget);
        get_if_present(j, "background_cap", config.background_cap);
        get_if_present(j, "shap_max_instances", config.shap_max_instances);
        get_if_present(j, "svg", config.svg);
        config.synth.seed = config.seed; // one master seed unless overridden below
        if (auto it = j.find("synthetic"); it != j.end()) parse_synthetic(*it, config.synth);
    } catch (const json::exception& e) {
        fail(Errc::invalid_config, std::string("config: ") + e.what());
    }
    validate_config(config);
    return config;
}

std::string config_to_json(const PipelineConfig& config) {
    json j;
    j["out_dir"] = config.out_dir;
    j["seed"] = config.seed;
    j["ndvi_path"] = config.ndvi_path;
    j["soil_path"] = config.soil_path;
    j["weather_path"] = config.weather_path;
    j["plots_path"] = config.plots_path;
    j["qc_threshold"] = config.qc_threshold;
    json& fit = j["fit"];
    fit["lambda"] = config.fit.lambda;
    fit["restarts"] = config.fit.restarts;
    fit["max_iter"] = config.fit.max_iter;
    fit["gtol"] = config.fit.gtol;
    fit["xtol"] = config.fit.xtol;
    fit["a_lo"] = config.fit.a_lo;
    fit["a_hi"] = config.fit.a_hi;
    fit["b_lo"] = config.fit.b_lo;
    fit["b_hi"] = config.fit.b_hi;
    fit["c_lo"] = config.fit.c_lo;
    fit["c_hi"] = config.fit.c_hi;
    fit["d_lo"] = config.fit.d_lo;
    fit["d_hi"] = config.fit.d_hi;
    j["train_ratio"] = config.train_ratio;
    j["tuning_budget"] = config.tuning_budget;
    j["cv_folds"] = config.cv_folds;
    j["shap_budget"] = config.shap_budget;
    j["background_cap"] = config.background_cap;
    j["shap_max_instances"] = config.shap_max_instances;
    j["svg"] = config.svg;
    json& s = j["synthetic"];
    s["seed"] = config.synth.seed;
    s["first_year"] = config.synth.first_year;
    s["n_years"] = config.synth.n_years;
    s["transects"] = config.synth.transects;
    s["base_a1"] = config.synth.base_a1;
    s["base_p"] = config.synth.base_p;
    s["base_b1"] = config.synth.base_b1;
    s["base_b2"] = config.synth.base_b2;
    s["base_c"] = config.synth.base_c;
    s["base_d"] = config.synth.base_d;
    s["soil_base_mean"] = config.synth.soil_base_mean;
    s["soil_amplitude"] = config.synth.soil_amplitude;
    s["warming_offsets"] = config.synth.warming_offsets;
    s["sos_sensitivity"] = config.synth.sos_sensitivity;
    s["pos_sensitivity"] = config.synth.pos_sensitivity;
    s["peak_sensitivity"] = config.synth.peak_sensitivity;
    s["air_anomaly_sd"] = config.synth.air_anomaly_sd;
    s["precip_anomaly_sd"] = config.synth.precip_anomaly_sd;
    s["irradiance_anomaly_sd"] = config.synth.irradiance_anomaly_sd;
    s["air_gain"] = config.synth.air_gain;
    s["precip_gain"] = config.synth.precip_gain;
    s["irradiance_gain"] = config.synth.irradiance_gain;
    s["ndvi_noise_sd"] = config.synth.ndvi_noise_sd;
    s["plot_soil_jitter_sd"] = config.synth.plot_soil_jitter_sd;
    s["season_jitter_sd"] = config.synth.season_jitter_sd;
    s["amplitude_jitter_sd"] = config.synth.amplitude_jitter_sd;
    s["baseline_jitter_sd"] = config.synth.baseline_jitter_sd;
    s["soil_noise_sd"] = config.synth.soil_noise_sd;
    s["weather_noise_sd"] = config.synth.weather_noise_sd;
    s["corrupt_fraction"] = config.synth.corrupt_fraction;
    s["week_start"] = config.synth.week_start;
    s["week_end"] = config.synth.week_end;
    s["week_step"] = config.synth.week_step;
    return j.dump(2) + "\n";
}

void validate_config(const PipelineConfig& config) {
    auto bad = [](const std::string& what) {
        fail(Errc::invalid_config, "config: " + what);
    };
    if (config.out_dir.empty()) bad("out_dir must not be empty");
    if (!(config.qc_threshold > 0.0 && config.qc_threshold <= 1.0)) {
        bad("qc_threshold must lie in (0, 1]");
    }
    if (!(config.train_ratio > 0.0 && config.train_ratio < 1.0)) {
        bad("train_ratio must lie in (0, 1)");
    }
    if (config.tuning_budget < 1) bad("tuning_budget must be at least 1");
    if (config.cv_folds < 2) bad("cv_folds must be at least 2");
    if (config.shap_budget < 2 * kFeatureCount) {
        bad("shap_budget must be at least " + std::to_string(2 * kFeatureCount));
    }
    if (config.background_cap < 1) bad("background_cap must be at least 1");
    if (config.shap_max_instances < 0) bad("shap_max_instances must be non-negative");
    const FitOptions& f = config.fit;
    if (f.lambda < 0.0) bad("fit.lambda must be non-negative");
    if (f.restarts < 0) bad("fit.restarts must be non-negative");
    if (f.max_iter < 1) bad("fit.max_iter must be at least 1");
    if (!(f.a_lo < f.a_hi) || !(f.b_lo < f.b_hi) || !(f.c_lo < f.c_hi) || !(f.d_lo < f.d_hi)) {
        bad("fit bounds must satisfy lo < hi");
    }
    if (f.b_hi >= 0.0) bad("fit.b_hi must be negative");
    if (f.c_lo <= 0.0) bad("fit.c_lo must be positive");
}

// ---------------------------------------------------------------------------
// Commands

void Pipeline::run_synth() {
    validate_config(config_);
    write_synthetic(generate_synthetic(config_.synth), config_.out_dir);
}

namespace {

struct SeriesGroup {
    std::string plot_id;
    int year = 0;
    std::vector<NdviSample> samples;
};

std::vector<SeriesGroup> group_plot_years(const std::vector<NdviSample>& ndvi) {
    std::vector<SeriesGroup> groups;
    for (const auto& s : ndvi) { // ingest_ndvi sorts by (plot, year, week)
        if (groups.empty() || groups.back().plot_id != s.plot_id ||
            groups.back().year != s.year) {
            groups.push_back({s.plot_id, s.year, {}});
        }
        groups.back().samples.push_back(s);
    }
    return groups;
}

std::map<std::string, Category> plot_categories(const PipelineConfig& config) {
    std::map<std::string, Category> categories;
    std::string path = input_path(config, config.plots_path, "plots.csv");
    if (!fs::exists(path)) return categories; // plot metadata is optional
    for (const auto& p : ingest_plots(path)) categories[p.plot_id] = p.category;
    return categories;
}

void write_season_plots(const PipelineConfig& config, const std::vector<SeriesGroup>& groups,
                        const std::vector<PlotYearFit>& fits) {
    auto categories = plot_categories(config);
    fs::path dir = fs::path(config.out_dir) / "seasons";
    fs::create_directories(dir);
    for (size_t i = 0; i < fits.size(); ++i) {
        const PlotYearFit& f = fits[i];
        if (!f.fit.converged) continue;
        SeasonPlot plot;
        plot.title = f.plot_id + " " + std::to_string(f.year);
        for (const auto& s : groups[i].samples) plot.samples.push_back({s.week, s.ndvi});
        double lo = groups[i].samples.front().week;
        double hi = groups[i].samples.back().week;
        for (double x = lo; x <= hi + 1e-9; x += 0.25) {
            plot.curve.push_back({x, eval_double_logistic(f.fit.params, x)});
        }
        if (!f.fit.degenerate) {
            plot.sos = estimate_sos(f.fit);
            plot.pos = estimate_pos(f.fit);
        }
        if (auto it = categories.find(f.plot_id); it != categories.end()) {
            plot.color = category_color(it->second);
        }
        write_season_svg((dir / (f.plot_id + "_" + std::to_string(f.year) + ".svg")).string(),
                         plot);
    }
}

} // namespace

void Pipeline::run_fit() {
    validate_config(config_);
    fs::create_directories(config_.out_dir);
    std::string ndvi_path = input_path(config_, config_.ndvi_path, "ndvi.csv");
    auto groups = group_plot_years(ingest_ndvi(ndvi_path));
    if (groups.empty()) {
        fail(Errc::no_convergence, "fit: no plot-year series found in " + ndvi_path);
    }

    std::vector<PlotYearFit> fits(groups.size());
    parallel_for(groups.size(), [&](size_t i) {
        FitOptions options = config_.fit;
        options.seed = fit_seed(config_.seed, groups[i].plot_id, groups[i].year);
        fits[i].plot_id = groups[i].plot_id;
        fits[i].year = groups[i].year;
        fits[i].fit = try_fit_season(groups[i].samples, options);
    });

    size_t n_converged = 0;
    for (const auto& f : fits) n_converged += f.fit.converged ? 1 : 0;
    if (n_converged == 0) {
        fail(Errc::no_convergence,
             "fit: none of " + std::to_string(fits.size()) + " plot-years converged");
    }

    write_fits_csv(out_path(config_, "fits.csv"), fits);
    if (config_.svg) write_season_plots(config_, groups, fits);
}

namespace {

json regression_block(const LinRegResult& reg, bool weeks_scale) {
    json t;
    t["n"] = reg.n;
    t["slope"] = reg.slope;
    t["slope_se"] = reg.slope_se;
    t["intercept"] = reg.intercept;
    t["intercept_se"] = reg.intercept_se;
    t["r2"] = reg.r2;
    t["p_slope"] = reg.p_slope;
    t["p_intercept"] = reg.p_intercept;
    json rounded;
    rounded["slope"] = round_to(reg.slope, 3);
    rounded["r2"] = round_to(reg.r2, 3);
    rounded["p_slope"] = round_to(reg.p_slope, 4);
    if (weeks_scale && reg.slope != 0.0) { // days/degree only makes sense for week-valued targets
        SlopeConversion conv = weeks_per_degc_to_days(reg.slope);
        t["days_per_degc"] = conv.days_per_degc;
        t["degc_per_week"] = conv.degc_per_week;
        rounded["days_per_degc"] = round_to(conv.days_per_degc, 3);
        rounded["degc_per_week"] = round_to(conv.degc_per_week, 2);
    }
    t["rounded"] = rounded;
    return t;
}

} // namespace

void Pipeline::run_analyze() {
    validate_config(config_);
    auto fits = read_fits_csv(out_path(config_, "fits.csv"));
    auto soil = ingest_soil(input_path(config_, config_.soil_path, "soil.csv"));

    QcPartition qc = apply_qc(fits, config_.qc_threshold);
    if (qc.kept.size() < 3) {
        fail(Errc::too_few_points, "analyze: only " + std::to_string(qc.kept.size()) + " of " +
                                       std::to_string(fits.size()) +
                                       " fits passed QC; need at least 3");
    }

    std::vector<PhenologyMetrics> rows;
    rows.reserve(fits.size());
    for (const auto& f : fits) {
        rows.push_back(extract_phenology(f.plot_id, f.year, f.fit, config_.qc_threshold));
    }
    write_phenology_csv(out_path(config_, "phenology.csv"), rows);

    std::map<std::pair<std::string, int>, double> soil_mean;
    for (const auto& s : soil) soil_mean[{s.plot_id, s.year}] = s.annual_mean;

    std::vector<double> x, y_sos, y_pos, y_peak;
    for (const auto& m : rows) {
        if (!m.qc_pass) continue;
        auto it = soil_mean.find({m.plot_id, m.year});
        if (it == soil_mean.end()) {
            fail(Errc::missing_soil,
                 "analyze: no soil series for " + m.plot_id + " " + std::to_string(m.year));
        }
        x.push_back(it->second);
        y_sos.push_back(m.sos);
        y_pos.push_back(m.pos);
        y_peak.push_back(m.peak);
    }

    LinRegResult reg_sos = ols_fit(x, y_sos);
    LinRegResult reg_pos = ols_fit(x, y_pos);
    LinRegResult reg_peak = ols_fit(x, y_peak);
    write_linreg_csv(out_path(config_, "linreg.csv"),
                     {{"sos", reg_sos}, {"pos", reg_pos}, {"peak", reg_peak}});

    json report;
    report["n_fits"] = fits.size();
    report["n_qc_pass"] = qc.kept.size();
    report["n_excluded"] = qc.excluded.size();
    report["exclusion_rate"] = qc.exclusion_rate;
    report["qc_threshold"] = config_.qc_threshold;
    report["means"] = {{"sos", mean_of(y_sos)},
                       {"pos", mean_of(y_pos)},
                       {"peak", mean_of(y_peak)},
                       {"soil_annual_mean", mean_of(x)}};
    report["targets"]["sos"] = regression_block(reg_sos, true);
    report["targets"]["pos"] = regression_block(reg_pos, true);
    report["targets"]["peak"] = regression_block(reg_peak, false);
    write_text_file(out_path(config_, "report.json"), report.dump(2) + "\n");
}

namespace {

/// QC-passing phenology rows joined with their features, phenology.csv order.
SampleSet assemble_samples(const PipelineConfig& config, TargetKind kind) {
    auto rows = read_phenology_csv(out_path(config, "phenology.csv"));
    auto weekly = aggregate_weather_weekly(
        ingest_weather_daily(input_path(config, config.weather_path, "weather_daily.csv")));
    auto soil = ingest_soil(input_path(config, config.soil_path, "soil.csv"));

    std::vector<std::pair<std::string, int>> keys;
    std::vector<double> targets;
    for (const auto& m : rows) {
        if (!m.qc_pass) continue;
        keys.push_back({m.plot_id, m.year});
        targets.push_back(target_value(m, kind));
    }
    auto features = build_features(weekly, soil, keys);

    SampleSet samples(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        samples[i].features = features[i];
        samples[i].target = targets[i];
    }
    return samples;
}

json hyperparams_block(const Hyperparams& hp) {
    json h;
    h["layer1"] = hp.layer1;
    h["layer2"] = hp.layer2;
    h["l2"] = hp.l2;
    h["solver"] = to_string(hp.solver);
    h["lr0"] = hp.lr0;
    h["schedule"] = to_string(hp.schedule);
    h["max_iter"] = hp.max_iter;
    h["patience"] = hp.patience;
    return h;
}

void write_tuning_csv(const std::string& path, const std::vector<TuningTrial>& trials) {
    CsvWriter out(path);
    out.write_row({"trial", "layer1", "layer2", "l2", "solver", "lr0", "schedule", "max_iter",
                   "patience", "cv_mse"});
    for (size_t i = 0; i < trials.size(); ++i) {
        const Hyperparams& hp = trials[i].hp;
        out.write_row({std::to_string(i), std::to_string(hp.layer1), std::to_string(hp.layer2),
                       format_double(hp.l2), to_string(hp.solver), format_double(hp.lr0),
                       to_string(hp.schedule), std::to_string(hp.max_iter),
                       std::to_string(hp.patience), format_double(trials[i].cv_mse)});
    }
}

} // namespace

void Pipeline::run_train(const std::string& target) {
    validate_config(config_);
    TargetKind kind = target_kind(target);
    SampleSet samples = assemble_samples(config_, kind);

    SampleSet train, test;
    split_train_test(samples, config_.train_ratio, config_.seed, train, test);

    std::uint64_t search_seed = derive_seed(config_.seed, "train/" + target);
    SearchResult search =
        hyperparam_search(train, config_.tuning_budget, search_seed, config_.cv_folds);
    MlpModel model = train_mlp(feature_matrix(train), target_vector(train), search.best,
                               derive_seed(config_.seed, "final/" + target));
    EvalReport report = evaluate(model, test);

    fs::path dir = fs::path(config_.out_dir) / target;
    fs::create_directories(dir);
    write_text_file((dir / "model.json").string(), model_to_json(model));
    write_tuning_csv((dir / "tuning.csv").string(), search.trials);

    json eval;
    eval["target"] = target;
    eval["seed"] = config_.seed;
    eval["n_train"] = train.size();
    eval["n_test"] = test.size();
    eval["hyperparams"] = hyperparams_block(search.best);
    eval["cv_mse"] = search.best_cv_mse;
    eval["test_mse"] = report.test_mse;
    eval["test_mae"] = report.test_mae;
    eval["test_r2"] = report.test_r2;
    eval["naive_mse"] = report.naive_mse;
    eval["naive_mae"] = report.naive_mae;
    eval["final_loss"] = model.final_loss;
    eval["n_iter"] = model.n_iter;
    write_text_file((dir / "eval.json").string(), eval.dump(2) + "\n");
}

namespace {

Eigen::VectorXd feature_row(const FeatureVector& fv) {
    return Eigen::Map<const Eigen::VectorXd>(fv.values.data(), kFeatureCount);
}

/// Seeded subsample of the training rows, original order preserved.
Eigen::MatrixXd background_matrix(const SampleSet& train, int cap, std::uint64_t seed) {
    std::vector<size_t> picked(train.size());
    std::iota(picked.begin(), picked.end(), size_t{0});
    if (train.size() > static_cast<size_t>(cap)) {
        std::mt19937_64 rng(seed);
        std::shuffle(picked.begin(), picked.end(), rng);
        picked.resize(static_cast<size_t>(cap));
        std::sort(picked.begin(), picked.end());
    }
    Eigen::MatrixXd background(static_cast<Eigen::Index>(picked.size()), kFeatureCount);
    for (size_t i = 0; i < picked.size(); ++i) {
        background.row(static_cast<Eigen::Index>(i)) = feature_row(train[picked[i]].features);
    }
    return background;
}

void write_shap_csv(const std::string& path, const std::string& target,
                    const std::vector<ShapExplanation>& expl) {
    CsvWriter out(path);
    std::vector<std::string> header = {"plot_id", "year", "target", "base"};
    for (int i = 1; i <= kFeatureCount; ++i) header.push_back("phi_" + std::to_string(i));
    header.push_back("reconstructed");
    header.push_back("prediction");
    out.write_row(header);
    for (const auto& e : expl) {
        std::vector<std::string> row = {e.plot_id, std::to_string(e.year), target,
                                        format_double(e.base_value)};
        for (int i = 0; i < kFeatureCount; ++i) row.push_back(format_double(e.phi[i]));
        row.push_back(format_double(e.reconstructed));
        row.push_back(format_double(e.prediction));
        out.write_row(row);
    }
}

void write_aggregates_csv(const std::string& path, const std::vector<AggregatedShap>& rows) {
    CsvWriter out(path);
    out.write_row({"plot_id", "year", "shap_air", "shap_precip", "shap_irr", "shap_soil"});
    for (const auto& r : rows) {
        out.write_row({r.plot_id, std::to_string(r.year), format_double(r.shap_air),
                       format_double(r.shap_precip), format_double(r.shap_irr),
                       format_double(r.shap_soil)});
    }
}

void write_a_shap_csv(const std::string& path, const AShapTotals& totals) {
    CsvWriter out(path);
    out.write_row({"variable", "a_shap"});
    out.write_row({"air", format_double(totals.air)});
    out.write_row({"precip", format_double(totals.precip)});
    out.write_row({"irr", format_double(totals.irr)});
    out.write_row({"soil", format_double(totals.soil)});
}

void write_explain_svgs(const PipelineConfig& config, const std::string& target,
                        const fs::path& dir, const AShapTotals& totals,
                        const std::vector<AggregatedShap>& agg) {
    BarChart chart;
    chart.title = "A_SHAP by variable (" + target + ")";
    chart.y_label = "sum |SHAP|";
    chart.bars = {{"air", totals.air, "#4878a8"},
                  {"precip", totals.precip, "#4878a8"},
                  {"irr", totals.irr, "#4878a8"},
                  {"soil", totals.soil, "#4878a8"}};
    write_bar_chart_svg((dir / "a_shap.svg").string(), chart);

    std::map<int, std::pair<double, int>> by_year;
    for (const auto& r : agg) {
        auto& acc = by_year[r.year];
        acc.first += r.shap_soil;
        acc.second += 1;
    }
    BarChart years;
    years.title = "Mean soil SHAP by year (" + target + ")";
    years.y_label = "mean SHAP";
    for (const auto& [year, acc] : by_year) {
        years.bars.push_back({std::to_string(year), acc.first / acc.second, "#4878a8"});
    }
    write_bar_chart_svg((dir / "shap_soil_by_year.svg").string(), years);

    auto categories = plot_categories(config);
    if (categories.empty()) return;
    std::map<Category, std::pair<double, int>> by_cat;
    for (const auto& r : agg) {
        auto it = categories.find(r.plot_id);
        if (it == categories.end()) continue;
        auto& acc = by_cat[it->second];
        acc.first += r.shap_soil;
        acc.second += 1;
    }
    BarChart cats;
    cats.title = "Mean soil SHAP by warming category (" + target + ")";
    cats.y_label = "mean SHAP";
    for (const auto& [cat, acc] : by_cat) {
        cats.bars.push_back({to_string(cat), acc.first / acc.second, category_color(cat)});
    }
    write_bar_chart_svg((dir / "shap_soil_by_category.svg").string(), cats);
}

} // namespace

void Pipeline::run_explain(const std::string& target) {
    validate_config(config_);
    TargetKind kind = target_kind(target);
    fs::path dir = fs::path(config_.out_dir) / target;

    MlpModel model = model_from_json(read_text_file((dir / "model.json").string()));
    if (model.net.layer_sizes.empty() || model.net.layer_sizes.front() != kFeatureCount) {
        fail(Errc::invalid_config, "explain: model in " + (dir / "model.json").string() +
                                       " does not take " + std::to_string(kFeatureCount) +
                                       " features");
    }

    SampleSet samples = assemble_samples(config_, kind);
    SampleSet train, test;
    split_train_test(samples, config_.train_ratio, config_.seed, train, test);
    Eigen::MatrixXd background = background_matrix(
        train, config_.background_cap, derive_seed(config_.seed, "background/" + target));

    size_t n_instances = samples.size();
    if (config_.shap_max_instances > 0) {
        n_instances = std::min(n_instances, static_cast<size_t>(config_.shap_max_instances));
    }

    BatchPredictor predict = [&model](const Eigen::MatrixXd& rows) {
        return model.predict(rows);
    };
    std::uint64_t shap_seed = derive_seed(config_.seed, "shap/" + target);
    std::vector<ShapExplanation> explanations(n_instances);
    parallel_for(n_instances, [&](size_t i) {
        const FeatureVector& fv = samples[i].features;
        ShapOptions options;
        options.n_coalitions = config_.shap_budget;
        options.seed = fit_seed(shap_seed, fv.plot_id, fv.year);
        explanations[i] = kernel_shap(predict, feature_row(fv), background, options);
        explanations[i].plot_id = fv.plot_id;
        explanations[i].year = fv.year;
    });

    double worst_gap = 0.0;
    size_t worst_index = 0;
    for (size_t i = 0; i < explanations.size(); ++i) {
        double gap = std::fabs(explanations[i].reconstructed - explanations[i].prediction);
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_index = i;
        }
    }
    if (worst_gap > 1e-6) {
        const auto& e = explanations[worst_index];
        fail(Errc::additivity_violation,
             "explain: base + sum(phi) misses the prediction by " + format_double(worst_gap) +
                 " for " + e.plot_id + " " + std::to_string(e.year));
    }

    std::vector<AggregatedShap> aggregates;
    aggregates.reserve(explanations.size());
    for (const auto& e : explanations) aggregates.push_back(aggregate_weekly(e));
    AShapTotals totals = a_shap(aggregates);

    write_shap_csv((dir / "shap.csv").string(), target, explanations);
    write_aggregates_csv((dir / "aggregates.csv").string(), aggregates);
    write_a_shap_csv((dir / "a_shap.csv").string(), totals);

    json summary;
    summary["target"] = target;
    summary["n_instances"] = explanations.size();
    summary["background_size"] = background.rows();
    summary["shap_budget"] = config_.shap_budget;
    summary["base_value"] = explanations.empty() ? 0.0 : explanations.front().base_value;
    summary["max_additivity_gap"] = worst_gap;
    summary["a_shap"] = {{"air", totals.air},
                         {"precip", totals.precip},
                         {"irr", totals.irr},
                         {"soil", totals.soil}};
    std::vector<double> soil_values, soil_shap;
    for (size_t i = 0; i < explanations.size(); ++i) {
        soil_values.push_back(samples[i].features.values[kSoilFeatureIndex]);
        soil_shap.push_back(aggregates[i].shap_soil);
    }
    try {
        summary["pearson_soil_shap"] = shap_soil_correlation(soil_values, soil_shap);
    } catch (const Error& e) {
        if (e.code() != Errc::constant_series && e.code() != Errc::too_few_points) throw;
        summary["pearson_soil_shap"] = nullptr;
    }
    write_text_file((dir / "explain.json").string(), summary.dump(2) + "\n");

    if (config_.svg) write_explain_svgs(config_, target, dir, totals, aggregates);
}

void Pipeline::run_all() {
    run_synth();
    run_fit();
    run_analyze();
    for (const char* target : kTargetNames) {
        run_train(target);
        run_explain(target);
    }
}

void Pipeline::run(const std::string& command, const std::string& target) {
    if (command == "synth") return run_synth();
    if (command == "fit") return run_fit();
    if (command == "analyze") return run_analyze();
    if (command == "all") return run_all();
    if (command == "train" || command == "explain") {
        auto run_one = [&](const std::string& t) {
            command == "train" ? run_train(t) : run_explain(t);
        };
        if (target.empty() || target == "all") {
            for (const char* t : kTargetNames) run_one(t);
        } else {
            run_one(target);
        }
        return;
    }
    fail(Errc::invalid_config, "unknown command '" + command +
                                   "' (expected synth, fit, analyze, train, explain or all)");
}

} // namespace phenoflow
