#pragma once

#include "season_fit.hpp"
#include "synthetic.hpp"

#include <cstdint>
#include <string>

namespace phenoflow {

/// Everything one pipeline run needs. Input paths left empty resolve to
/// "<out_dir>/<name>.csv", so a synth run feeds fit/analyze/train/explain
/// with no further configuration.
struct PipelineConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 42;

    std::string ndvi_path;    // default <out_dir>/ndvi.csv
    std::string soil_path;    // default <out_dir>/soil.csv
    std::string weather_path; // default <out_dir>/weather_daily.csv
    std::string plots_path;   // default <out_dir>/plots.csv

    double qc_threshold = 0.80;
    FitOptions fit;

    double train_ratio = 0.8; // fraction of plot-years kept for training
    int tuning_budget = 6;    // random-search trials
    int cv_folds = 5;

    int shap_budget = 512;       // coalitions per explained instance
    int background_cap = 25;     // background rows drawn from the train split
    int shap_max_instances = 0;  // 0 = explain every QC-passing plot-year
    bool svg = true;             // season and bar-chart SVG emission

    SyntheticConfig synth;
};

/// Parses a JSON object whose keys override the defaults; unknown keys are
/// rejected so typos cannot silently fall back to defaults. The "synthetic"
/// block inherits the pipeline seed unless it sets its own.
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& config);

/// Throws InvalidConfig for out-of-range settings.
void validate_config(const PipelineConfig& config);

inline constexpr const char* kTargetNames[3] = {"sos", "pos", "peak"};

/// Orchestrates the analysis end to end. Each command reads and writes flat
/// files under config.out_dir, so commands can run in separate processes:
///
///   synth    -> ndvi.csv soil.csv weather_daily.csv plots.csv truth.csv
///   fit      -> fits.csv, seasons/<plot>_<year>.svg
///   analyze  -> phenology.csv linreg.csv report.json
///   train    -> <target>/model.json <target>/tuning.csv <target>/eval.json
///   explain  -> <target>/shap.csv <target>/aggregates.csv <target>/a_shap.csv
///               <target>/explain.json and bar-chart SVGs
///   all      -> all of the above for every target
///
/// All failures are phenoflow::Error; the C API maps codes to exit statuses.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config = {}) : config_(std::move(config)) {}

    PipelineConfig& config() { return config_; }
    const PipelineConfig& config() const { return config_; }

    void run_synth();
    void run_fit();
    void run_analyze();
    void run_train(const std::string& target);
    void run_explain(const std::string& target);
    void run_all();

    /// Dispatches by command name. train and explain take a target in
    /// {sos, pos, peak}; an empty target or "all" runs all three.
    void run(const std::string& command, const std::string& target = "");

private:
    PipelineConfig config_;
};

} // namespace phenoflow
