#pragma once

#include "data.hpp"
#include "mlp.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace phenoflow {

struct LabeledSample {
    FeatureVector features;
    double target = 0.0;
};

using SampleSet = std::vector<LabeledSample>;

struct EvalReport {
    double cv_mse = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    double test_r2 = 0.0;
    double naive_mse = 0.0;
    double naive_mae = 0.0;
};

struct TuningTrial {
    Hyperparams hp;
    double cv_mse = 0.0;
};

struct SearchResult {
    Hyperparams best;
    double best_cv_mse = 0.0;
    std::vector<TuningTrial> trials;
};

/// One 79-entry vector per requested plot-year: the year's 26 weekly means
/// of air temperature, precipitation and irradiance, then the plot-year's
/// annual mean soil temperature. Throws MissingWeek / MissingSoil.
std::vector<FeatureVector> build_features(
    const std::vector<WeatherWeekly>& weekly, const std::vector<SoilTempSeries>& soil,
    const std::vector<std::pair<std::string, int>>& plot_years);

/// Year-stratified split: within each year round((1 - ratio) * n) samples,
/// at least 1 and at most n - 1, go to test. Throws TooFewSamplesInYear
/// when a year holds fewer than 5 samples.
void split_train_test(const SampleSet& samples, double ratio, std::uint64_t seed,
                      SampleSet& train, SampleSet& test);

Eigen::MatrixXd feature_matrix(const SampleSet& samples);
Eigen::VectorXd target_vector(const SampleSet& samples);

/// Mean validation MSE over k shuffled contiguous folds (the first n % k
/// folds get the extra sample). Training errors are rethrown with the fold
/// index prepended.
double cross_validate(const SampleSet& train, const Hyperparams& hp, int k, std::uint64_t seed);

using CvEvaluator =
    std::function<double(const SampleSet&, const Hyperparams&, int, std::uint64_t)>;

/// Budgeted random search over the hyperparameter space: uniform over the
/// discrete sets, log-uniform over l2 and lr0. Ties keep the earliest trial.
SearchResult hyperparam_search(const SampleSet& train, int budget, std::uint64_t seed, int k = 5);
SearchResult hyperparam_search(const SampleSet& train, int budget, std::uint64_t seed, int k,
                               const CvEvaluator& evaluate_fn);

/// Test metrics plus the naive baseline that always predicts the training
/// target mean; test_r2 = 1 - test_mse / naive_mse.
EvalReport evaluate(const MlpModel& model, const SampleSet& test);

} // namespace phenoflow
