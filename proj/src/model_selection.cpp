#include "model_selection.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace phenoflow {

std::vector<FeatureVector> build_features(
    const std::vector<WeatherWeekly>& weekly, const std::vector<SoilTempSeries>& soil,
    const std::vector<std::pair<std::string, int>>& plot_years) {
    std::map<std::pair<int, int>, const WeatherWeekly*> by_year_week;
    for (const auto& w : weekly) by_year_week[{w.year, w.week}] = &w;
    std::map<std::pair<std::string, int>, double> soil_mean;
    for (const auto& s : soil) soil_mean[{s.plot_id, s.year}] = s.annual_mean;

    std::vector<FeatureVector> out;
    out.reserve(plot_years.size());
    for (const auto& [plot_id, year] : plot_years) {
        FeatureVector f;
        f.plot_id = plot_id;
        f.year = year;
        for (int w = 1; w <= kWeeksPerVariable; ++w) {
            auto it = by_year_week.find({year, w});
            if (it == by_year_week.end()) {
                fail(Errc::missing_week, "build_features: no weather for year " +
                                             std::to_string(year) + " week " + std::to_string(w));
            }
            f.values[static_cast<size_t>(w - 1)] = it->second->air_temp_c;
            f.values[static_cast<size_t>(kWeeksPerVariable + w - 1)] = it->second->precip_mm;
            f.values[static_cast<size_t>(2 * kWeeksPerVariable + w - 1)] =
                it->second->irradiance_wm2;
        }
        auto it = soil_mean.find({plot_id, year});
        if (it == soil_mean.end()) {
            fail(Errc::missing_soil, "build_features: no soil series for plot " + plot_id +
                                         " year " + std::to_string(year));
        }
        f.values[kSoilFeatureIndex] = it->second;
        out.push_back(std::move(f));
    }
    return out;
}

void split_train_test(const SampleSet& samples, double ratio, std::uint64_t seed,
                      SampleSet& train, SampleSet& test) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        fail(Errc::invalid_config, "split_train_test: ratio must be in (0, 1)");
    }
    std::map<int, std::vector<size_t>> by_year;
    for (size_t i = 0; i < samples.size(); ++i) {
        by_year[samples[i].features.year].push_back(i);
    }
    train.clear();
    test.clear();
    std::mt19937_64 rng(seed);
    for (auto& [year, idx] : by_year) {
        if (idx.size() < 5) {
            fail(Errc::too_few_samples_in_year,
                 "split_train_test: year " + std::to_string(year) + " has only " +
                     std::to_string(idx.size()) + " samples (need 5)");
        }
        auto n = idx.size();
        auto n_test = static_cast<size_t>(
            std::llround((1.0 - ratio) * static_cast<double>(n)));
        n_test = std::clamp<size_t>(n_test, 1, n - 1);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t i = 0; i < n; ++i) {
            (i < n_test ? test : train).push_back(samples[idx[i]]);
        }
    }
}

Eigen::MatrixXd feature_matrix(const SampleSet& samples) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), kFeatureCount);
    for (size_t i = 0; i < samples.size(); ++i) {
        for (int j = 0; j < kFeatureCount; ++j) {
            x(static_cast<Eigen::Index>(i), j) = samples[i].features.values[static_cast<size_t>(j)];
        }
    }
    return x;
}

Eigen::VectorXd target_vector(const SampleSet& samples) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (size_t i = 0; i < samples.size(); ++i) y[static_cast<Eigen::Index>(i)] = samples[i].target;
    return y;
}

double cross_validate(const SampleSet& train, const Hyperparams& hp, int k, std::uint64_t seed) {
    if (k < 2) {
        fail(Errc::invalid_config, "cross_validate: k must be at least 2");
    }
    if (train.size() < static_cast<size_t>(k)) {
        fail(Errc::too_few_points, "cross_validate: fewer samples than folds");
    }
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const size_t n = train.size();
    const size_t base = n / static_cast<size_t>(k);
    const size_t extra = n % static_cast<size_t>(k);
    double total = 0.0;
    size_t offset = 0;
    for (int fold = 0; fold < k; ++fold) {
        size_t fold_size = base + (static_cast<size_t>(fold) < extra ? 1 : 0);
        SampleSet fold_train;
        SampleSet fold_val;
        fold_train.reserve(n - fold_size);
        fold_val.reserve(fold_size);
        for (size_t i = 0; i < n; ++i) {
            const auto& s = train[order[i]];
            (i >= offset && i < offset + fold_size ? fold_val : fold_train).push_back(s);
        }
        offset += fold_size;

        try {
            MlpModel model = train_mlp(feature_matrix(fold_train), target_vector(fold_train), hp,
                                       seed + static_cast<std::uint64_t>(fold) + 1);
            Eigen::VectorXd pred = model.predict(feature_matrix(fold_val));
            total += (pred - target_vector(fold_val)).squaredNorm() /
                     static_cast<double>(fold_val.size());
        } catch (const Error& e) {
            fail(e.code(), "cross_validate fold " + std::to_string(fold) + ": " + e.what());
        }
    }
    return total / static_cast<double>(k);
}

SearchResult hyperparam_search(const SampleSet& train, int budget, std::uint64_t seed, int k) {
    return hyperparam_search(train, budget, seed, k,
                             [](const SampleSet& s, const Hyperparams& hp, int folds,
                                std::uint64_t cv_seed) {
                                 return cross_validate(s, hp, folds, cv_seed);
                             });
}

SearchResult hyperparam_search(const SampleSet& train, int budget, std::uint64_t seed, int k,
                               const CvEvaluator& evaluate_fn) {
    if (budget < 1) {
        fail(Errc::invalid_config, "hyperparam_search: budget must be at least 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> layer1_steps(1, 10);
    std::uniform_int_distribution<int> layer2_steps(0, 10);
    std::uniform_int_distribution<int> iter_steps(1, 10);
    std::uniform_int_distribution<int> patience_steps(1, 10);
    std::uniform_int_distribution<int> coin(0, 1);
    const double log_lo = std::log(1e-4);
    const double log_hi = std::log(1e-1);
    std::uniform_real_distribution<double> log_range(log_lo, log_hi);

    SearchResult result;
    result.best_cv_mse = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < budget; ++trial) {
        Hyperparams hp;
        hp.layer1 = 10 * layer1_steps(rng);
        hp.layer2 = 10 * layer2_steps(rng);
        hp.l2 = std::exp(log_range(rng));
        hp.solver = coin(rng) == 0 ? Solver::Adam : Solver::Lbfgs;
        hp.lr0 = std::exp(log_range(rng));
        hp.schedule = coin(rng) == 0 ? LrSchedule::Constant : LrSchedule::Adaptive;
        hp.max_iter = 1000 * iter_steps(rng);
        hp.patience = 10 * patience_steps(rng);

        double cv_mse =
            evaluate_fn(train, hp, k, seed + static_cast<std::uint64_t>(trial) * 1000003ull);
        result.trials.push_back({hp, cv_mse});
        if (cv_mse < result.best_cv_mse) {
            result.best_cv_mse = cv_mse;
            result.best = hp;
        }
    }
    return result;
}

EvalReport evaluate(const MlpModel& model, const SampleSet& test) {
    if (test.empty()) {
        fail(Errc::too_few_points, "evaluate: test set is empty");
    }
    EvalReport report;
    Eigen::VectorXd y = target_vector(test);
    Eigen::VectorXd pred = model.predict(feature_matrix(test));
    const auto n = static_cast<double>(test.size());
    report.test_mse = (pred - y).squaredNorm() / n;
    report.test_mae = (pred - y).cwiseAbs().sum() / n;
    Eigen::VectorXd naive = Eigen::VectorXd::Constant(y.size(), model.train_target_mean);
    report.naive_mse = (naive - y).squaredNorm() / n;
    report.naive_mae = (naive - y).cwiseAbs().sum() / n;
    if (report.naive_mse > 0.0) {
        report.test_r2 = 1.0 - report.test_mse / report.naive_mse;
    } else {
        report.test_r2 = report.test_mse == 0.0 ? 1.0 : 0.0;
    }
    return report;
}

} // namespace phenoflow
