#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace phenoflow {

// Input layout: air temperature weeks 1-26, precipitation weeks 1-26,
// irradiance weeks 1-26, then the annual mean soil temperature.
inline constexpr int kFeatureCount = 79;
inline constexpr int kWeeksPerVariable = 26;
inline constexpr int kSoilFeatureIndex = 78;

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::string plot_id;
    int year = 0;
};

enum class Solver { Adam, Lbfgs };
enum class LrSchedule { Constant, Adaptive };

std::string to_string(Solver solver);
std::string to_string(LrSchedule schedule);
Solver solver_from_string(std::string_view text);
LrSchedule schedule_from_string(std::string_view text);

struct Hyperparams {
    int layer1 = 50;      // first hidden layer width
    int layer2 = 0;       // second hidden layer width, 0 = single hidden layer
    double l2 = 1e-3;     // weight penalty coefficient
    Solver solver = Solver::Adam;
    double lr0 = 1e-3;    // initial learning rate (Adam only)
    LrSchedule schedule = LrSchedule::Constant;
    int max_iter = 8000;
    int patience = 50;    // iterations without 1e-6 improvement before stopping
};

struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<char> constant_feature; // sd was 0, replaced with 1

    static Scaler fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd transform_row(const Eigen::VectorXd& x) const;
};

/// Bare network: rectified-linear hidden layers, identity output. Weights
/// are (out x in); forward consumes row-per-sample matrices of already
/// scaled features.
struct MlpNet {
    std::vector<int> layer_sizes; // [in, h1, (h2), 1]
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;
    /// 0.5 * MSE + l2 * sum of squared weights (biases unpenalized).
    double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) const;
    void gradients(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                   std::vector<Eigen::MatrixXd>& grad_w,
                   std::vector<Eigen::VectorXd>& grad_b) const;

    // Flat views used by the quasi-newton solver and gradient checks.
    Eigen::Index parameter_count() const;
    Eigen::VectorXd to_vector() const;
    void from_vector(const Eigen::VectorXd& v);
};

/// Fan-in/fan-out scaled uniform initialization, biases zero.
MlpNet init_net(const std::vector<int>& layer_sizes, std::uint64_t seed);

struct MlpModel {
    MlpNet net;
    Scaler scaler;
    Hyperparams hp;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    int n_iter = 0;
    double train_target_mean = 0.0; // naive-baseline prediction

    /// Predictions for raw (unscaled) feature rows.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    double predict_one(const Eigen::VectorXd& x) const;
};

/// Trains on raw features (z-scored internally). Throws NonFiniteLoss with
/// the offending iteration on divergence.
MlpModel train_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                   std::uint64_t seed);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

} // namespace phenoflow
