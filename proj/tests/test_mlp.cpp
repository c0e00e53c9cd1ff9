#include "errors.hpp"
#include "mlp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace phenoflow;
using testutil::code_of;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    }
    return m;
}

/// Max relative error of the analytic gradient against central differences
/// over a random sample of coordinates.
double max_grad_rel_err(MlpNet& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        double l2, int n_coords, std::uint64_t seed) {
    std::vector<Eigen::MatrixXd> grad_w;
    std::vector<Eigen::VectorXd> grad_b;
    net.gradients(x, y, l2, grad_w, grad_b);

    // flatten analytic gradient in to_vector order (row-major weights, then biases)
    Eigen::VectorXd analytic(net.parameter_count());
    Eigen::Index at = 0;
    for (size_t l = 0; l < grad_w.size(); ++l) {
        for (Eigen::Index i = 0; i < grad_w[l].rows(); ++i) {
            for (Eigen::Index j = 0; j < grad_w[l].cols(); ++j) analytic[at++] = grad_w[l](i, j);
        }
        for (Eigen::Index i = 0; i < grad_b[l].size(); ++i) analytic[at++] = grad_b[l][i];
    }
    REQUIRE(at == net.parameter_count());

    Eigen::VectorXd theta = net.to_vector();
    auto loss_at = [&](const Eigen::VectorXd& v) {
        MlpNet probe = net;
        probe.from_vector(v);
        return probe.loss(x, y, l2);
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
    double worst = 0.0;
    for (int k = 0; k < n_coords; ++k) {
        Eigen::Index i = pick(rng);
        double numeric = oracle::fd_partial(loss_at, theta, i);
        double denom = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-8});
        worst = std::max(worst, std::fabs(numeric - analytic[i]) / denom);
    }
    return worst;
}

} // namespace

TEST_CASE("backprop matches central finite differences") {
    Eigen::MatrixXd x = random_matrix(24, kFeatureCount, 11);
    Eigen::VectorXd y = random_matrix(24, 1, 12).col(0);

    SUBCASE("79-20-1, no penalty") {
        MlpNet net = init_net({kFeatureCount, 20, 1}, 5);
        CHECK(max_grad_rel_err(net, x, y, 0.0, 400, 21) <= 1e-4);
    }
    SUBCASE("79-20-1 with l2") {
        MlpNet net = init_net({kFeatureCount, 20, 1}, 6);
        CHECK(max_grad_rel_err(net, x, y, 1e-2, 400, 22) <= 1e-4);
    }
    SUBCASE("two hidden layers") {
        MlpNet net = init_net({kFeatureCount, 16, 8, 1}, 7);
        CHECK(max_grad_rel_err(net, x, y, 1e-3, 400, 23) <= 1e-4);
    }
    SUBCASE("tiny net, exhaustive coordinates") {
        Eigen::MatrixXd xs = random_matrix(10, 3, 30);
        Eigen::VectorXd ys = random_matrix(10, 1, 31).col(0);
        MlpNet net = init_net({3, 4, 1}, 8);
        CHECK(max_grad_rel_err(net, xs, ys, 1e-3,
                               static_cast<int>(net.parameter_count()), 24) <= 1e-5);
    }
}

TEST_CASE("scaler standardizes columns and tolerates constants") {
    Eigen::MatrixXd x = random_matrix(40, 4, 99);
    x.col(2).setConstant(7.5); // constant feature
    x.col(0) = 3.0 * x.col(0).array() + 10.0;
    Scaler scaler = Scaler::fit(x);
    Eigen::MatrixXd z = scaler.transform(x);
    for (Eigen::Index j = 0; j < 4; ++j) {
        double mean = z.col(j).mean();
        double var = (z.col(j).array() - mean).square().sum() / static_cast<double>(z.rows());
        CHECK(std::fabs(mean) < 1e-12);
        if (j == 2) {
            CHECK(var == 0.0); // constant column maps to exactly zero
            CHECK(scaler.constant_feature[2] == 1);
            CHECK(scaler.sd[2] == 1.0);
        } else {
            CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(scaler.constant_feature[static_cast<size_t>(j)] == 0);
        }
    }
    // row transform agrees with the matrix path
    Eigen::VectorXd row = x.row(5);
    Eigen::VectorXd zrow = scaler.transform_row(row);
    for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(zrow[j] == doctest::Approx(z(5, j)).epsilon(1e-12));
    }
}

TEST_CASE("training drives a linear target to near-zero loss") {
    // y is an exact linear map of 5 features; a relu net can represent it on
    // the training cloud, so both solvers should essentially interpolate.
    Eigen::MatrixXd x = random_matrix(80, 5, 1234);
    Eigen::VectorXd w(5);
    w << 1.0, -2.0, 0.5, 0.0, 3.0;
    Eigen::VectorXd y = x * w;

    Hyperparams hp;
    hp.layer1 = 16;
    hp.l2 = 0.0;
    hp.max_iter = 4000;
    hp.patience = 400;

    SUBCASE("adam") {
        hp.solver = Solver::Adam;
        hp.lr0 = 0.01;
        MlpModel model = train_mlp(x, y, hp, 17);
        Eigen::VectorXd pred = model.predict(x);
        double mse = (pred - y).squaredNorm() / static_cast<double>(y.size());
        CHECK(mse < 1e-2);
        CHECK(model.n_iter > 0);
        CHECK(model.train_target_mean == doctest::Approx(y.mean()));
    }
    SUBCASE("lbfgs") {
        hp.solver = Solver::Lbfgs;
        MlpModel model = train_mlp(x, y, hp, 17);
        Eigen::VectorXd pred = model.predict(x);
        double mse = (pred - y).squaredNorm() / static_cast<double>(y.size());
        CHECK(mse < 1e-3);
    }
}

TEST_CASE("l2 penalty shrinks the weights") {
    Eigen::MatrixXd x = random_matrix(60, 6, 404);
    Eigen::VectorXd y = x.col(0) * 2.0 + x.col(3);
    Hyperparams hp;
    hp.layer1 = 12;
    hp.solver = Solver::Lbfgs;
    hp.max_iter = 2000;
    hp.patience = 200;

    hp.l2 = 0.0;
    MlpModel loose = train_mlp(x, y, hp, 3);
    hp.l2 = 1.0;
    MlpModel tight = train_mlp(x, y, hp, 3);

    auto weight_norm = [](const MlpModel& m) {
        double s = 0.0;
        for (const auto& w : m.net.weights) s += w.squaredNorm();
        return s;
    };
    CHECK(weight_norm(tight) < weight_norm(loose));
}

TEST_CASE("training is bit-deterministic in the seed") {
    Eigen::MatrixXd x = random_matrix(50, 8, 2020);
    Eigen::VectorXd y = x.col(1) - 0.5 * x.col(4);
    Hyperparams hp;
    hp.layer1 = 10;
    hp.max_iter = 500;
    MlpModel a = train_mlp(x, y, hp, 99);
    MlpModel b = train_mlp(x, y, hp, 99);
    CHECK(a.net.to_vector() == b.net.to_vector());
    CHECK(a.final_loss == b.final_loss);
    CHECK(a.n_iter == b.n_iter);

    MlpModel c = train_mlp(x, y, hp, 100);
    CHECK(a.net.to_vector() != c.net.to_vector());
}

TEST_CASE("divergence raises NonFiniteLoss naming the iteration") {
    Eigen::MatrixXd x = random_matrix(30, 4, 5);
    Eigen::VectorXd y = x.col(0) * 1e4;
    Hyperparams hp;
    hp.layer1 = 8;
    hp.solver = Solver::Adam;
    hp.lr0 = 1e160; // one step flings the weights far enough to overflow the loss
    hp.max_iter = 50;
    try {
        train_mlp(x, y, hp, 1);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::non_finite_loss);
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("hyperparameter and enum strings round-trip") {
    CHECK(to_string(Solver::Adam) == "adam");
    CHECK(to_string(Solver::Lbfgs) == "lbfgs");
    CHECK(solver_from_string("adam") == Solver::Adam);
    CHECK(solver_from_string("lbfgs") == Solver::Lbfgs);
    CHECK(to_string(LrSchedule::Constant) == "constant");
    CHECK(to_string(LrSchedule::Adaptive) == "adaptive");
    CHECK(schedule_from_string("adaptive") == LrSchedule::Adaptive);
    CHECK(code_of([] { solver_from_string("sgd"); }) == Errc::invalid_config);
    CHECK(code_of([] { schedule_from_string("cosine"); }) == Errc::invalid_config);
}

TEST_CASE("model json round-trips predictions exactly") {
    Eigen::MatrixXd x = random_matrix(40, kFeatureCount, 808);
    Eigen::VectorXd y = x.col(kSoilFeatureIndex) * -0.2 + x.col(0) * 0.1;
    Hyperparams hp;
    hp.layer1 = 6;
    hp.layer2 = 4;
    hp.solver = Solver::Lbfgs;
    hp.max_iter = 300;
    MlpModel model = train_mlp(x, y, hp, 7);

    MlpModel back = model_from_json(model_to_json(model));
    CHECK(back.net.layer_sizes == model.net.layer_sizes);
    CHECK(back.hp.layer1 == 6);
    CHECK(back.hp.layer2 == 4);
    CHECK(back.hp.solver == Solver::Lbfgs);
    CHECK(back.seed == model.seed);
    CHECK(back.train_target_mean == model.train_target_mean);

    Eigen::MatrixXd probe = random_matrix(7, kFeatureCount, 909);
    Eigen::VectorXd before = model.predict(probe);
    Eigen::VectorXd after = back.predict(probe);
    for (Eigen::Index i = 0; i < before.size(); ++i) {
        CHECK(before[i] == after[i]);
    }

    // a broken artifact file is a malformed-input problem, not a config one
    CHECK(code_of([] { model_from_json("{\"weights\": []}"); }) == Errc::malformed_row);
    CHECK(code_of([] { model_from_json("not json"); }) == Errc::malformed_row);
}
