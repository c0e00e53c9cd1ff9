#include "mlp.hpp"

#include "errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <deque>
#include <random>

namespace phenoflow {

std::string to_string(Solver solver) {
    return solver == Solver::Adam ? "adam" : "lbfgs";
}

std::string to_string(LrSchedule schedule) {
    return schedule == LrSchedule::Constant ? "constant" : "adaptive";
}

Solver solver_from_string(std::string_view text) {
    if (text == "adam") return Solver::Adam;
    if (text == "lbfgs") return Solver::Lbfgs;
    fail(Errc::invalid_config, "unknown solver: " + std::string(text));
}

LrSchedule schedule_from_string(std::string_view text) {
    if (text == "constant") return LrSchedule::Constant;
    if (text == "adaptive") return LrSchedule::Adaptive;
    fail(Errc::invalid_config, "unknown lr schedule: " + std::string(text));
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
    Scaler s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.sd.resize(x.cols());
    s.constant_feature.assign(static_cast<size_t>(x.cols()), 0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
        double sd = std::sqrt(var);
        if (sd == 0.0) {
            s.constant_feature[static_cast<size_t>(j)] = 1;
            sd = 1.0;
        }
        s.sd[j] = sd;
    }
    return s;
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Eigen::VectorXd Scaler::transform_row(const Eigen::VectorXd& x) const {
    return (x - mean).array() / sd.array();
}

Eigen::VectorXd MlpNet::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (size_t k = 0; k < weights.size(); ++k) {
        Eigen::MatrixXd z = (a * weights[k].transpose()).rowwise() + biases[k].transpose();
        if (k + 1 < weights.size()) {
            a = z.cwiseMax(0.0);
        } else {
            a = std::move(z);
        }
    }
    return a.col(0);
}

double MlpNet::loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) const {
    Eigen::VectorXd pred = forward(x);
    double mse = (pred - y).squaredNorm() / static_cast<double>(x.rows());
    double penalty = 0.0;
    for (const auto& w : weights) penalty += w.squaredNorm();
    return 0.5 * mse + l2 * penalty;
}

void MlpNet::gradients(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                       std::vector<Eigen::MatrixXd>& grad_w,
                       std::vector<Eigen::VectorXd>& grad_b) const {
    const size_t n_layers = weights.size();
    std::vector<Eigen::MatrixXd> activations(n_layers + 1);
    std::vector<Eigen::MatrixXd> pre(n_layers);
    activations[0] = x;
    for (size_t k = 0; k < n_layers; ++k) {
        pre[k] = (activations[k] * weights[k].transpose()).rowwise() + biases[k].transpose();
        activations[k + 1] = k + 1 < n_layers ? pre[k].cwiseMax(0.0) : pre[k];
    }

    grad_w.resize(n_layers);
    grad_b.resize(n_layers);
    Eigen::MatrixXd delta =
        (activations[n_layers] - y) / static_cast<double>(x.rows());
    for (size_t k = n_layers; k-- > 0;) {
        grad_w[k] = delta.transpose() * activations[k] + 2.0 * l2 * weights[k];
        grad_b[k] = delta.colwise().sum().transpose();
        if (k > 0) {
            delta = (delta * weights[k]).array() * (pre[k - 1].array() > 0.0).cast<double>();
        }
    }
}

Eigen::Index MlpNet::parameter_count() const {
    Eigen::Index n = 0;
    for (size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
}

Eigen::VectorXd MlpNet::to_vector() const {
    Eigen::VectorXd v(parameter_count());
    Eigen::Index pos = 0;
    for (size_t k = 0; k < weights.size(); ++k) {
        const auto& w = weights[k];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) v[pos++] = w(r, c);
        }
        for (Eigen::Index i = 0; i < biases[k].size(); ++i) v[pos++] = biases[k][i];
    }
    return v;
}

void MlpNet::from_vector(const Eigen::VectorXd& v) {
    Eigen::Index pos = 0;
    for (size_t k = 0; k < weights.size(); ++k) {
        auto& w = weights[k];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = v[pos++];
        }
        for (Eigen::Index i = 0; i < biases[k].size(); ++i) biases[k][i] = v[pos++];
    }
}

MlpNet init_net(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        fail(Errc::invalid_config, "init_net: need at least input and output layers");
    }
    MlpNet net;
    net.layer_sizes = layer_sizes;
    std::mt19937_64 rng(seed);
    for (size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        int fan_in = layer_sizes[k];
        int fan_out = layer_sizes[k + 1];
        if (fan_in < 1 || fan_out < 1) {
            fail(Errc::invalid_config, "init_net: layer sizes must be positive");
        }
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> uniform(-limit, limit);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return net;
}

namespace {

struct FlatGrad {
    double loss = 0.0;
    Eigen::VectorXd grad;
};

FlatGrad eval_flat(MlpNet& net, const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                   const Eigen::VectorXd& y, double l2) {
    net.from_vector(params);
    FlatGrad out;
    out.loss = net.loss(x, y, l2);
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
    net.gradients(x, y, l2, gw, gb);
    out.grad.resize(params.size());
    Eigen::Index pos = 0;
    for (size_t k = 0; k < gw.size(); ++k) {
        for (Eigen::Index r = 0; r < gw[k].rows(); ++r) {
            for (Eigen::Index c = 0; c < gw[k].cols(); ++c) out.grad[pos++] = gw[k](r, c);
        }
        for (Eigen::Index i = 0; i < gb[k].size(); ++i) out.grad[pos++] = gb[k][i];
    }
    return out;
}

void check_finite(double loss, int iteration) {
    if (!std::isfinite(loss)) {
        fail(Errc::non_finite_loss,
             "training loss became non-finite at iteration " + std::to_string(iteration));
    }
}

constexpr double kImprovementTol = 1e-6;

int run_adam(MlpNet& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
             const Hyperparams& hp) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    Eigen::VectorXd params = net.to_vector();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
    double lr = hp.lr0;
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    int schedule_stall = 0;
    int iter = 0;
    for (iter = 1; iter <= hp.max_iter; ++iter) {
        FlatGrad fg = eval_flat(net, params, x, y, hp.l2);
        check_finite(fg.loss, iter);

        if (fg.loss < best - kImprovementTol) {
            best = fg.loss;
            stall = 0;
            schedule_stall = 0;
        } else {
            ++stall;
            ++schedule_stall;
        }
        if (stall >= hp.patience) break;
        if (hp.schedule == LrSchedule::Adaptive && schedule_stall >= 2) {
            lr /= 5.0;
            schedule_stall = 0;
        }

        double t = static_cast<double>(iter);
        m = beta1 * m + (1.0 - beta1) * fg.grad;
        v = beta2 * v + (1.0 - beta2) * fg.grad.cwiseProduct(fg.grad);
        double mc = 1.0 - std::pow(beta1, t);
        double vc = 1.0 - std::pow(beta2, t);
        params -= (lr / mc) * m.cwiseQuotient(((v / vc).cwiseSqrt().array() + eps).matrix());
    }
    net.from_vector(params);
    return std::min(iter, hp.max_iter);
}

Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& grad,
                                const std::deque<Eigen::VectorXd>& s_hist,
                                const std::deque<Eigen::VectorXd>& y_hist) {
    Eigen::VectorXd q = grad;
    const auto m = s_hist.size();
    std::vector<double> alpha(m);
    std::vector<double> rho(m);
    for (size_t i = m; i-- > 0;) {
        rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
        alpha[i] = rho[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
    }
    if (m > 0) {
        double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        q *= gamma;
    }
    for (size_t i = 0; i < m; ++i) {
        double beta = rho[i] * y_hist[i].dot(q);
        q += (alpha[i] - beta) * s_hist[i];
    }
    return -q;
}

int run_lbfgs(MlpNet& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const Hyperparams& hp) {
    constexpr size_t memory = 10;
    constexpr double armijo_c = 1e-4;

    Eigen::VectorXd params = net.to_vector();
    FlatGrad fg = eval_flat(net, params, x, y, hp.l2);
    check_finite(fg.loss, 0);

    std::deque<Eigen::VectorXd> s_hist;
    std::deque<Eigen::VectorXd> y_hist;
    double best = fg.loss;
    int stall = 0;
    int iter = 0;
    for (iter = 1; iter <= hp.max_iter; ++iter) {
        if (fg.grad.lpNorm<Eigen::Infinity>() < 1e-8) break;

        Eigen::VectorXd dir = lbfgs_direction(fg.grad, s_hist, y_hist);
        double slope = fg.grad.dot(dir);
        if (!(slope < 0.0)) {
            dir = -fg.grad;
            slope = fg.grad.dot(dir);
        }

        double step = iter == 1 ? 1.0 / std::max(1.0, fg.grad.norm()) : 1.0;
        FlatGrad next;
        bool decreased = false;
        for (int halving = 0; halving < 40; ++halving) {
            Eigen::VectorXd trial = params + step * dir;
            next = eval_flat(net, trial, x, y, hp.l2);
            check_finite(next.loss, iter);
            if (next.loss <= fg.loss + armijo_c * step * slope) {
                params = trial;
                decreased = true;
                break;
            }
            step *= 0.5;
        }
        if (!decreased) break;

        Eigen::VectorXd s = step * dir;
        Eigen::VectorXd yv = next.grad - fg.grad;
        if (s.dot(yv) > 1e-10) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            if (s_hist.size() > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }

        if (next.loss < best - kImprovementTol) {
            best = next.loss;
            stall = 0;
        } else if (++stall >= hp.patience) {
            fg = next;
            break;
        }
        fg = next;
    }
    net.from_vector(params);
    return std::min(iter, hp.max_iter);
}

} // namespace

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& x) const {
    return net.forward(scaler.transform(x));
}

double MlpModel::predict_one(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd row = scaler.transform_row(x).transpose();
    return net.forward(row)[0];
}

MlpModel train_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                   std::uint64_t seed) {
    if (x.rows() == 0 || x.rows() != y.size()) {
        fail(Errc::length_mismatch, "train_mlp: empty training set or size mismatch");
    }
    if (hp.layer1 < 1 || hp.layer2 < 0 || hp.max_iter < 1 || hp.patience < 1 ||
        hp.l2 < 0.0 || hp.lr0 <= 0.0) {
        fail(Errc::invalid_config, "train_mlp: invalid hyperparameters");
    }

    MlpModel model;
    model.hp = hp;
    model.seed = seed;
    model.scaler = Scaler::fit(x);
    model.train_target_mean = y.mean();

    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(x.cols()));
    sizes.push_back(hp.layer1);
    if (hp.layer2 > 0) sizes.push_back(hp.layer2);
    sizes.push_back(1);
    model.net = init_net(sizes, seed);

    Eigen::MatrixXd xs = model.scaler.transform(x);
    model.n_iter = hp.solver == Solver::Adam ? run_adam(model.net, xs, y, hp)
                                             : run_lbfgs(model.net, xs, y, hp);
    model.final_loss = model.net.loss(xs, y, hp.l2);
    check_finite(model.final_loss, model.n_iter);
    return model;
}

std::string model_to_json(const MlpModel& model) {
    nlohmann::json j;
    j["layer_sizes"] = model.net.layer_sizes;
    auto& weights = j["weights"] = nlohmann::json::array();
    auto& biases = j["biases"] = nlohmann::json::array();
    for (size_t k = 0; k < model.net.weights.size(); ++k) {
        std::vector<double> flat;
        const auto& w = model.net.weights[k];
        flat.reserve(static_cast<size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        }
        weights.push_back(flat);
        biases.push_back(std::vector<double>(model.net.biases[k].begin(),
                                             model.net.biases[k].end()));
    }
    j["scaler"]["mean"] = std::vector<double>(model.scaler.mean.begin(), model.scaler.mean.end());
    j["scaler"]["sd"] = std::vector<double>(model.scaler.sd.begin(), model.scaler.sd.end());
    j["scaler"]["constant"] = model.scaler.constant_feature;
    j["hp"] = {{"layer1", model.hp.layer1},
               {"layer2", model.hp.layer2},
               {"l2", model.hp.l2},
               {"solver", to_string(model.hp.solver)},
               {"lr0", model.hp.lr0},
               {"schedule", to_string(model.hp.schedule)},
               {"max_iter", model.hp.max_iter},
               {"patience", model.hp.patience}};
    j["seed"] = model.seed;
    j["final_loss"] = model.final_loss;
    j["n_iter"] = model.n_iter;
    j["train_target_mean"] = model.train_target_mean;
    return j.dump(2);
}

MlpModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_row, std::string("model_from_json: ") + e.what());
    }
    try {
        MlpModel model;
        model.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        const auto& sizes = model.net.layer_sizes;
        if (sizes.size() < 2) {
            fail(Errc::malformed_row, "model_from_json: bad layer_sizes");
        }
        for (size_t k = 0; k + 1 < sizes.size(); ++k) {
            auto flat = j.at("weights").at(k).get<std::vector<double>>();
            int rows = sizes[k + 1];
            int cols = sizes[k];
            if (flat.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
                fail(Errc::malformed_row, "model_from_json: weight size mismatch");
            }
            Eigen::MatrixXd w(rows, cols);
            size_t pos = 0;
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) w(r, c) = flat[pos++];
            }
            model.net.weights.push_back(std::move(w));
            auto b = j.at("biases").at(k).get<std::vector<double>>();
            if (b.size() != static_cast<size_t>(rows)) {
                fail(Errc::malformed_row, "model_from_json: bias size mismatch");
            }
            model.net.biases.push_back(
                Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
        }
        auto mean = j.at("scaler").at("mean").get<std::vector<double>>();
        auto sd = j.at("scaler").at("sd").get<std::vector<double>>();
        model.scaler.mean =
            Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        model.scaler.sd =
            Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
        model.scaler.constant_feature = j.at("scaler").at("constant").get<std::vector<char>>();
        const auto& hp = j.at("hp");
        model.hp.layer1 = hp.at("layer1").get<int>();
        model.hp.layer2 = hp.at("layer2").get<int>();
        model.hp.l2 = hp.at("l2").get<double>();
        model.hp.solver = solver_from_string(hp.at("solver").get<std::string>());
        model.hp.lr0 = hp.at("lr0").get<double>();
        model.hp.schedule = schedule_from_string(hp.at("schedule").get<std::string>());
        model.hp.max_iter = hp.at("max_iter").get<int>();
        model.hp.patience = hp.at("patience").get<int>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.final_loss = j.at("final_loss").get<double>();
        model.n_iter = j.at("n_iter").get<int>();
        model.train_target_mean = j.at("train_target_mean").get<double>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_row, std::string("model_from_json: ") + e.what());
    }
}

} // namespace phenoflow
