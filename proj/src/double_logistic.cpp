#include "double_logistic.hpp"

#include <cmath>

namespace phenoflow {

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

double derive_a2(double a1, double b1, double b2, double p) {
    return p + (b1 / b2) * (p - a1);
}

DoubleLogisticParams params_from_free(const std::array<double, kFreeParamCount>& v) {
    DoubleLogisticParams params;
    params.a1 = v[kA1];
    params.b1 = v[kB1];
    params.b2 = v[kB2];
    params.c = v[kC];
    params.d = v[kD];
    params.p = v[kP];
    params.a2 = derive_a2(params.a1, params.b1, params.b2, params.p);
    return params;
}

std::array<double, kFreeParamCount> free_from_params(const DoubleLogisticParams& params) {
    return {params.a1, params.b1, params.b2, params.c, params.d, params.p};
}

double eval_double_logistic(const DoubleLogisticParams& params, double x) {
    if (x <= params.p) {
        // c / (1 + exp(b1 (x - a1))) == c * sigmoid(-b1 (x - a1))
        return params.c * sigmoid(-params.b1 * (x - params.a1)) + params.d;
    }
    // -c / (1 + exp(b2 (x - a2))) + d + c == c * sigmoid(b2 (x - a2)) + d
    return params.c * sigmoid(params.b2 * (x - params.a2)) + params.d;
}

std::array<double, kFreeParamCount> eval_jacobian(const DoubleLogisticParams& params, double x) {
    std::array<double, kFreeParamCount> g{};
    if (x <= params.p) {
        double t = params.b1 * (x - params.a1);
        double sig = sigmoid(t);
        double bell = sig * (1.0 - sig); // u/(1+u)^2 with u = exp(t)
        g[kA1] = params.c * params.b1 * bell;
        g[kB1] = -params.c * (x - params.a1) * bell;
        g[kB2] = 0.0;
        g[kC] = 1.0 - sig;
        g[kD] = 1.0;
        g[kP] = 0.0;
        return g;
    }
    // Autumn branch; a2 depends on (a1, b1, b2, p) through the continuity
    // constraint, which the chain rule folds into these partials.
    double t = params.b2 * (x - params.a2);
    double sig = sigmoid(t);
    double bell = sig * (1.0 - sig);
    g[kA1] = params.c * params.b1 * bell;
    g[kB1] = -params.c * (params.p - params.a1) * bell;
    g[kB2] = params.c * (x - params.p) * bell;
    g[kC] = sig;
    g[kD] = 1.0;
    g[kP] = -params.c * (params.b1 + params.b2) * bell;
    return g;
}

double spring_branch_derivative(const DoubleLogisticParams& params, double x) {
    double t = params.b1 * (x - params.a1);
    double sig = sigmoid(t);
    return -params.c * params.b1 * sig * (1.0 - sig);
}

double spring_branch_second_derivative(const DoubleLogisticParams& params, double x) {
    double t = params.b1 * (x - params.a1);
    double sig = sigmoid(t);
    return -params.c * params.b1 * params.b1 * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
}

double derivative_gap_at_p(const DoubleLogisticParams& params) {
    double t = params.b1 * (params.p - params.a1);
    double sig = sigmoid(t);
    return params.c * (params.b1 + params.b2) * sig * (1.0 - sig);
}

std::array<double, kFreeParamCount> derivative_gap_gradient(const DoubleLogisticParams& params) {
    double t = params.b1 * (params.p - params.a1);
    double sig = sigmoid(t);
    double s = sig * (1.0 - sig);
    double ds_dt = s * (1.0 - 2.0 * sig);
    double bsum = params.b1 + params.b2;

    std::array<double, kFreeParamCount> g{};
    g[kA1] = params.c * bsum * ds_dt * (-params.b1);
    g[kB1] = params.c * s + params.c * bsum * ds_dt * (params.p - params.a1);
    g[kB2] = params.c * s;
    g[kC] = bsum * s;
    g[kD] = 0.0;
    g[kP] = params.c * bsum * ds_dt * params.b1;
    return g;
}

} // namespace phenoflow
