#pragma once

#include <array>

namespace phenoflow {

/// Parameters of the two-branch logistic NDVI season model
///
///   ndvi(x) =  c / (1 + exp(b1 (x - a1))) + d          for x <= p
///   ndvi(x) = -c / (1 + exp(b2 (x - a2))) + d + c      for x >  p
///
/// with x in weeks. b1 < 0 makes the spring branch rise towards d + c,
/// b2 < 0 makes the autumn branch fall back to d, and p marks the seasonal
/// maximum. The branches join continuously at p exactly when
/// b1 (p - a1) + b2 (p - a2) = 0, so a2 is not free: it is derived from the
/// other parameters (see derive_a2).
struct DoubleLogisticParams {
    double a1 = 0.0; // spring inflection week
    double a2 = 0.0; // autumn inflection week (derived)
    double b1 = 0.0; // spring steepness, 1/week, negative
    double b2 = 0.0; // autumn steepness, 1/week, negative
    double c = 0.0;  // NDVI amplitude
    double d = 0.0;  // NDVI baseline
    double p = 0.0;  // transition / peak week
};

// Free parameter order used by the fitter and the Jacobian.
inline constexpr int kFreeParamCount = 6;
enum FreeParam { kA1 = 0, kB1, kB2, kC, kD, kP };

/// a2 implied by the continuity constraint.
double derive_a2(double a1, double b1, double b2, double p);

/// Builds full params from the free vector [a1, b1, b2, c, d, p].
DoubleLogisticParams params_from_free(const std::array<double, kFreeParamCount>& v);
std::array<double, kFreeParamCount> free_from_params(const DoubleLogisticParams& params);

/// Model value at week x. Evaluation saturates instead of overflowing for
/// extreme exponents.
double eval_double_logistic(const DoubleLogisticParams& params, double x);

/// Partial derivatives of the model value at x with respect to the free
/// parameters, with a2 treated as a function of (a1, b1, b2, p).
std::array<double, kFreeParamCount> eval_jacobian(const DoubleLogisticParams& params, double x);

/// First derivative of the spring branch (valid for x <= p).
double spring_branch_derivative(const DoubleLogisticParams& params, double x);

/// Second derivative of the spring branch (valid for x <= p); its maximiser
/// is the start-of-season estimate.
double spring_branch_second_derivative(const DoubleLogisticParams& params, double x);

/// Right-branch minus left-branch derivative at x = p. Zero would make the
/// join differentiable; the fitter penalises the square of this gap.
double derivative_gap_at_p(const DoubleLogisticParams& params);

/// Gradient of derivative_gap_at_p with respect to the free parameters.
std::array<double, kFreeParamCount> derivative_gap_gradient(const DoubleLogisticParams& params);

/// Numerically stable logistic 1 / (1 + exp(-t)).
double sigmoid(double t);

} // namespace phenoflow
