#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace phenoflow {

/// Callback computing residuals (and optionally the Jacobian) at x.
/// When jac is non-null it must be resized to residuals x parameters.
using TrfProblem =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

struct TrfOptions {
    int max_iter = 500;
    double gtol = 1e-8;  // infinity norm of the Coleman-Li scaled gradient
    double xtol = 1e-10; // relative step size
    double initial_radius = 0.0; // <= 0 picks max(1, ||x0||)
};

struct TrfResult {
    Eigen::VectorXd x;
    double cost = 0.0; // 0.5 * ||r||^2 at x
    int iterations = 0;
    bool converged = false;
    // Cost after every accepted step, starting with the initial cost. The
    // solver only ever accepts strict decreases, so this is non-increasing.
    std::vector<double> accepted_costs;
};

/// Minimises 0.5 * ||r(x)||^2 subject to lb <= x <= ub with a trust-region
/// reflective method (Coleman-Li scaling, dogleg subproblem). Iterates stay
/// strictly inside the box.
TrfResult trf_minimize(const TrfProblem& problem, Eigen::VectorXd x0,
                       const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                       const TrfOptions& options = {});

} // namespace phenoflow
