#include "trust_region.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace phenoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void make_strictly_feasible(Eigen::VectorXd& x, const Eigen::VectorXd& lb,
                            const Eigen::VectorXd& ub) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double span = ub[i] - lb[i];
        double margin = std::isfinite(span) ? 1e-10 * span : 1e-10;
        if (x[i] <= lb[i]) x[i] = lb[i] + margin;
        if (x[i] >= ub[i]) x[i] = ub[i] - margin;
    }
}

// Coleman-Li scaling vector v and its derivative pattern dv. v measures the
// distance to the bound that the negative gradient points towards.
void cl_scaling(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                Eigen::VectorXd& v, Eigen::VectorXd& dv) {
    v.setOnes(x.size());
    dv.setZero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (g[i] < 0.0 && ub[i] < kInf) {
            v[i] = ub[i] - x[i];
            dv[i] = -1.0;
        } else if (g[i] > 0.0 && lb[i] > -kInf) {
            v[i] = x[i] - lb[i];
            dv[i] = 1.0;
        }
    }
}

// Largest alpha with x + alpha * s inside [lb, ub], plus the mask of
// components that hit their bound at that alpha.
double step_to_bound(const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                     const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                     std::vector<int>& hit) {
    double alpha = kInf;
    Eigen::VectorXd dist(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (s[i] > 0.0) {
            dist[i] = (ub[i] - x[i]) / s[i];
        } else if (s[i] < 0.0) {
            dist[i] = (lb[i] - x[i]) / s[i];
        } else {
            dist[i] = kInf;
        }
        alpha = std::min(alpha, dist[i]);
    }
    hit.assign(static_cast<size_t>(x.size()), 0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::isfinite(dist[i]) && dist[i] <= alpha * (1.0 + 1e-12)) {
            hit[static_cast<size_t>(i)] = 1;
        }
    }
    return alpha;
}

// Dogleg solution of min g.p + 0.5 p'Bp over ||p|| <= radius. B is expected
// to be positive semidefinite; a small diagonal shift covers the singular
// case.
Eigen::VectorXd dogleg(const Eigen::MatrixXd& B, const Eigen::VectorXd& g, double radius) {
    double gnorm = g.norm();
    if (gnorm == 0.0) return Eigen::VectorXd::Zero(g.size());

    double gBg = g.dot(B * g);
    Eigen::VectorXd cauchy;
    if (gBg > 0.0) {
        cauchy = -(g.squaredNorm() / gBg) * g;
    } else {
        return -(radius / gnorm) * g;
    }
    if (cauchy.norm() >= radius) {
        return -(radius / gnorm) * g;
    }

    Eigen::MatrixXd Breg = B;
    double shift = 1e-12 * std::max(1.0, B.trace());
    Eigen::VectorXd newton;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Breg);
        newton = ldlt.solve(-g);
        if (ldlt.info() == Eigen::Success && newton.allFinite() &&
            g.dot(newton) < 0.0) {
            break;
        }
        Breg.diagonal().array() += shift;
        shift *= 1e4;
        newton.setZero();
    }
    if (!newton.allFinite() || newton.squaredNorm() == 0.0) {
        return cauchy;
    }
    if (newton.norm() <= radius) {
        return newton;
    }

    // Intersection of the Cauchy-to-Newton segment with the boundary.
    Eigen::VectorXd dp = newton - cauchy;
    double a = dp.squaredNorm();
    double b = 2.0 * cauchy.dot(dp);
    double cc = cauchy.squaredNorm() - radius * radius;
    double disc = std::max(0.0, b * b - 4.0 * a * cc);
    double tau = (-b + std::sqrt(disc)) / (2.0 * a);
    tau = std::clamp(tau, 0.0, 1.0);
    return cauchy + tau * dp;
}

double predicted_reduction(const Eigen::MatrixXd& B, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& p) {
    return -(g.dot(p) + 0.5 * p.dot(B * p));
}

} // namespace

TrfResult trf_minimize(const TrfProblem& problem, Eigen::VectorXd x0,
                       const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                       const TrfOptions& options) {
    const Eigen::Index n = x0.size();
    if (lb.size() != n || ub.size() != n) {
        fail(Errc::length_mismatch, "trf_minimize: bound sizes do not match x0");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(lb[i] < ub[i])) {
            fail(Errc::invalid_config, "trf_minimize: lb must be strictly below ub");
        }
    }

    TrfResult result;
    make_strictly_feasible(x0, lb, ub);
    Eigen::VectorXd x = x0;

    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    problem(x, r, &J);
    double cost = 0.5 * r.squaredNorm();
    if (!std::isfinite(cost)) {
        fail(Errc::non_finite_loss, "trf_minimize: initial cost is not finite");
    }
    result.accepted_costs.push_back(cost);

    double radius = options.initial_radius > 0.0 ? options.initial_radius
                                                 : std::max(1.0, x.norm());

    Eigen::VectorXd v(n), dv(n);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        result.iterations = iter + 1;
        Eigen::VectorXd g = J.transpose() * r;
        cl_scaling(x, g, lb, ub, v, dv);

        double g_scaled_norm = (g.array() * v.array()).abs().maxCoeff();
        if (g_scaled_norm < options.gtol) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd d = v.array().sqrt();
        Eigen::MatrixXd J_h = J * d.asDiagonal();
        Eigen::VectorXd g_h = d.array() * g.array();
        Eigen::MatrixXd B = J_h.transpose() * J_h;
        B.diagonal() += (g.array() * dv.array()).matrix();

        bool accepted = false;
        bool tiny_step = false;
        for (int inner = 0; inner < 40 && !accepted; ++inner) {
            Eigen::VectorXd p_h = dogleg(B, g_h, radius);
            Eigen::VectorXd step = d.array() * p_h.array();

            // Candidate steps: the (possibly truncated) dogleg step, its
            // reflection off whichever bounds it hits, and the truncated
            // scaled steepest descent direction.
            std::vector<Eigen::VectorXd> candidates;
            std::vector<int> hit;
            double alpha = step_to_bound(x, step, lb, ub, hit);
            if (alpha >= 1.0) {
                candidates.push_back(step);
            } else {
                candidates.push_back(0.995 * alpha * step);
                Eigen::VectorXd reflected = step;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (hit[static_cast<size_t>(i)]) reflected[i] = -reflected[i];
                }
                std::vector<int> hit_r;
                double alpha_r = step_to_bound(x, reflected, lb, ub, hit_r);
                candidates.push_back(std::min(1.0, 0.995 * alpha_r) * reflected);
            }
            {
                Eigen::VectorXd sd = -(v.array() * g.array());
                double sd_h_norm = (sd.array() / d.array()).matrix().norm();
                if (sd_h_norm > 0.0) {
                    sd *= radius / sd_h_norm;
                    std::vector<int> hit_g;
                    double alpha_g = step_to_bound(x, sd, lb, ub, hit_g);
                    candidates.push_back(std::min(1.0, 0.995 * alpha_g) * sd);
                }
            }

            Eigen::VectorXd best_step;
            double best_pred = -kInf;
            for (const auto& s : candidates) {
                Eigen::VectorXd p = (s.array() / d.array()).matrix();
                double pred = predicted_reduction(B, g_h, p);
                if (pred > best_pred) {
                    best_pred = pred;
                    best_step = s;
                }
            }

            double step_norm = best_step.norm();
            if (step_norm < options.xtol * (options.xtol + x.norm())) {
                tiny_step = true;
                break;
            }

            Eigen::VectorXd x_new = x + best_step;
            make_strictly_feasible(x_new, lb, ub);
            Eigen::VectorXd r_new;
            problem(x_new, r_new, nullptr);
            double cost_new = 0.5 * r_new.squaredNorm();
            double actual = cost - cost_new;

            double ratio = 0.0;
            if (std::isfinite(cost_new) && best_pred > 0.0) {
                ratio = actual / best_pred;
            }

            if (std::isfinite(cost_new) && actual > 0.0) {
                x = x_new;
                cost = cost_new;
                problem(x, r, &J);
                result.accepted_costs.push_back(cost);
                accepted = true;
                if (ratio > 0.75) {
                    radius = std::max(radius, 2.0 * step_norm);
                }
            } else {
                radius = 0.25 * std::min(radius, step_norm);
                if (radius < 1e-14) {
                    tiny_step = true;
                    break;
                }
                continue;
            }
            if (ratio < 0.25) {
                radius *= 0.25;
            }
        }

        if (tiny_step) {
            result.converged = true;
            break;
        }
        if (!accepted) {
            break;
        }
    }

    result.x = x;
    result.cost = cost;
    return result;
}

} // namespace phenoflow
