#pragma once

#include <Eigen/Dense>

namespace narx {

/// Binary logistic regression model p = sigma(bias + x.theta).
///
/// Fitted by penalized maximum likelihood; the ridge penalty applies to
/// the weights only, never the bias. The printed form of the probability
/// model elsewhere uses sigma(-z); coefficients here follow the standard
/// sigma(+z) convention, which only flips their sign.
struct LogisticModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    bool ridge_fallback = false;  // lambda=0 hit a singular Hessian
};

struct FitOptions {
    double lambda = 1e-4;
    int max_iter = 100;
    double tol = 1e-8;
};

/// Newton/IRLS with step-halving; the penalized log-likelihood never
/// decreases across accepted iterations. Single-class labels yield a
/// bias-only model at the smoothed empirical log-odds.
LogisticModel fit_mle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const FitOptions& opts = {});

Eigen::VectorXd predict_proba(const LogisticModel& model,
                              const Eigen::MatrixXd& x);

/// Mean of [predicted class == label] with threshold p >= 0.5 mapping to
/// class 1. This is the candidate score r used during term selection.
double accuracy(const LogisticModel& model, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y);

/// Penalized log-likelihood and its exact gradient with respect to
/// (bias, weights); gradient[0] is the bias component.
std::pair<double, Eigen::VectorXd>
log_likelihood_and_gradient(const Eigen::VectorXd& weights, double bias,
                            const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda);

} // namespace narx
