#include "narx/logistic.hpp"
#include "narx/errors.hpp"

#include <cmath>

namespace narx {

namespace {

double sigmoid(double z) {
    // Clamped so outputs stay strictly inside (0,1) in double precision.
    z = std::clamp(z, -36.0, 36.0);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double log1p_exp(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size())
        throw DataError("feature rows and label length differ");
    if (!x.allFinite())
        throw NumericError("feature matrix contains non-finite entries");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
            throw DataError("binary labels must be 0 or 1");
}

} // namespace

std::pair<double, Eigen::VectorXd>
log_likelihood_and_gradient(const Eigen::VectorXd& weights, double bias,
                            const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda) {
    check_inputs(x, y);
    if (weights.size() != x.cols())
        throw DataError("weight length does not match feature count");

    const Eigen::VectorXd z =
        (x * weights).array() + bias;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        ll += y(i) * z(i) - log1p_exp(z(i));
    ll -= 0.5 * lambda * weights.squaredNorm();

    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = sigmoid(z(i));
    const Eigen::VectorXd resid = y - p;

    Eigen::VectorXd grad(weights.size() + 1);
    grad(0) = resid.sum();
    grad.tail(weights.size()) = x.transpose() * resid - lambda * weights;
    return {ll, grad};
}

LogisticModel fit_mle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const FitOptions& opts) {
    check_inputs(x, y);
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n < 2) throw DataError("need at least 2 samples to fit");
    if (opts.lambda < 0.0) throw ConfigError("ridge penalty must be >= 0");
    if (opts.tol <= 0.0) throw ConfigError("tolerance must be positive");

    LogisticModel model;
    model.lambda = opts.lambda;
    model.weights = Eigen::VectorXd::Zero(d);

    const double positives = y.sum();
    if (positives == 0.0 || positives == static_cast<double>(n)) {
        // Degenerate single-class input: bias-only model at the smoothed
        // empirical log-odds.
        const double q = (positives + 0.5) / (static_cast<double>(n) + 1.0);
        model.bias = std::log(q / (1.0 - q));
        model.converged = true;
        return model;
    }

    double lambda_eff = opts.lambda;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);  // [bias, weights]

    const Eigen::ArrayXd ya = y.array();
    // Penalized log-likelihood from a precomputed linear predictor. Kept
    // separate from the gradient so each step-halving probe costs one O(n)
    // pass instead of a full likelihood-plus-gradient evaluation.
    auto ll_at = [&](const Eigen::ArrayXd& z, const Eigen::VectorXd& b) {
        const double fit =
            (ya * z - (z.max(0.0) + (-z.abs()).exp().log1p())).sum();
        return fit - 0.5 * lambda_eff * b.tail(d).squaredNorm();
    };
    auto grad_at = [&](const Eigen::ArrayXd& z, const Eigen::VectorXd& b,
                       Eigen::ArrayXd& p_out) {
        const Eigen::ArrayXd zc = z.min(36.0).max(-36.0);
        p_out = 1.0 / (1.0 + (-zc).exp());
        const Eigen::VectorXd resid = (ya - p_out).matrix();
        Eigen::VectorXd g(d + 1);
        g(0) = resid.sum();
        g.tail(d) = x.transpose() * resid - lambda_eff * b.tail(d);
        return g;
    };

    Eigen::ArrayXd z = Eigen::ArrayXd::Zero(n);  // x*weights + bias at beta
    Eigen::ArrayXd p(n);
    double ll = ll_at(z, beta);
    Eigen::VectorXd grad = grad_at(z, beta, p);
    double t_prev = 1.0;

    for (int it = 1; it <= opts.max_iter; ++it) {
        if (grad.lpNorm<Eigen::Infinity>() < opts.tol) {
            model.converged = true;
            break;
        }

        const Eigen::VectorXd w = (p * (1.0 - p)).matrix();

        // Hessian of the penalized likelihood, negated: A^T W A + lambda
        // on the weight block (bias unpenalized), A = [1 X].
        Eigen::MatrixXd h(d + 1, d + 1);
        h(0, 0) = w.sum();
        h.block(0, 1, 1, d) = (w.transpose() * x);
        h.block(1, 0, d, 1) = h.block(0, 1, 1, d).transpose();
        h.block(1, 1, d, d) = x.transpose() * w.asDiagonal() * x;
        h.block(1, 1, d, d).diagonal().array() += lambda_eff;

        // A rank-deficient Hessian still yields consistent normal equations
        // (the gradient lies in its range), so a residual test alone cannot
        // detect it; inspect the LDLT pivots as well. The pivot test runs
        // on the Jacobi-equilibrated system so that rescaling a column —
        // which only changes conditioning, not rank — cannot trip it.
        auto solve_checked = [&grad](const Eigen::MatrixXd& hm) {
            const Eigen::VectorXd diag = hm.diagonal();
            bool bad = !(diag.minCoeff() > 0.0);
            const Eigen::VectorXd scale =
                bad ? Eigen::VectorXd::Ones(hm.rows())
                    : diag.cwiseSqrt().eval();
            const Eigen::MatrixXd hs = scale.cwiseInverse().asDiagonal() * hm *
                                       scale.cwiseInverse().asDiagonal();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hs);
            const Eigen::VectorXd dabs = ldlt.vectorD().cwiseAbs();
            const double dmax = dabs.maxCoeff();
            bad = bad || ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
                  dabs.minCoeff() <= dmax * 1e-12;
            const Eigen::VectorXd gs =
                scale.cwiseInverse().asDiagonal() * grad;
            const Eigen::VectorXd ss = ldlt.solve(gs);
            bad = bad || !ss.allFinite() ||
                  (hs * ss - gs).norm() > 1e-6 * (gs.norm() + 1.0);
            Eigen::VectorXd s = scale.cwiseInverse().asDiagonal() * ss;
            return std::make_pair(std::move(s), bad);
        };

        auto [step, bad] = solve_checked(h);
        if (bad && lambda_eff == 0.0) {
            lambda_eff = 1e-8;
            model.ridge_fallback = true;
            model.lambda = lambda_eff;
            ll = ll_at(z, beta);
            grad = grad_at(z, beta, p);
            Eigen::MatrixXd h2 = h;
            h2.block(1, 1, d, d).diagonal().array() += lambda_eff;
            std::tie(step, bad) = solve_checked(h2);
        }
        if (bad)
            throw NumericError("IRLS normal equations are singular");

        // Step-halving keeps the penalized likelihood non-decreasing. The
        // search warm-starts near the previously accepted step length: on
        // badly scaled problems the workable length shrinks geometrically,
        // and restarting at 1 every iteration would retrace the same deep
        // cut each time.
        const Eigen::ArrayXd dz = (x * step.tail(d)).array() + step(0);
        double t = std::min(1.0, 4.0 * t_prev);
        double ll_new = ll;
        bool improved = false;
        for (int h_iter = 0; h_iter < 40; ++h_iter) {
            ll_new = ll_at(z + t * dz, beta + t * step);
            if (ll_new >= ll) { improved = true; break; }
            t *= 0.5;
        }
        model.iterations = it;
        if (!improved) break;  // no ascent direction left at this scale
        beta += t * step;
        t_prev = t;
        // Refresh the predictor from beta itself so rounding from the
        // incremental z + t*dz updates cannot accumulate across iterations.
        z = (x * beta.tail(d)).array() + beta(0);
        ll = ll_at(z, beta);
        grad = grad_at(z, beta, p);
    }
    if (grad.lpNorm<Eigen::Infinity>() < opts.tol) model.converged = true;

    model.bias = beta(0);
    model.weights = beta.tail(d);
    if (!model.weights.allFinite() || !std::isfinite(model.bias))
        throw NumericError("logistic fit produced non-finite coefficients");
    return model;
}

Eigen::VectorXd predict_proba(const LogisticModel& model,
                              const Eigen::MatrixXd& x) {
    if (x.cols() != model.weights.size())
        throw DataError("feature count does not match model (" +
                        std::to_string(x.cols()) + " vs " +
                        std::to_string(model.weights.size()) + ")");
    Eigen::VectorXd z = (x * model.weights).array() + model.bias;
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = sigmoid(z(i));
    return p;
}

double accuracy(const LogisticModel& model, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y) {
    check_inputs(x, y);
    const Eigen::VectorXd p = predict_proba(model, x);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double predicted = p(i) >= 0.5 ? 1.0 : 0.0;
        if (predicted == y(i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

} // namespace narx
