#include "pfenkf/data/gp.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace pfenkf::data {

double matern(double r, const MaternParams& w) {
    const double s2 = w.sigma * w.sigma;
    if (r <= 0.0) return s2;
    const double z = std::sqrt(2.0 * w.nu) * r / w.length;
    if (z > 700.0) return 0.0;
    return s2 * std::pow(2.0, 1.0 - w.nu) / std::tgamma(w.nu) * std::pow(z, w.nu) * std::cyl_bessel_k(w.nu, z);
}

double matern(const fem::Point& x, const fem::Point& y, const MaternParams& w) {
    return matern(std::hypot(x[0] - y[0], x[1] - y[1]), w);
}

Eigen::MatrixXd matern_gram(const std::vector<fem::Point>& a, const std::vector<fem::Point>& b,
                            const MaternParams& w) {
    Eigen::MatrixXd K(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matern(a[i], b[j], w);
    return K;
}

Eigen::MatrixXd discrepancy_covariance(const ObservationModel& obs, const MaternParams& w) {
    const int nc = obs.components;
    const auto n = static_cast<Eigen::Index>(obs.num_channels());
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    const auto K = matern_gram(obs.sensors, obs.sensors, w);
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j)
            for (int c = 0; c < nc; ++c) C(i * nc + c, j * nc + c) = K(i, j);
    return C;
}

namespace {

Eigen::LDLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& G) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    const Eigen::VectorXd D = ldlt.vectorD();
    const double pivot = D.size() ? D.minCoeff() : 0.0;
    if (ldlt.info() != Eigen::Success || !(pivot > 0.0)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "covariance is not positive definite (smallest pivot %.3e)", pivot);
        throw NotPositiveDefinite(buf, pivot);
    }
    return ldlt;
}

}  // namespace

double gaussian_log_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& G) {
    const auto ldlt = factor_spd(G);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double quad = residual.dot(ldlt.solve(residual));
    return -0.5 * static_cast<double>(residual.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * quad;
}

double log_likelihood(const Eigen::MatrixXd& Y, const Eigen::VectorXd& predicted_mean, const Eigen::MatrixXd& HA,
                      double rho, const Eigen::MatrixXd& C_delta, double sigma_e) {
    const auto n = predicted_mean.size();
    if (Y.rows() != n || C_delta.rows() != n || (HA.size() && HA.rows() != n))
        throw std::invalid_argument("log likelihood: dimension mismatch");
    Eigen::MatrixXd G = C_delta;
    if (HA.size()) G += rho * rho * HA * HA.transpose();
    G.diagonal().array() += sigma_e * sigma_e;
    const auto ldlt = factor_spd(G);
    const double logdet = ldlt.vectorD().array().log().sum();
    double total = 0.0;
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        const Eigen::VectorXd r = Y.col(j) - rho * predicted_mean;
        total += -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet -
                 0.5 * r.dot(ldlt.solve(r));
    }
    return total;
}

namespace {

struct CalibrationProblem {
    const Eigen::MatrixXd* Y;
    const Eigen::VectorXd* mean;
    const Eigen::MatrixXd* HA;
    const ObservationModel* obs;
    MaternParams init;
    CalibrationSettings settings;
};

double objective(const CalibrationProblem& p, double log_sigma, double log_length) {
    MaternParams w = p.init;
    w.sigma = std::exp(log_sigma);
    w.length = std::exp(log_length);
    double nll;
    try {
        nll = -log_likelihood(*p.Y, *p.mean, *p.HA, p.obs->rho, discrepancy_covariance(*p.obs, w), p.obs->sigma_e);
    } catch (const NotPositiveDefinite&) {
        return std::numeric_limits<double>::infinity();
    }
    const double s2 = p.settings.prior_log_std * p.settings.prior_log_std;
    const double ds = log_sigma - std::log(p.init.sigma);
    const double dl = log_length - std::log(p.init.length);
    return nll + 0.5 * (ds * ds + dl * dl) / s2;
}

double gsl_f(const gsl_vector* x, void* params) {
    const auto& p = *static_cast<const CalibrationProblem*>(params);
    return objective(p, gsl_vector_get(x, 0), gsl_vector_get(x, 1));
}

void gsl_df(const gsl_vector* x, void* params, gsl_vector* g) {
    const auto& p = *static_cast<const CalibrationProblem*>(params);
    const double h = p.settings.fd_step;
    const double a = gsl_vector_get(x, 0), b = gsl_vector_get(x, 1);
    gsl_vector_set(g, 0, (objective(p, a + h, b) - objective(p, a - h, b)) / (2.0 * h));
    gsl_vector_set(g, 1, (objective(p, a, b + h) - objective(p, a, b - h)) / (2.0 * h));
}

void gsl_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
    *f = gsl_f(x, params);
    gsl_df(x, params, g);
}

}  // namespace

CalibrationResult calibrate_hyperparameters(const Eigen::MatrixXd& Y, const Eigen::VectorXd& predicted_mean,
                                            const Eigen::MatrixXd& HA, const ObservationModel& obs,
                                            const MaternParams& init, const CalibrationSettings& settings) {
    init.validate();
    if (Y.cols() == 0) throw std::invalid_argument("calibration needs at least one observation");
    if (!(init.sigma > 0.0)) throw std::invalid_argument("calibration needs a positive initial sigma");
    CalibrationProblem prob{&Y, &predicted_mean, &HA, &obs, init, settings};

    CalibrationResult res;
    res.params = init;
    res.initial_objective = objective(prob, std::log(init.sigma), std::log(init.length));
    res.objective = res.initial_objective;

    gsl_set_error_handler_off();
    gsl_multimin_function_fdf fn{&gsl_f, &gsl_df, &gsl_fdf, 2, &prob};
    gsl_vector* x = gsl_vector_alloc(2);
    gsl_vector_set(x, 0, std::log(init.sigma));
    gsl_vector_set(x, 1, std::log(init.length));
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, 2);
    gsl_multimin_fdfminimizer_set(s, &fn, x, 0.1, 0.1);
    for (int it = 1; it <= settings.max_iterations; ++it) {
        res.iterations = it;
        const int status = gsl_multimin_fdfminimizer_iterate(s);
        if (status != GSL_SUCCESS) break;
        if (gsl_multimin_test_gradient(s->gradient, settings.gradient_tolerance) == GSL_SUCCESS) {
            res.converged = true;
            break;
        }
    }
    const double f = gsl_multimin_fdfminimizer_minimum(s);
    if (std::isfinite(f) && f <= res.initial_objective) {
        res.objective = f;
        res.params.sigma = std::exp(gsl_vector_get(s->x, 0));
        res.params.length = std::exp(gsl_vector_get(s->x, 1));
    }
    // A stalled line search at a flat minimum is reported as converged when
    // the gradient is already small relative to the objective scale.
    if (!res.converged && gsl_multimin_test_gradient(s->gradient, settings.gradient_tolerance * (1.0 + std::abs(f))) ==
                              GSL_SUCCESS)
        res.converged = true;
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    return res;
}

}  // namespace pfenkf::data
