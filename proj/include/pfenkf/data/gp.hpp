#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/data/observation.hpp"

namespace pfenkf::data {

class NotPositiveDefinite : public std::runtime_error {
public:
    NotPositiveDefinite(const std::string& what, double pivot) : std::runtime_error(what), pivot_(pivot) {}
    [[nodiscard]] double smallest_pivot() const { return pivot_; }

private:
    double pivot_;
};

/// Matérn covariance at distance r >= 0; sigma^2 at r = 0.
double matern(double r, const MaternParams& w);
double matern(const fem::Point& x, const fem::Point& y, const MaternParams& w);

Eigen::MatrixXd matern_gram(const std::vector<fem::Point>& a, const std::vector<fem::Point>& b,
                            const MaternParams& w);

/// Discrepancy covariance over observation channels: Matérn between sensor
/// locations for equal components, zero across components.
Eigen::MatrixXd discrepancy_covariance(const ObservationModel& obs, const MaternParams& w);

/// log N(r; 0, G) via LDLT. Throws NotPositiveDefinite with the smallest pivot.
double gaussian_log_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& G);

/// Sum over columns of Y of log N(y_j; rho H mean, G),
/// G = rho^2 H C_a H^T + C_delta + C_e with H C_a H^T = HA HA^T.
double log_likelihood(const Eigen::MatrixXd& Y, const Eigen::VectorXd& predicted_mean, const Eigen::MatrixXd& HA,
                      double rho, const Eigen::MatrixXd& C_delta, double sigma_e);

struct CalibrationSettings {
    double prior_log_std = 1.0;  // log-normal priors around the initial values
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;
    double fd_step = 1e-5;
};

struct CalibrationResult {
    MaternParams params;
    double objective = 0.0;          // negative log posterior at params
    double initial_objective = 0.0;  // same at the initial guess
    int iterations = 0;
    bool converged = false;
};

/// MAP estimate of (sigma, l) in log space with nu fixed.
CalibrationResult calibrate_hyperparameters(const Eigen::MatrixXd& Y, const Eigen::VectorXd& predicted_mean,
                                            const Eigen::MatrixXd& HA, const ObservationModel& obs,
                                            const MaternParams& init, const CalibrationSettings& settings = {});

}  // namespace pfenkf::data
