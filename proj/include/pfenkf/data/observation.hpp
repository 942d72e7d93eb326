#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pfenkf/fem/fe_space.hpp"

namespace pfenkf::data {

/// Matérn kernel hyperparameters w = (nu, sigma, l).
struct MaternParams {
    double nu = 1.5;
    double sigma = 1e-4;
    double length = 0.1;

    void validate() const;
};

/// Sensors observe displacement components only. Channel k = sensor *
/// components + component.
struct ObservationModel {
    std::vector<fem::Point> sensors;
    int components = 1;
    Eigen::SparseMatrix<double, Eigen::RowMajor> H;  // channels x (u, d) DOFs
    double rho = 1.0;
    double sigma_e = 4e-4;
    MaternParams kernel;

    [[nodiscard]] int num_channels() const { return static_cast<int>(sensors.size()) * components; }
    [[nodiscard]] std::vector<fem::Point> channel_locations() const;
};

/// One row per sensor and displacement component; d columns stay empty.
Eigen::SparseMatrix<double, Eigen::RowMajor> build_observation_matrix(const fem::FeSpace& space,
                                                                      const std::vector<fem::Point>& sensors);

ObservationModel make_observation_model(const fem::FeSpace& space, std::vector<fem::Point> sensors, double rho,
                                        double sigma_e, const MaternParams& kernel);

/// n sensors at x_k = x_min + (x_max - x_min) k / (n + 1), k = 1..n.
std::vector<fem::Point> equispaced_sensors_1d(int n, double x_min = -1.0, double x_max = 1.0);

/// n sensors on a near-square grid strictly inside the box.
std::vector<fem::Point> grid_sensors_2d(int n, double x_min, double x_max, double y_min, double y_max);

}  // namespace pfenkf::data
