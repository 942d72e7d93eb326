#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/fem/fe_space.hpp"

namespace pfenkf::enkf {

/// phi-weighted centroid of the quadrature points with phi > threshold (1D).
std::optional<double> crack_position_1d(const fem::FeSpace& space, const Eigen::VectorXd& phi,
                                        double threshold = 0.5);

/// Crack ridge in 2D: the quadrature points inside `band` are binned into
/// columns of width `column_width` along x; each column contributes the
/// point of largest phi when that value exceeds the threshold.
std::vector<fem::Point> crack_path_2d(const fem::FeSpace& space, const Eigen::VectorXd& phi, const fem::Region& band,
                                      double column_width, double threshold = 0.5);

}  // namespace pfenkf::enkf
