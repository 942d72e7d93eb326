#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/data/observation.hpp"
#include "pfenkf/fracture/field_state.hpp"

namespace pfenkf::data {

/// Observations at one step: column j is y_{n,j} over all channels.
struct DataBatch {
    int step = 0;
    Eigen::MatrixXd Y;

    [[nodiscard]] int num_obs() const { return static_cast<int>(Y.cols()); }
    [[nodiscard]] Eigen::VectorXd sum() const { return Y.rowwise().sum(); }
    [[nodiscard]] Eigen::VectorXd mean() const { return Y.rowwise().mean(); }
};

/// y_j = rho * (truth displacement at the sensors) + e_j, e_j ~ N(0, sigma_e^2 I).
/// The noise stream depends only on (seed, step).
DataBatch generate_data(const fem::FeSpace& truth_space, const fracture::FieldState& truth,
                        const std::vector<fem::Point>& sensors, double rho, double sigma_e, int n_obs,
                        std::uint64_t seed, int step);

/// CSV columns: step, obs_index, sensor_id, component, value.
void write_data_csv(std::ostream& os, const std::vector<DataBatch>& batches, int components,
                    const std::string& config_hash);
std::map<int, DataBatch> read_data_csv(std::istream& is, int components);

/// CSV columns: sensor_id, x[, y].
void write_sensors_csv(std::ostream& os, const std::vector<fem::Point>& sensors, int dim,
                       const std::string& config_hash);
std::vector<fem::Point> read_sensors_csv(std::istream& is);

/// Key-value text: "nu <v>", "sigma <v>", "length <v>".
void write_hyperparameters(std::ostream& os, const MaternParams& w, const std::string& config_hash);
MaternParams read_hyperparameters(std::istream& is);

}  // namespace pfenkf::data
