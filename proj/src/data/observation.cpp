#include "pfenkf/data/observation.hpp"

#include <cmath>
#include <stdexcept>

namespace pfenkf::data {

void MaternParams::validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("Matérn nu must be positive");
    if (!(sigma >= 0.0)) throw std::invalid_argument("Matérn sigma must be non-negative");
    if (!(length > 0.0)) throw std::invalid_argument("Matérn length must be positive");
}

std::vector<fem::Point> ObservationModel::channel_locations() const {
    std::vector<fem::Point> locs;
    locs.reserve(sensors.size() * static_cast<std::size_t>(components));
    for (const auto& s : sensors)
        for (int c = 0; c < components; ++c) locs.push_back(s);
    return locs;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> build_observation_matrix(const fem::FeSpace& space,
                                                                      const std::vector<fem::Point>& sensors) {
    const int dim = space.dim();
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        const auto row = fem::eval_basis(space.mesh(), sensors[s]);
        for (int c = 0; c < dim; ++c)
            for (const auto& [node, value] : row)
                trip.emplace_back(static_cast<int>(s) * dim + c, static_cast<int>(space.u_dof(node, c)), value);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> H(static_cast<Eigen::Index>(sensors.size()) * dim,
                                                   static_cast<Eigen::Index>(space.num_dofs()));
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

ObservationModel make_observation_model(const fem::FeSpace& space, std::vector<fem::Point> sensors, double rho,
                                        double sigma_e, const MaternParams& kernel) {
    if (sensors.empty()) throw std::invalid_argument("observation model needs at least one sensor");
    if (!(sigma_e > 0.0)) throw std::invalid_argument("sensor noise std must be positive");
    kernel.validate();
    ObservationModel obs;
    obs.H = build_observation_matrix(space, sensors);
    obs.sensors = std::move(sensors);
    obs.components = space.dim();
    obs.rho = rho;
    obs.sigma_e = sigma_e;
    obs.kernel = kernel;
    return obs;
}

std::vector<fem::Point> equispaced_sensors_1d(int n, double x_min, double x_max) {
    if (n < 1) throw std::invalid_argument("need at least one sensor");
    std::vector<fem::Point> s;
    for (int k = 1; k <= n; ++k) s.push_back({x_min + (x_max - x_min) * k / (n + 1), 0.0});
    return s;
}

std::vector<fem::Point> grid_sensors_2d(int n, double x_min, double x_max, double y_min, double y_max) {
    if (n < 1) throw std::invalid_argument("need at least one sensor");
    const int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int ny = (n + nx - 1) / nx;
    std::vector<fem::Point> s;
    for (int j = 0; j < ny && static_cast<int>(s.size()) < n; ++j)
        for (int i = 0; i < nx && static_cast<int>(s.size()) < n; ++i)
            s.push_back({x_min + (x_max - x_min) * (i + 0.5) / nx, y_min + (y_max - y_min) * (j + 0.5) / ny});
    return s;
}

}  // namespace pfenkf::data
