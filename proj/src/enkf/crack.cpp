#include "pfenkf/enkf/crack.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace pfenkf::enkf {

std::optional<double> crack_position_1d(const fem::FeSpace& space, const Eigen::VectorXd& phi, double threshold) {
    if (static_cast<std::size_t>(phi.size()) != space.num_qp_total())
        throw std::invalid_argument("phase field has wrong size");
    double w = 0.0, wx = 0.0;
    for (std::size_t e = 0; e < space.num_elements(); ++e)
        for (int q = 0; q < space.nqp(); ++q) {
            const double p = phi[static_cast<Eigen::Index>(e * space.nqp() + q)];
            if (p > threshold) {
                w += p;
                wx += p * space.qp_coord(e, q)[0];
            }
        }
    if (w == 0.0) return std::nullopt;
    return wx / w;
}

std::vector<fem::Point> crack_path_2d(const fem::FeSpace& space, const Eigen::VectorXd& phi, const fem::Region& band,
                                      double column_width, double threshold) {
    if (static_cast<std::size_t>(phi.size()) != space.num_qp_total())
        throw std::invalid_argument("phase field has wrong size");
    if (!(column_width > 0.0)) throw std::invalid_argument("column width must be positive");
    std::map<long, std::pair<double, fem::Point>> best;
    for (std::size_t e = 0; e < space.num_elements(); ++e)
        for (int q = 0; q < space.nqp(); ++q) {
            const auto x = space.qp_coord(e, q);
            if (!band.contains(x)) continue;
            const double p = phi[static_cast<Eigen::Index>(e * space.nqp() + q)];
            const long col = static_cast<long>(std::floor((x[0] - band.x_min) / column_width));
            auto it = best.find(col);
            if (it == best.end() || p > it->second.first) best[col] = {p, x};
        }
    std::vector<fem::Point> path;
    for (const auto& [col, v] : best)
        if (v.first > threshold) path.push_back(v.second);
    return path;
}

}  // namespace pfenkf::enkf
