#include "pfenkf/fracture/at2.hpp"

#include <stdexcept>

namespace pfenkf::fracture {

Eigen::VectorXd extrapolate_micromorphic(const Eigen::VectorXd& a_prev, const Eigen::VectorXd& a_prev2, double dt_n,
                                         double dt_prev) {
    if (!(dt_prev > 0.0)) throw std::invalid_argument("extrapolation needs a positive previous increment");
    if (a_prev.size() != a_prev2.size()) throw std::invalid_argument("extrapolation history size mismatch");
    if (dt_n == 0.0) return a_prev;
    return a_prev + (dt_n / dt_prev) * (a_prev - a_prev2);
}

}  // namespace pfenkf::fracture
