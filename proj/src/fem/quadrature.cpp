#include "pfenkf/fem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pfenkf::fem {

QuadratureRule gauss_line_2() {
    const double offset = 0.5 / std::sqrt(3.0);
    return {{{0.5 - offset, 0.0}, {0.5 + offset, 0.0}}, {0.5, 0.5}, 3};
}

QuadratureRule triangle_3() {
    const double w = 1.0 / 6.0;
    return {{{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}}, {w, w, w}, 2};
}

QuadratureRule default_rule(int dim) {
    if (dim == 1) return gauss_line_2();
    if (dim == 2) return triangle_3();
    throw std::invalid_argument("quadrature: dimension must be 1 or 2");
}

}  // namespace pfenkf::fem
