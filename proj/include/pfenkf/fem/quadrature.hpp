#pragma once

#include <array>
#include <vector>

namespace pfenkf::fem {

/// Points in reference coordinates. The reference line is [0, 1]; the
/// reference triangle has vertices (0,0), (1,0), (0,1).
struct QuadratureRule {
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
    int degree = 0;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
};

/// Two-point Gauss rule on [0, 1], exact for cubics.
QuadratureRule gauss_line_2();
/// Three-point interior rule on the reference triangle, exact for quadratics.
QuadratureRule triangle_3();
/// The order-2 rule used for the given dimension.
QuadratureRule default_rule(int dim);

}  // namespace pfenkf::fem
