#include "pfenkf/fem/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pfenkf::fem {

namespace {

constexpr double kInsideTol = 1e-10;

std::array<double, 3> reference_shape(int dim, const std::array<double, 2>& xi) {
    if (dim == 1) return {1.0 - xi[0], xi[0], 0.0};
    return {1.0 - xi[0] - xi[1], xi[0], xi[1]};
}

std::string format_point(const Point& p) {
    std::ostringstream os;
    os << "(" << p[0] << ", " << p[1] << ")";
    return os.str();
}

}  // namespace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh) : FeSpace(mesh, default_rule(mesh->dim())) {}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, QuadratureRule rule)
    : mesh_(std::move(mesh)), rule_(std::move(rule)) {
    const int n_a = npe();
    const int n_q = nqp();
    const int d = dim();
    shape_.resize(static_cast<std::size_t>(n_q * n_a));
    for (int q = 0; q < n_q; ++q) {
        const auto n = reference_shape(d, rule_.points[q]);
        for (int a = 0; a < n_a; ++a) shape_[q * n_a + a] = n[a];
    }
    const std::size_t ne = mesh_->num_elements();
    grad_.assign(ne * n_a * 2, 0.0);
    weight_.resize(ne * n_q);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& el = mesh_->element(e);
        if (d == 1) {
            const double h = mesh_->element_measure(e);
            grad_[(e * n_a + 0) * 2] = -1.0 / h;
            grad_[(e * n_a + 1) * 2] = 1.0 / h;
            for (int q = 0; q < n_q; ++q) weight_[e * n_q + q] = rule_.weights[q] * h;
        } else {
            const auto& p0 = mesh_->node(el[0]);
            const auto& p1 = mesh_->node(el[1]);
            const auto& p2 = mesh_->node(el[2]);
            const double j11 = p1[0] - p0[0], j12 = p2[0] - p0[0];
            const double j21 = p1[1] - p0[1], j22 = p2[1] - p0[1];
            const double det = j11 * j22 - j12 * j21;
            // Reference gradients: N0 = (-1,-1), N1 = (1,0), N2 = (0,1); map with J^{-T}.
            const double ref[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
            for (int a = 0; a < 3; ++a) {
                grad_[(e * n_a + a) * 2 + 0] = (j22 * ref[a][0] - j21 * ref[a][1]) / det;
                grad_[(e * n_a + a) * 2 + 1] = (-j12 * ref[a][0] + j11 * ref[a][1]) / det;
            }
            for (int q = 0; q < n_q; ++q) weight_[e * n_q + q] = rule_.weights[q] * det;
        }
    }
}

Point FeSpace::qp_coord(std::size_t e, int q) const {
    const auto& el = mesh_->element(e);
    Point x{0.0, 0.0};
    for (int a = 0; a < npe(); ++a) {
        const auto& p = mesh_->node(el[a]);
        x[0] += shape(q, a) * p[0];
        x[1] += shape(q, a) * p[1];
    }
    return x;
}

std::vector<Point> FeSpace::dof_locations() const {
    std::vector<Point> locs(num_dofs());
    for (std::size_t n = 0; n < num_nodes(); ++n) {
        for (int c = 0; c < dim(); ++c) locs[u_dof(n, c)] = mesh_->node(n);
        locs[d_dof(n)] = mesh_->node(n);
    }
    return locs;
}

BasisRow eval_basis(const Mesh& mesh, const Point& point) {
    if (mesh.dim() == 1) {
        const double x = point[0];
        const auto& nodes = mesh.nodes();
        const double x0 = nodes.front()[0], x1 = nodes.back()[0];
        if (x < x0 - kInsideTol || x > x1 + kInsideTol)
            throw SensorOutsideMesh("sensor outside mesh at " + format_point(point));
        const double xc = std::clamp(x, x0, x1);
        auto it = std::upper_bound(nodes.begin(), nodes.end(), xc,
                                   [](double v, const Point& p) { return v < p[0]; });
        std::size_t right = static_cast<std::size_t>(std::distance(nodes.begin(), it));
        if (right >= nodes.size()) right = nodes.size() - 1;
        if (right == 0) right = 1;
        const std::size_t left = right - 1;
        const double h = nodes[right][0] - nodes[left][0];
        const double t = (xc - nodes[left][0]) / h;
        BasisRow row;
        if (1.0 - t != 0.0) row.emplace_back(static_cast<int>(left), 1.0 - t);
        if (t != 0.0) row.emplace_back(static_cast<int>(right), t);
        return row;
    }

    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        const auto& p0 = mesh.node(el[0]);
        const auto& p1 = mesh.node(el[1]);
        const auto& p2 = mesh.node(el[2]);
        const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        const double dx = point[0] - p0[0], dy = point[1] - p0[1];
        const double l1 = ((p2[1] - p0[1]) * dx - (p2[0] - p0[0]) * dy) / det;
        const double l2 = (-(p1[1] - p0[1]) * dx + (p1[0] - p0[0]) * dy) / det;
        const double l0 = 1.0 - l1 - l2;
        const double scale = mesh.element_size(e);
        const double tol = kInsideTol / scale;
        if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
            BasisRow row;
            const double ls[3] = {l0, l1, l2};
            for (int a = 0; a < 3; ++a)
                if (ls[a] != 0.0) row.emplace_back(el[a], ls[a]);
            return row;
        }
    }
    throw SensorOutsideMesh("sensor outside mesh at " + format_point(point));
}

}  // namespace pfenkf::fem
