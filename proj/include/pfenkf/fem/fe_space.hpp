#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "pfenkf/fem/mesh.hpp"
#include "pfenkf/fem/quadrature.hpp"

namespace pfenkf::fem {

class SensorOutsideMesh : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sparse row of basis values: (node index, value).
using BasisRow = std::vector<std::pair<int, double>>;

/// Linear Lagrange space on a mesh with precomputed element geometry.
///
/// DOF layout of the coupled vector a = (a_u, a_d): displacement component c
/// of node n sits at dim*n + c, the micromorphic value of node n at
/// dim*num_nodes + n.
class FeSpace {
public:
    explicit FeSpace(std::shared_ptr<const Mesh> mesh, QuadratureRule rule);
    explicit FeSpace(std::shared_ptr<const Mesh> mesh);

    [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
    [[nodiscard]] std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    [[nodiscard]] const QuadratureRule& rule() const { return rule_; }
    [[nodiscard]] int dim() const { return mesh_->dim(); }
    [[nodiscard]] int npe() const { return mesh_->nodes_per_element(); }
    [[nodiscard]] int nqp() const { return static_cast<int>(rule_.size()); }
    [[nodiscard]] std::size_t num_elements() const { return mesh_->num_elements(); }
    [[nodiscard]] std::size_t num_nodes() const { return mesh_->num_nodes(); }
    [[nodiscard]] std::size_t num_qp_total() const { return num_elements() * rule_.size(); }
    [[nodiscard]] std::size_t num_u_dofs() const { return num_nodes() * dim(); }
    [[nodiscard]] std::size_t num_dofs() const { return num_nodes() * (dim() + 1); }

    [[nodiscard]] std::size_t u_dof(std::size_t node, int comp) const { return node * dim() + comp; }
    [[nodiscard]] std::size_t d_dof(std::size_t node) const { return num_u_dofs() + node; }

    /// Shape function a at quadrature point q (same on every element).
    [[nodiscard]] double shape(int q, int a) const { return shape_[q * npe() + a]; }
    /// Physical gradient component k of shape function a on element e.
    [[nodiscard]] double grad(std::size_t e, int a, int k) const { return grad_[(e * npe() + a) * 2 + k]; }
    /// Integration weight (reference weight times Jacobian) of point q on element e.
    [[nodiscard]] double weight(std::size_t e, int q) const { return weight_[e * nqp() + q]; }
    [[nodiscard]] Point qp_coord(std::size_t e, int q) const;

    /// Physical location of every entry of the coupled DOF vector.
    [[nodiscard]] std::vector<Point> dof_locations() const;

private:
    std::shared_ptr<const Mesh> mesh_;
    QuadratureRule rule_;
    std::vector<double> shape_;
    std::vector<double> grad_;
    std::vector<double> weight_;
};

/// Values of the nodal basis functions at a point. Nonzero only on the
/// nodes of the containing element. Points within 1e-10 of the domain
/// boundary are accepted.
BasisRow eval_basis(const Mesh& mesh, const Point& point);

}  // namespace pfenkf::fem
