#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/fem/fe_space.hpp"
#include "pfenkf/fem/material.hpp"

namespace pfenkf::fracture {

/// Prescribed displacement DOF: value = load_factor * u_D.
struct DirichletDof {
    std::size_t dof;
    double load_factor;
};

struct BoundaryConditions {
    std::vector<DirichletDof> dofs;

    void apply(Eigen::VectorXd& u, double load) const {
        for (const auto& c : dofs) u[static_cast<Eigen::Index>(c.dof)] = c.load_factor * load;
    }
    [[nodiscard]] std::vector<char> constrained_mask(std::size_t n_u) const {
        std::vector<char> mask(n_u, 0);
        for (const auto& c : dofs) mask[c.dof] = 1;
        return mask;
    }
};

/// Tension rod: left end fixed, right end pulled by u_D.
BoundaryConditions tension_rod_conditions(const fem::FeSpace& space);

/// Shear test: bottom clamped, no vertical motion on left/right edges, top
/// moved horizontally by u_D with zero vertical displacement.
BoundaryConditions sens_shear_conditions(const fem::FeSpace& space);

struct FractureProblem {
    std::shared_ptr<const fem::FeSpace> space;
    fem::MaterialParams params;
    BoundaryConditions bc;

    [[nodiscard]] const fem::FeSpace& fe() const { return *space; }
};

}  // namespace pfenkf::fracture
