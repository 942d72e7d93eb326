#include "pfenkf/fracture/problem.hpp"

#include <algorithm>
#include <map>

namespace pfenkf::fracture {

BoundaryConditions tension_rod_conditions(const fem::FeSpace& space) {
    const auto& mesh = space.mesh();
    BoundaryConditions bc;
    for (int n : mesh.boundary("left")) bc.dofs.push_back({space.u_dof(n, 0), 0.0});
    for (int n : mesh.boundary("right")) bc.dofs.push_back({space.u_dof(n, 0), 1.0});
    return bc;
}

BoundaryConditions sens_shear_conditions(const fem::FeSpace& space) {
    const auto& mesh = space.mesh();
    // Later entries override earlier ones so that corner nodes take the
    // bottom/top values.
    std::map<std::size_t, double> fixed;
    for (int n : mesh.boundary("left")) fixed[space.u_dof(n, 1)] = 0.0;
    for (int n : mesh.boundary("right")) fixed[space.u_dof(n, 1)] = 0.0;
    for (int n : mesh.boundary("bottom")) {
        fixed[space.u_dof(n, 0)] = 0.0;
        fixed[space.u_dof(n, 1)] = 0.0;
    }
    for (int n : mesh.boundary("top")) {
        fixed[space.u_dof(n, 0)] = 1.0;
        fixed[space.u_dof(n, 1)] = 0.0;
    }
    BoundaryConditions bc;
    for (const auto& [dof, factor] : fixed) bc.dofs.push_back({dof, factor});
    return bc;
}

}  // namespace pfenkf::fracture
