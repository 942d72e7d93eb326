#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/fem/fe_space.hpp"

namespace pfenkf::fracture {

/// Fields of one realization at pseudo-time step `step`.
struct FieldState {
    Eigen::VectorXd u;    // displacement DOFs, mm (node-major, dim components)
    Eigen::VectorXd d;    // micromorphic DOFs of step n (also the n-1 history for the next step)
    Eigen::VectorXd phi;  // phase field per quadrature point
    Eigen::VectorXd d_prev2;  // micromorphic DOFs one converged step before `d`
    int history = 0;          // converged steps available for extrapolation (0, 1 or 2)
    double last_increment = 0.0;  // load increment of the last converged step
    int step = 0;
    double load = 0.0;  // applied boundary displacement u_D, mm

    /// Stacked Kalman state (a_u, a_d).
    [[nodiscard]] Eigen::VectorXd stacked() const;
    void set_stacked(const Eigen::VectorXd& a);

    friend bool operator==(const FieldState& a, const FieldState& b);
};

/// Undeformed state with zero micromorphic field and the given phase floor.
FieldState make_initial_state(const fem::FeSpace& space, const Eigen::VectorXd& phi_floor);

/// Text dump: one line per node (id, x[, y], u components, d), then one line
/// per quadrature point (element id, qp index, phi). `with_history` appends
/// the extrapolation history so a dump can be used to resume a run.
void write_field_dump(std::ostream& os, const fem::FeSpace& space, const FieldState& state, bool with_history = false);
FieldState read_field_dump(std::istream& is, const fem::FeSpace& space);

}  // namespace pfenkf::fracture
