#pragma once

#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pfenkf/fem/fe_space.hpp"
#include "pfenkf/fem/material.hpp"

namespace pfenkf::fracture {

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How the pointwise phase field is evaluated during assembly.
struct PhaseContext {
    const Eigen::VectorXd* floor = nullptr;     // phi' per quadrature point; null means zero
    double length_scale = 0.0;                  // lambda (ell normally, L while regularizing)
    const Eigen::VectorXd* frozen_d = nullptr;  // nodal field entering phi; null means the live d
};

/// Test hook: scales the displacement block of the tangent.
struct TangentOptions {
    double uu_scale = 1.0;
};

/// Phase field at every quadrature point (element-major).
Eigen::VectorXd compute_phase(const fem::FeSpace& space, const fem::MaterialParams& params, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& d, const PhaseContext& ctx);

/// Full residual (R_u, R_d) without Dirichlet elimination.
Eigen::VectorXd assemble_residual(const fem::FeSpace& space, const fem::MaterialParams& params,
                                  const Eigen::VectorXd& u, const Eigen::VectorXd& d, const PhaseContext& ctx);

/// Jacobian of assemble_residual with respect to (u, d). With a frozen d the
/// displacement rows do not depend on d and the d rows are linear in d.
Eigen::SparseMatrix<double> assemble_tangent(const fem::FeSpace& space, const fem::MaterialParams& params,
                                             const Eigen::VectorXd& u, const Eigen::VectorXd& d,
                                             const PhaseContext& ctx, const TangentOptions& opts = {});

/// Displacement residual for a given phase field per quadrature point.
Eigen::VectorXd displacement_residual(const fem::FeSpace& space, const fem::MaterialParams& params,
                                      const Eigen::VectorXd& u, const Eigen::VectorXd& phi);

/// Discrete micromorphic energy with phi = phi_hat(u, d_phase; floor, lambda),
/// where d_phase is the frozen field of the context or the live d. With a
/// live context its gradient is the full residual; with a frozen one its
/// displacement gradient is R_u.
double discrete_energy(const fem::FeSpace& space, const fem::MaterialParams& params, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& d, const PhaseContext& ctx);

}  // namespace pfenkf::fracture
