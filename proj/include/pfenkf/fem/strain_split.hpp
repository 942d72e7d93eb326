#pragma once

#include <array>

#include "pfenkf/fem/material.hpp"

namespace pfenkf::fem {

/// Symmetric strain or stress in Voigt order (xx, yy, xy). Strains carry the
/// engineering shear gamma_xy = 2 eps_xy; stresses carry sigma_xy. In the
/// uniaxial case only the first entry is used.
using Voigt = std::array<double, 3>;
using VoigtMatrix = std::array<std::array<double, 3>, 3>;

struct StrainSplit {
    double psi_pos = 0.0;  // fracture-driving energy density
    double psi_neg = 0.0;  // residual energy density
    Voigt stress_pos{};
    Voigt stress_neg{};
};

/// Volumetric-deviatoric split (plane strain) or the uniaxial
/// tension-compression split Psi+- = E <+-eps>^2 / 2.
StrainSplit strain_energy_split(const Voigt& strain, const MaterialParams& params);

/// Tangent moduli d(sigma+)/d(eps) and d(sigma-)/d(eps).
void split_tangent(const Voigt& strain, const MaterialParams& params, VoigtMatrix& c_pos, VoigtMatrix& c_neg);

/// Undamaged elastic energy density.
double elastic_energy(const Voigt& strain, const MaterialParams& params);

}  // namespace pfenkf::fem
