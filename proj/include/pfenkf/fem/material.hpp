#pragma once

#include <stdexcept>

namespace pfenkf::fem {

enum class Kinematics { Uniaxial, PlaneStrain };

/// Elastic and fracture parameters. Units: N, mm.
struct MaterialParams {
    double youngs_modulus = 210000.0;  // E, N/mm^2
    double poisson_ratio = 0.3;        // nu
    double fracture_energy = 2.7;      // G_c, N/mm
    double length_scale = 2.5e-2;      // ell, mm
    double penalty = 0.0;              // alpha, N/mm^2
    Kinematics kinematics = Kinematics::Uniaxial;

    [[nodiscard]] double bulk_modulus() const { return youngs_modulus / (3.0 * (1.0 - 2.0 * poisson_ratio)); }
    [[nodiscard]] double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

    /// Throws std::invalid_argument if any bound is violated.
    void validate() const {
        if (!(youngs_modulus > 0.0)) throw std::invalid_argument("E must be positive");
        if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) throw std::invalid_argument("nu must lie in [0, 0.5)");
        if (!(fracture_energy > 0.0)) throw std::invalid_argument("G_c must be positive");
        if (!(length_scale > 0.0)) throw std::invalid_argument("length scale must be positive");
        if (!(penalty > 0.0)) throw std::invalid_argument("micromorphic penalty must be positive");
    }
};

/// Parameters with the micromorphic penalty set to beta * G_c / ell.
inline MaterialParams make_material(double E, double nu, double Gc, double ell, double beta, Kinematics kin) {
    MaterialParams p{E, nu, Gc, ell, beta * Gc / ell, kin};
    p.validate();
    return p;
}

}  // namespace pfenkf::fem
