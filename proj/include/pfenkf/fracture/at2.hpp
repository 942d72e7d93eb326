#pragma once

#include <Eigen/Core>

namespace pfenkf::fracture {

struct At2Values {
    double g;   // degradation (1 - phi)^2
    double dg;  // g'
    double w;   // local dissipation phi^2
    double dw;  // w'
    double cw;  // normalization constant
};

inline At2Values at2_functions(double phi) {
    return {(1.0 - phi) * (1.0 - phi), -2.0 * (1.0 - phi), phi * phi, 2.0 * phi, 2.0};
}

/// Closed-form pointwise phase field and its partial derivatives. The
/// derivatives vanish wherever the floor or the upper bound is active.
struct PhaseValue {
    double phi = 0.0;
    double dphi_dpsi = 0.0;
    double dphi_dd = 0.0;
};

/// phi = min(max((2 psi + alpha d) / (2 psi + alpha + G_c / lambda), floor), 1).
inline PhaseValue local_phase_update(double psi_pos, double d, double floor, double alpha, double fracture_energy,
                                     double length_scale) {
    const double den = 2.0 * psi_pos + alpha + fracture_energy / length_scale;
    const double raw = (2.0 * psi_pos + alpha * d) / den;
    if (raw >= 1.0) return {1.0, 0.0, 0.0};
    if (raw <= floor) return {floor < 1.0 ? floor : 1.0, 0.0, 0.0};
    return {raw, 2.0 * (1.0 - raw) / den, alpha / den};
}

/// a_prev + dt_n (a_prev - a_prev2) / dt_prev. Requires dt_prev > 0.
Eigen::VectorXd extrapolate_micromorphic(const Eigen::VectorXd& a_prev, const Eigen::VectorXd& a_prev2, double dt_n,
                                         double dt_prev);

}  // namespace pfenkf::fracture
