#include "pfenkf/fem/strain_split.hpp"

#include <algorithm>

namespace pfenkf::fem {

namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

StrainSplit strain_energy_split(const Voigt& eps, const MaterialParams& p) {
    StrainSplit s;
    if (p.kinematics == Kinematics::Uniaxial) {
        const double E = p.youngs_modulus;
        // Tension drives fracture, compression keeps the full stiffness so
        // that broken elements cannot interpenetrate.
        const double ep = std::max(eps[0], 0.0), en = std::min(eps[0], 0.0);
        s.psi_pos = 0.5 * E * ep * ep;
        s.psi_neg = 0.5 * E * en * en;
        s.stress_pos = {E * ep, 0.0, 0.0};
        s.stress_neg = {E * en, 0.0, 0.0};
        return s;
    }
    const double K = p.bulk_modulus();
    const double mu = p.shear_modulus();
    const double tr = eps[0] + eps[1];
    const double exy = 0.5 * eps[2];
    // Plane strain: eps_zz = 0 contributes (tr/3)^2 to the deviatoric norm.
    const double dev_xx = eps[0] - tr / 3.0;
    const double dev_yy = eps[1] - tr / 3.0;
    const double dev_zz = -tr / 3.0;
    const double dev_sq = dev_xx * dev_xx + dev_yy * dev_yy + dev_zz * dev_zz + 2.0 * exy * exy;
    const double tr_pos = positive_part(tr);
    const double tr_neg = positive_part(-tr);
    s.psi_pos = 0.5 * K * tr_pos * tr_pos + mu * dev_sq;
    s.psi_neg = 0.5 * K * tr_neg * tr_neg;
    s.stress_pos = {K * tr_pos + 2.0 * mu * dev_xx, K * tr_pos + 2.0 * mu * dev_yy, 2.0 * mu * exy};
    s.stress_neg = {-K * tr_neg, -K * tr_neg, 0.0};
    return s;
}

void split_tangent(const Voigt& eps, const MaterialParams& p, VoigtMatrix& c_pos, VoigtMatrix& c_neg) {
    c_pos = {};
    c_neg = {};
    if (p.kinematics == Kinematics::Uniaxial) {
        (eps[0] > 0.0 ? c_pos : c_neg)[0][0] = p.youngs_modulus;
        return;
    }
    const double K = p.bulk_modulus();
    const double mu = p.shear_modulus();
    const double tr = eps[0] + eps[1];
    // At tr = 0 both brackets are inactive; sigma+ keeps the deviatoric part.
    const double kp = tr > 0.0 ? K : 0.0;
    const double kn = tr < 0.0 ? K : 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            c_pos[i][j] = kp + 2.0 * mu * ((i == j ? 1.0 : 0.0) - 1.0 / 3.0);
            c_neg[i][j] = kn;
        }
    c_pos[2][2] = mu;
}

double elastic_energy(const Voigt& eps, const MaterialParams& p) {
    if (p.kinematics == Kinematics::Uniaxial) return 0.5 * p.youngs_modulus * eps[0] * eps[0];
    const double K = p.bulk_modulus();
    const double mu = p.shear_modulus();
    const double lambda = K - 2.0 * mu / 3.0;
    const double tr = eps[0] + eps[1];
    const double exy = 0.5 * eps[2];
    return 0.5 * lambda * tr * tr + mu * (eps[0] * eps[0] + eps[1] * eps[1] + 2.0 * exy * exy);
}

}  // namespace pfenkf::fem
