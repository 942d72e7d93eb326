#include "pfenkf/fracture/assembly.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pfenkf/fem/strain_split.hpp"
#include "pfenkf/fracture/at2.hpp"

namespace pfenkf::fracture {

namespace {

using fem::Voigt;

// Element-local kinematics: B maps local displacement DOFs to Voigt strain.
struct ElementKinematics {
    int n_u = 0;   // local displacement DOFs
    int n_v = 0;   // Voigt components in use
    std::array<std::size_t, 6> u_dofs{};
    std::array<std::size_t, 3> d_dofs{};
    std::array<std::array<double, 6>, 3> B{};
    Voigt strain{};
};

ElementKinematics element_kinematics(const fem::FeSpace& space, std::size_t e, const Eigen::VectorXd& u) {
    ElementKinematics k;
    const int dim = space.dim();
    const int npe = space.npe();
    const auto& el = space.mesh().element(e);
    k.n_u = npe * dim;
    k.n_v = dim == 1 ? 1 : 3;
    for (int a = 0; a < npe; ++a) {
        k.d_dofs[a] = space.d_dof(el[a]);
        for (int c = 0; c < dim; ++c) k.u_dofs[a * dim + c] = space.u_dof(el[a], c);
        if (dim == 1) {
            k.B[0][a] = space.grad(e, a, 0);
        } else {
            const double gx = space.grad(e, a, 0), gy = space.grad(e, a, 1);
            k.B[0][2 * a] = gx;
            k.B[1][2 * a + 1] = gy;
            k.B[2][2 * a] = gy;
            k.B[2][2 * a + 1] = gx;
        }
    }
    for (int v = 0; v < k.n_v; ++v) {
        double s = 0.0;
        for (int j = 0; j < k.n_u; ++j) s += k.B[v][j] * u[static_cast<Eigen::Index>(k.u_dofs[j])];
        k.strain[v] = s;
    }
    return k;
}

double interpolate(const fem::FeSpace& space, const ElementKinematics& k, int q, const Eigen::VectorXd& nodal) {
    double s = 0.0;
    for (int a = 0; a < space.npe(); ++a) s += space.shape(q, a) * nodal[static_cast<Eigen::Index>(k.d_dofs[a] - space.num_u_dofs())];
    return s;
}

double floor_at(const PhaseContext& ctx, std::size_t idx) {
    return ctx.floor ? (*ctx.floor)[static_cast<Eigen::Index>(idx)] : 0.0;
}

void check_finite(double v, std::size_t e, const char* what) {
    if (!std::isfinite(v)) throw AssemblyError(std::string("non-finite ") + what + " in element " + std::to_string(e));
}

void check_context(const fem::FeSpace& space, const Eigen::VectorXd& u, const Eigen::VectorXd& d,
                   const PhaseContext& ctx) {
    if (static_cast<std::size_t>(u.size()) != space.num_u_dofs() || static_cast<std::size_t>(d.size()) != space.num_nodes())
        throw std::invalid_argument("assembly: field sizes do not match the FE space");
    if (ctx.floor && static_cast<std::size_t>(ctx.floor->size()) != space.num_qp_total())
        throw std::invalid_argument("assembly: phase floor has wrong size");
    if (ctx.frozen_d && ctx.frozen_d->size() != d.size())
        throw std::invalid_argument("assembly: frozen micromorphic field has wrong size");
    if (!(ctx.length_scale > 0.0)) throw std::invalid_argument("assembly: length scale must be positive");
}

}  // namespace

Eigen::VectorXd compute_phase(const fem::FeSpace& space, const fem::MaterialParams& params, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& d, const PhaseContext& ctx) {
    check_context(space, u, d, ctx);
    const Eigen::VectorXd& d_phase = ctx.frozen_d ? *ctx.frozen_d : d;
    Eigen::VectorXd phi(static_cast<Eigen::Index>(space.num_qp_total()));
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        const auto k = element_kinematics(space, e, u);
        const auto split = fem::strain_energy_split(k.strain, params);
        for (int q = 0; q < space.nqp(); ++q) {
            const std::size_t idx = e * space.nqp() + q;
            phi[static_cast<Eigen::Index>(idx)] =
                local_phase_update(split.psi_pos, interpolate(space, k, q, d_phase), floor_at(ctx, idx), params.penalty,
                                   params.fracture_energy, ctx.length_scale)
                    .phi;
        }
    }
    return phi;
}

Eigen::VectorXd assemble_residual(const fem::FeSpace& space, const fem::MaterialParams& params,
                                  const Eigen::VectorXd& u, const Eigen::VectorXd& d, const PhaseContext& ctx) {
    check_context(space, u, d, ctx);
    const Eigen::VectorXd& d_phase = ctx.frozen_d ? *ctx.frozen_d : d;
    const double gc = params.fracture_energy;
    const double alpha = params.penalty;
    const double lam = ctx.length_scale;
    const int npe = space.npe();
    const int dim = space.dim();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_dofs()));
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        const auto k = element_kinematics(space, e, u);
        const auto split = fem::strain_energy_split(k.strain, params);
        std::array<double, 6> re_u{};
        std::array<double, 3> re_d{};
        for (int q = 0; q < space.nqp(); ++q) {
            const std::size_t idx = e * space.nqp() + q;
            const double w = space.weight(e, q);
            const auto phase = local_phase_update(split.psi_pos, interpolate(space, k, q, d_phase), floor_at(ctx, idx),
                                                  alpha, gc, lam);
            const double g = at2_functions(phase.phi).g;
            const double dq = interpolate(space, k, q, d);
            for (int j = 0; j < k.n_u; ++j) {
                double s = 0.0;
                for (int v = 0; v < k.n_v; ++v) s += k.B[v][j] * (g * split.stress_pos[v] + split.stress_neg[v]);
                re_u[j] += w * s;
            }
            for (int a = 0; a < npe; ++a) {
                double grad_dot = 0.0;
                for (int c = 0; c < dim; ++c) {
                    double grad_d = 0.0;
                    for (int b = 0; b < npe; ++b)
                        grad_d += space.grad(e, b, c) * d[static_cast<Eigen::Index>(space.mesh().element(e)[b])];
                    grad_dot += space.grad(e, a, c) * grad_d;
                }
                re_d[a] += w * (gc * lam * grad_dot - space.shape(q, a) * alpha * (phase.phi - dq));
            }
        }
        for (int j = 0; j < k.n_u; ++j) {
            check_finite(re_u[j], e, "displacement residual");
            r[static_cast<Eigen::Index>(k.u_dofs[j])] += re_u[j];
        }
        for (int a = 0; a < npe; ++a) {
            check_finite(re_d[a], e, "micromorphic residual");
            r[static_cast<Eigen::Index>(k.d_dofs[a])] += re_d[a];
        }
    }
    return r;
}

Eigen::SparseMatrix<double> assemble_tangent(const fem::FeSpace& space, const fem::MaterialParams& params,
                                             const Eigen::VectorXd& u, const Eigen::VectorXd& d,
                                             const PhaseContext& ctx, const TangentOptions& opts) {
    check_context(space, u, d, ctx);
    const bool live_d = ctx.frozen_d == nullptr;
    const Eigen::VectorXd& d_phase = live_d ? d : *ctx.frozen_d;
    const double gc = params.fracture_energy;
    const double alpha = params.penalty;
    const double lam = ctx.length_scale;
    const int npe = space.npe();
    const int dim = space.dim();
    const auto M = static_cast<Eigen::Index>(space.num_dofs());

    std::vector<Eigen::Triplet<double>> trip;
    const std::size_t nloc = static_cast<std::size_t>(npe * (dim + 1));
    trip.reserve(space.num_elements() * nloc * nloc);

    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        const auto k = element_kinematics(space, e, u);
        const auto split = fem::strain_energy_split(k.strain, params);
        fem::VoigtMatrix c_pos, c_neg;
        fem::split_tangent(k.strain, params, c_pos, c_neg);

        double kuu[6][6] = {};
        double kud[6][3] = {};
        double kdu[3][6] = {};
        double kdd[3][3] = {};
        // B^T sigma+ per local displacement DOF.
        std::array<double, 6> bt_spos{};
        for (int j = 0; j < k.n_u; ++j)
            for (int v = 0; v < k.n_v; ++v) bt_spos[j] += k.B[v][j] * split.stress_pos[v];

        for (int q = 0; q < space.nqp(); ++q) {
            const std::size_t idx = e * space.nqp() + q;
            const double w = space.weight(e, q);
            const auto phase = local_phase_update(split.psi_pos, interpolate(space, k, q, d_phase), floor_at(ctx, idx),
                                                  alpha, gc, lam);
            const auto at2 = at2_functions(phase.phi);
            for (int i = 0; i < k.n_u; ++i)
                for (int j = 0; j < k.n_u; ++j) {
                    double s = 0.0;
                    for (int v = 0; v < k.n_v; ++v)
                        for (int t = 0; t < k.n_v; ++t)
                            s += k.B[v][i] * (at2.g * c_pos[v][t] + c_neg[v][t]) * k.B[t][j];
                    s += at2.dg * phase.dphi_dpsi * bt_spos[i] * bt_spos[j];
                    kuu[i][j] += w * s;
                }
            for (int a = 0; a < npe; ++a) {
                const double na = space.shape(q, a);
                for (int j = 0; j < k.n_u; ++j) kdu[a][j] -= w * na * alpha * phase.dphi_dpsi * bt_spos[j];
                for (int b = 0; b < npe; ++b) {
                    const double nb = space.shape(q, b);
                    double gg = 0.0;
                    for (int c = 0; c < dim; ++c) gg += space.grad(e, a, c) * space.grad(e, b, c);
                    double s = gc * lam * gg + alpha * na * nb;
                    if (live_d) s -= alpha * phase.dphi_dd * na * nb;
                    kdd[a][b] += w * s;
                }
                if (live_d)
                    for (int i = 0; i < k.n_u; ++i)
                        kud[i][a] += w * at2.dg * phase.dphi_dd * bt_spos[i] * na;
            }
        }
        for (int i = 0; i < k.n_u; ++i) {
            for (int j = 0; j < k.n_u; ++j) {
                check_finite(kuu[i][j], e, "tangent");
                trip.emplace_back(k.u_dofs[i], k.u_dofs[j], opts.uu_scale * kuu[i][j]);
            }
            if (live_d)
                for (int b = 0; b < npe; ++b) trip.emplace_back(k.u_dofs[i], k.d_dofs[b], kud[i][b]);
        }
        for (int a = 0; a < npe; ++a) {
            for (int j = 0; j < k.n_u; ++j) {
                check_finite(kdu[a][j], e, "tangent");
                trip.emplace_back(k.d_dofs[a], k.u_dofs[j], kdu[a][j]);
            }
            for (int b = 0; b < npe; ++b) trip.emplace_back(k.d_dofs[a], k.d_dofs[b], kdd[a][b]);
        }
    }
    Eigen::SparseMatrix<double> K(M, M);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::VectorXd displacement_residual(const fem::FeSpace& space, const fem::MaterialParams& params,
                                      const Eigen::VectorXd& u, const Eigen::VectorXd& phi) {
    if (static_cast<std::size_t>(phi.size()) != space.num_qp_total())
        throw std::invalid_argument("phase field has wrong size");
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_u_dofs()));
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        const auto k = element_kinematics(space, e, u);
        const auto split = fem::strain_energy_split(k.strain, params);
        for (int q = 0; q < space.nqp(); ++q) {
            const double w = space.weight(e, q);
            const double g = at2_functions(phi[static_cast<Eigen::Index>(e * space.nqp() + q)]).g;
            for (int j = 0; j < k.n_u; ++j) {
                double s = 0.0;
                for (int v = 0; v < k.n_v; ++v) s += k.B[v][j] * (g * split.stress_pos[v] + split.stress_neg[v]);
                r[static_cast<Eigen::Index>(k.u_dofs[j])] += w * s;
            }
        }
    }
    return r;
}

double discrete_energy(const fem::FeSpace& space, const fem::MaterialParams& params, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& d, const PhaseContext& ctx) {
    check_context(space, u, d, ctx);
    const Eigen::VectorXd& d_phase = ctx.frozen_d ? *ctx.frozen_d : d;
    const double length_scale = ctx.length_scale;
    const double gc = params.fracture_energy;
    const double alpha = params.penalty;
    const int dim = space.dim();
    double energy = 0.0;
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        const auto k = element_kinematics(space, e, u);
        const auto split = fem::strain_energy_split(k.strain, params);
        double grad_sq = 0.0;
        for (int c = 0; c < dim; ++c) {
            double g = 0.0;
            for (int b = 0; b < space.npe(); ++b)
                g += space.grad(e, b, c) * d[static_cast<Eigen::Index>(space.mesh().element(e)[b])];
            grad_sq += g * g;
        }
        for (int q = 0; q < space.nqp(); ++q) {
            const std::size_t idx = e * space.nqp() + q;
            const double dq = interpolate(space, k, q, d_phase);
            const double phi =
                local_phase_update(split.psi_pos, dq, floor_at(ctx, idx), alpha, gc, length_scale).phi;
            const auto at2 = at2_functions(phi);
            energy += space.weight(e, q) *
                      (at2.g * split.psi_pos + split.psi_neg + gc / (at2.cw * length_scale) * at2.w +
                       0.5 * gc * length_scale * grad_sq + 0.5 * alpha * (phi - dq) * (phi - dq));
        }
    }
    return energy;
}

}  // namespace pfenkf::fracture
