#include "pfenkf/fracture/newton.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace pfenkf::fracture {

namespace {

// Global indices of the unknowns for `which`, in increasing order.
std::vector<Eigen::Index> active_dofs(const FractureProblem& problem, Unknowns which) {
    const auto& space = problem.fe();
    const std::size_t n_u = space.num_u_dofs();
    const auto mask = problem.bc.constrained_mask(n_u);
    std::vector<Eigen::Index> act;
    if (which != Unknowns::MicromorphicOnly)
        for (std::size_t i = 0; i < n_u; ++i)
            if (!mask[i]) act.push_back(static_cast<Eigen::Index>(i));
    if (which != Unknowns::DisplacementOnly)
        for (std::size_t i = n_u; i < space.num_dofs(); ++i) act.push_back(static_cast<Eigen::Index>(i));
    return act;
}

Eigen::SparseMatrix<double> restrict_matrix(const Eigen::SparseMatrix<double>& K, const std::vector<Eigen::Index>& act,
                                            const std::vector<Eigen::Index>& local_of) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(K.nonZeros()));
    for (Eigen::Index c = 0; c < K.outerSize(); ++c) {
        const Eigen::Index lc = local_of[static_cast<std::size_t>(c)];
        if (lc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
            const Eigen::Index lr = local_of[static_cast<std::size_t>(it.row())];
            if (lr >= 0) trip.emplace_back(lr, lc, it.value());
        }
    }
    const auto n = static_cast<Eigen::Index>(act.size());
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& act) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(act.size()));
    for (std::size_t k = 0; k < act.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[act[k]];
    return out;
}

void scatter_add(Eigen::VectorXd& u, Eigen::VectorXd& d, const Eigen::VectorXd& step,
                 const std::vector<Eigen::Index>& act, double scale) {
    const Eigen::Index n_u = u.size();
    for (std::size_t k = 0; k < act.size(); ++k) {
        const Eigen::Index g = act[k];
        const double s = scale * step[static_cast<Eigen::Index>(k)];
        if (g < n_u)
            u[g] += s;
        else
            d[g - n_u] += s;
    }
}

const char* label(Unknowns which) {
    switch (which) {
        case Unknowns::Coupled: return "coupled";
        case Unknowns::DisplacementOnly: return "displacement";
        case Unknowns::MicromorphicOnly: return "micromorphic";
    }
    return "?";
}

}  // namespace

double free_residual_norm(const FractureProblem& problem, const Eigen::VectorXd& residual, Unknowns which) {
    return gather(residual, active_dofs(problem, which)).norm();
}

NewtonReport newton_solve(const FractureProblem& problem, Eigen::VectorXd& u, Eigen::VectorXd& d, double load,
                          const PhaseContext& ctx, Unknowns which, const NewtonSettings& settings,
                          const TangentOptions& tangent) {
    settings.validate();
    const auto& space = problem.fe();
    problem.bc.apply(u, load);
    const auto act = active_dofs(problem, which);
    std::vector<Eigen::Index> local_of(space.num_dofs(), -1);
    for (std::size_t k = 0; k < act.size(); ++k) local_of[static_cast<std::size_t>(act[k])] = static_cast<Eigen::Index>(k);

    NewtonReport report;
    auto residual = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& dd) {
        return gather(assemble_residual(space, problem.params, uu, dd, ctx), act);
    };
    Eigen::VectorXd r = residual(u, d);
    double norm = r.norm();
    report.trace.push_back(norm);

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    for (int it = 0; it < settings.max_iterations; ++it) {
        if (!std::isfinite(norm)) break;
        if (norm <= settings.tolerance) {
            report.iterations = it;
            report.residual_norm = norm;
            return report;
        }
        const auto K = restrict_matrix(assemble_tangent(space, problem.params, u, d, ctx, tangent), act, local_of);
        if (!analyzed) {
            lu.analyzePattern(K);
            analyzed = true;
        }
        lu.factorize(K);
        if (lu.info() != Eigen::Success) break;
        const Eigen::VectorXd step = lu.solve(-r);
        if (lu.info() != Eigen::Success || !step.allFinite()) break;

        double t = 1.0;
        Eigen::VectorXd u_try = u, d_try = d;
        scatter_add(u_try, d_try, step, act, t);
        Eigen::VectorXd r_try;
        try {
            r_try = residual(u_try, d_try);
        } catch (const AssemblyError&) {
            r_try = Eigen::VectorXd::Constant(r.size(), std::numeric_limits<double>::infinity());
        }
        if (settings.line_search) {
            for (int ls = 0; ls < 10 && !(r_try.norm() < (1.0 - 1e-4 * t) * norm); ++ls) {
                t *= 0.5;
                u_try = u;
                d_try = d;
                scatter_add(u_try, d_try, step, act, t);
                try {
                    r_try = residual(u_try, d_try);
                } catch (const AssemblyError&) {
                    r_try = Eigen::VectorXd::Constant(r.size(), std::numeric_limits<double>::infinity());
                }
            }
        }
        u = std::move(u_try);
        d = std::move(d_try);
        r = std::move(r_try);
        norm = r.norm();
        report.trace.push_back(norm);
        report.iterations = it + 1;
    }
    if (std::isfinite(norm) && norm <= settings.tolerance) {
        report.residual_norm = norm;
        return report;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s Newton solve did not converge after %d iterations (residual %.3e)", label(which),
                  report.iterations, norm);
    throw SolverError(buf, report.trace);
}

NewtonReport minimize_displacement(const FractureProblem& problem, Eigen::VectorXd& u, const Eigen::VectorXd& d,
                                   double load, const PhaseContext& ctx, const NewtonSettings& settings,
                                   int max_iterations) {
    settings.validate();
    if (!ctx.frozen_d) throw std::invalid_argument("energy minimization needs a frozen micromorphic field");
    const auto& space = problem.fe();
    problem.bc.apply(u, load);
    const auto act = active_dofs(problem, Unknowns::DisplacementOnly);
    std::vector<Eigen::Index> local_of(space.num_dofs(), -1);
    for (std::size_t k = 0; k < act.size(); ++k) local_of[static_cast<std::size_t>(act[k])] = static_cast<Eigen::Index>(k);
    Eigen::VectorXd d_unused = d;
    auto residual = [&](const Eigen::VectorXd& uu) {
        return gather(assemble_residual(space, problem.params, uu, d, ctx), act);
    };
    auto energy = [&](const Eigen::VectorXd& uu) { return discrete_energy(space, problem.params, uu, d, ctx); };

    NewtonReport report;
    Eigen::VectorXd r = residual(u);
    double norm = r.norm();
    double E = energy(u);
    report.trace.push_back(norm);
    double mu = 0.0;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    bool analyzed = false;
    for (int it = 0; it < max_iterations && norm > settings.tolerance; ++it) {
        const auto K = restrict_matrix(assemble_tangent(space, problem.params, u, d, ctx), act, local_of);
        const double scale = K.diagonal().cwiseAbs().maxCoeff();
        Eigen::SparseMatrix<double> I(K.rows(), K.cols());
        I.setIdentity();
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            const Eigen::SparseMatrix<double> Ks = K + (mu * scale) * I;
            if (!analyzed) {
                llt.analyzePattern(Ks);
                analyzed = true;
            }
            llt.factorize(Ks);
            if (llt.info() == Eigen::Success) {
                const Eigen::VectorXd step = llt.solve(-r);
                Eigen::VectorXd u_try = u, d_dummy = d_unused;
                scatter_add(u_try, d_dummy, step, act, 1.0);
                const double E_try = energy(u_try);
                const Eigen::VectorXd r_try = residual(u_try);
                // Near the minimizer the energy change drowns in round-off, so a
                // step that lowers the residual without raising the energy
                // beyond that level is accepted too.
                const double noise = 1e-12 * std::max(1.0, std::abs(E));
                if (std::isfinite(E_try) && (E_try < E || (E_try <= E + noise && r_try.norm() < norm))) {
                    u = std::move(u_try);
                    r = r_try;
                    E = E_try;
                    // A shifted step is short along soft directions; keep
                    // doubling it while the energy still drops.
                    for (int grow = 0; mu > 0.0 && grow < 20; ++grow) {
                        Eigen::VectorXd u_far = u;
                        scatter_add(u_far, d_dummy, step, act, std::ldexp(1.0, grow));
                        const double E_far = energy(u_far);
                        if (!(E_far < E)) break;
                        u = std::move(u_far);
                        E = E_far;
                        r = residual(u);
                    }
                    norm = r.norm();
                    accepted = true;
                    mu = mu < 1e-10 ? 0.0 : mu / 4.0;
                    break;
                }
            }
            mu = mu == 0.0 ? 1e-8 : mu * 4.0;
        }
        report.trace.push_back(norm);
        report.iterations = it + 1;
        if (!accepted) break;
    }
    report.residual_norm = norm;
    if (norm <= settings.tolerance) return report;
    char buf[160];
    std::snprintf(buf, sizeof buf, "displacement energy minimization did not converge after %d iterations (residual %.3e)",
                  report.iterations, norm);
    throw SolverError(buf, report.trace);
}

}  // namespace pfenkf::fracture
