#include "pfenkf/enkf/regularization.hpp"

#include <algorithm>
#include <stdexcept>

namespace pfenkf::enkf {

namespace {

using fracture::FieldState;
using fracture::PhaseContext;
using fracture::Unknowns;

FieldState run_stages(const fracture::FractureProblem& problem, const FieldState& analysed,
                      const RegularizationSettings& s, int n_stagger, RegularizationReport& rep) {
    const auto& space = problem.fe();
    const double ell = problem.params.length_scale;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_qp_total()));
    const PhaseContext at_L{&zero, s.length_scale, nullptr};
    const PhaseContext at_ell{&zero, ell, nullptr};

    Eigen::VectorXd u = analysed.u;
    Eigen::VectorXd d = analysed.d;
    rep.iterations = 0;
    rep.max_subsolve_residual = 0.0;
    auto solve = [&](const char* stage, const PhaseContext& ctx, Unknowns which) {
        const Eigen::VectorXd u_start = u;
        try {
            fracture::NewtonReport r;
            try {
                r = fracture::newton_solve(problem, u, d, analysed.load, ctx, which, s.newton);
            } catch (const fracture::SolverError&) {
                if (which != Unknowns::DisplacementOnly) throw;
                // With d held fixed the displacement equation is the gradient of
                // the energy, so descend on it from the stage's starting point.
                u = u_start;
                const PhaseContext held{ctx.floor, ctx.length_scale, &d};
                r = fracture::minimize_displacement(problem, u, d, analysed.load, held, s.newton);
            }
            rep.iterations += r.iterations;
            rep.max_subsolve_residual = std::max(rep.max_subsolve_residual, r.residual_norm);
        } catch (const fracture::SolverError& e) {
            throw RegularizationError(stage, e);
        } catch (const fracture::AssemblyError& e) {
            throw RegularizationError(stage, fracture::SolverError(e.what(), {}));
        }
    };
    solve("micromorphic at L", at_L, Unknowns::MicromorphicOnly);
    solve("displacement at L", at_L, Unknowns::DisplacementOnly);
    solve("micromorphic at ell", at_ell, Unknowns::MicromorphicOnly);
    for (int j = 0; j < n_stagger; ++j) {
        solve("stagger displacement", at_ell, Unknowns::DisplacementOnly);
        solve("stagger micromorphic", at_ell, Unknowns::MicromorphicOnly);
    }
    rep.final_displacement_residual = fracture::free_residual_norm(
        problem, fracture::assemble_residual(space, problem.params, u, d, at_ell), Unknowns::DisplacementOnly);

    FieldState out = analysed;
    out.phi = fracture::compute_phase(space, problem.params, u, d, at_ell);
    if (s.restore_history) out.phi = out.phi.cwiseMax(analysed.phi);
    out.u = std::move(u);
    out.d = std::move(d);
    fracture::reset_history(out);
    rep.n_stagger_used = n_stagger;
    return out;
}

}  // namespace

FieldState regularize_member(const fracture::FractureProblem& problem, const FieldState& analysed,
                             const RegularizationSettings& settings, RegularizationReport* report) {
    if (!(settings.length_scale > problem.params.length_scale))
        throw std::invalid_argument("regularization length scale must exceed the model length scale");
    if (settings.n_stagger < 1) throw std::invalid_argument("n_stagger must be at least 1");
    RegularizationReport rep;
    rep.attempts = 1;
    try {
        auto out = run_stages(problem, analysed, settings, settings.n_stagger, rep);
        if (report) *report = rep;
        return out;
    } catch (const RegularizationError&) {
        rep.attempts = 2;
        RegularizationSettings retry = settings;
        retry.newton.line_search = true;
        retry.newton.max_iterations *= 2;
        auto out = run_stages(problem, analysed, retry, 2 * settings.n_stagger, rep);
        if (report) *report = rep;
        return out;
    }
}

}  // namespace pfenkf::enkf
