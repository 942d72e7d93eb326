#include "pfenkf/fracture/stepping.hpp"

#include <stdexcept>
#include <string>

#include "pfenkf/fracture/at2.hpp"

namespace pfenkf::fracture {

LoadSchedule::LoadSchedule(std::vector<LoadSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("load schedule needs at least one segment");
    if (segments_.front().first_step != 1) throw std::invalid_argument("load schedule must start at step 1");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        if (!(segments_[k].increment > 0.0)) throw std::invalid_argument("load increments must be positive");
        if (k > 0 && segments_[k].first_step <= segments_[k - 1].first_step)
            throw std::invalid_argument("load segments must be ordered by step");
    }
}

double LoadSchedule::increment(int step) const {
    if (step < 1) throw std::invalid_argument("load increment requested for step " + std::to_string(step));
    double inc = segments_.front().increment;
    for (const auto& s : segments_)
        if (s.first_step <= step) inc = s.increment;
    return inc;
}

double LoadSchedule::load_at(int step) const {
    double load = 0.0;
    for (int n = 1; n <= step; ++n) load += increment(n);
    return load;
}

void reset_history(FieldState& state) {
    state.history = 0;
    state.d_prev2 = state.d;
    state.last_increment = 0.0;
}

namespace {

int solve_increment(const FractureProblem& problem, FieldState& state, double target_load,
                    const NewtonSettings& settings) {
    const double dt = target_load - state.load;
    Eigen::VectorXd d_check =
        state.history >= 2 ? extrapolate_micromorphic(state.d, state.d_prev2, dt, state.last_increment) : state.d;
    const Eigen::VectorXd floor = state.phi;
    const PhaseContext ctx{&floor, problem.params.length_scale, &d_check};
    Eigen::VectorXd u = state.u;
    Eigen::VectorXd d = state.d;
    int iterations = 0;
    try {
        iterations = newton_solve(problem, u, d, target_load, ctx, Unknowns::Coupled, settings).iterations;
    } catch (const SolverError&) {
        // The forecast system is block-triangular: R_u depends on u only and
        // is the gradient of the reduced energy, R_d is linear in d.
        u = state.u;
        d = state.d;
        iterations = minimize_displacement(problem, u, d, target_load, ctx, settings).iterations;
        iterations += newton_solve(problem, u, d, target_load, ctx, Unknowns::MicromorphicOnly, settings).iterations;
        iterations += newton_solve(problem, u, d, target_load, ctx, Unknowns::Coupled, settings).iterations;
    }

    state.phi = compute_phase(problem.fe(), problem.params, u, d, ctx);
    state.d_prev2 = std::move(state.d);
    state.d = std::move(d);
    state.u = std::move(u);
    state.history = std::min(state.history + 1, 2);
    state.last_increment = dt;
    state.load = target_load;
    return iterations;
}

}  // namespace

StepReport advance_step(const FractureProblem& problem, FieldState& state, double target_load,
                        const NewtonSettings& settings) {
    const double start = state.load;
    const FieldState saved = state;
    for (int cut = 0;; ++cut) {
        const int parts = 1 << cut;
        StepReport rep;
        rep.substeps = parts;
        try {
            for (int k = 1; k <= parts; ++k) {
                const double load = k == parts ? target_load : start + (target_load - start) * k / parts;
                rep.newton_iterations += solve_increment(problem, state, load, settings);
            }
            state.step = saved.step + 1;
            return rep;
        } catch (const SolverError&) {
            state = saved;
            if (cut >= settings.max_load_cuts) throw;
        } catch (const AssemblyError& e) {
            state = saved;
            if (cut >= settings.max_load_cuts) throw SolverError(e.what(), {});
        }
    }
}

double reaction_force(const FractureProblem& problem, const FieldState& state) {
    const auto r = displacement_residual(problem.fe(), problem.params, state.u, state.phi);
    double f = 0.0;
    for (const auto& c : problem.bc.dofs)
        if (c.load_factor != 0.0) f += c.load_factor * r[static_cast<Eigen::Index>(c.dof)];
    return f;
}

}  // namespace pfenkf::fracture
