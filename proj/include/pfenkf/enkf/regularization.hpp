#pragma once

#include <string>
#include <vector>

#include "pfenkf/fracture/stepping.hpp"

namespace pfenkf::enkf {

struct RegularizationSettings {
    double length_scale = 0.1;  // L, must exceed the model length scale
    int n_stagger = 1;
    /// Take the pointwise max of the rebuilt phase field with the
    /// pre-analysis one. Off by default: damage at a wrongly placed prior
    /// nucleus would then survive every analysis.
    bool restore_history = false;
    fracture::NewtonSettings newton;
};

struct RegularizationReport {
    int attempts = 0;
    int n_stagger_used = 0;
    int iterations = 0;  // Newton iterations over all sub-solves of the successful attempt
    double max_subsolve_residual = 0.0;  // largest converged residual over the sub-solves
    /// R_u at the returned fields (scale ell, zero floor); the closing d-solve
    /// moves phi, so this is not bounded by the Newton tolerance.
    double final_displacement_residual = 0.0;
};

class RegularizationError : public fracture::SolverError {
public:
    RegularizationError(const std::string& stage, const fracture::SolverError& cause)
        : fracture::SolverError("regularization stage '" + stage + "': " + cause.what(), cause.trace()),
          stage_(stage) {}
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Staggered projection of an analysed member back onto the model: d at
/// scale L from the analysed displacement, u at L, d at ell, then n_stagger
/// (u, d) passes at ell, all without the irreversibility floor. The phase
/// field is rebuilt at ell. On failure the whole sequence is retried once
/// with n_stagger doubled, line search on and twice the Newton iterations.
/// The extrapolation history is reset.
fracture::FieldState regularize_member(const fracture::FractureProblem& problem, const fracture::FieldState& analysed,
                                       const RegularizationSettings& settings, RegularizationReport* report = nullptr);

}  // namespace pfenkf::enkf
