#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfenkf/fracture/assembly.hpp"

namespace pfenkf::experiment {

/// Outcome of one verification suite. `value` is the measured quantity that
/// is compared against `limit`.
struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

/// Finite-difference check of the residual against the energy and of the
/// tangent against the residual, for live and frozen micromorphic contexts.
/// Errors are relative norms over all DOFs.
struct DerivativeErrors {
    double gradient = 0.0;
    double tangent = 0.0;
};
DerivativeErrors derivative_errors(int dim, int n_states, std::uint64_t seed,
                                   const fracture::TangentOptions& tangent = {});
CheckResult check_derivatives(int dim, int n_states, std::uint64_t seed,
                              const fracture::TangentOptions& tangent = {});

/// Bounds, monotonicity and derivatives of the local phase update on random
/// inputs.
CheckResult check_local_update(std::size_t n_inputs, std::uint64_t seed);

/// Linear-Gaussian toy: sampled EnKF mean against exact conditioning.
CheckResult check_toy_posterior(std::uint64_t seed, int members = 10000);
/// The assembled Kalman shift against an explicit dense inverse.
CheckResult check_dense_gain(std::uint64_t seed);

CheckResult check_inflation(std::uint64_t seed);
CheckResult check_taper_psd(std::uint64_t seed);

CheckResult check_matern_exponential();
CheckResult check_matern_large_nu();
CheckResult check_matern_gram_psd(std::uint64_t seed);

/// Regularizes a perturbed cracked rod and checks phi >= 0, the crack
/// position and the sub-solve residuals.
CheckResult check_regularization(std::uint64_t seed);

/// Every suite above with the default sizes.
std::vector<CheckResult> run_validation(std::uint64_t seed, const fracture::TangentOptions& tangent = {});

}  // namespace pfenkf::experiment
