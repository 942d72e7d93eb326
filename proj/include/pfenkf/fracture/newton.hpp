#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/fracture/assembly.hpp"
#include "pfenkf/fracture/problem.hpp"

namespace pfenkf::fracture {

struct NewtonSettings {
    double tolerance = 1e-8;  // absolute, Euclidean norm over the free DOFs
    int max_iterations = 25;
    bool line_search = true;
    int max_load_cuts = 4;

    void validate() const {
        if (!(tolerance > 0.0)) throw std::invalid_argument("Newton tolerance must be positive");
        if (max_iterations < 1) throw std::invalid_argument("Newton needs at least one iteration");
        if (max_load_cuts < 0) throw std::invalid_argument("load cuts must be non-negative");
    }
};

/// Which block of the coupled system is solved; the other block is held fixed.
enum class Unknowns { Coupled, DisplacementOnly, MicromorphicOnly };

struct NewtonReport {
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> trace;  // residual norm before each iteration and at exit
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    [[nodiscard]] const std::vector<double>& trace() const { return trace_; }
    [[nodiscard]] double last_residual() const { return trace_.empty() ? 0.0 : trace_.back(); }

private:
    std::vector<double> trace_;
};

/// Newton iteration on R(u, d) = 0 restricted to `which`. Dirichlet values
/// for `load` are written into u before iterating. The Jacobian is the
/// analytic tangent; constrained displacement rows and columns are eliminated.
NewtonReport newton_solve(const FractureProblem& problem, Eigen::VectorXd& u, Eigen::VectorXd& d, double load,
                          const PhaseContext& ctx, Unknowns which, const NewtonSettings& settings,
                          const TangentOptions& tangent = {});

/// Minimizes the displacement part of discrete_energy for a frozen-d
/// context by Newton steps with a Levenberg shift on the (symmetric)
/// displacement tangent, accepting only steps that lower the energy. Used
/// when plain Newton stalls at a snap-back; converges to R_u = 0 within the
/// Newton tolerance or throws SolverError.
NewtonReport minimize_displacement(const FractureProblem& problem, Eigen::VectorXd& u, const Eigen::VectorXd& d,
                                   double load, const PhaseContext& ctx, const NewtonSettings& settings,
                                   int max_iterations = 400);

/// Euclidean norm of the residual over the DOFs solved for by `which`.
double free_residual_norm(const FractureProblem& problem, const Eigen::VectorXd& residual, Unknowns which);

}  // namespace pfenkf::fracture
