#pragma once

#include <optional>
#include <vector>

#include "pfenkf/fracture/field_state.hpp"
#include "pfenkf/fracture/newton.hpp"

namespace pfenkf::fracture {

struct LoadSegment {
    int first_step;    // first step using this increment (1-based)
    double increment;  // mm per step
};

/// Piecewise-constant displacement increments. Step n applies
/// u_D(n) = sum of the increments of steps 1..n.
class LoadSchedule {
public:
    LoadSchedule() = default;
    explicit LoadSchedule(std::vector<LoadSegment> segments);

    [[nodiscard]] double increment(int step) const;
    [[nodiscard]] double load_at(int step) const;
    [[nodiscard]] const std::vector<LoadSegment>& segments() const { return segments_; }

private:
    std::vector<LoadSegment> segments_;
};

struct StepReport {
    int newton_iterations = 0;  // summed over substeps
    int substeps = 1;
};

/// One forecast step: extrapolate d, solve the coupled system with the
/// previous phase field as the floor, store phi as used in the solve. On
/// Newton failure the increment is split into 2, 4, ... substeps up to
/// settings.max_load_cuts times; the last failure is rethrown.
StepReport advance_step(const FractureProblem& problem, FieldState& state, double target_load,
                        const NewtonSettings& settings);

/// Discard the extrapolation history (after an analysis resets the state).
void reset_history(FieldState& state);

/// Reaction force per unit thickness on the loaded boundary, in the loading
/// direction, from the stored phase field.
double reaction_force(const FractureProblem& problem, const FieldState& state);

}  // namespace pfenkf::fracture
