#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pfenkf/data/gp.hpp"
#include "pfenkf/enkf/analysis.hpp"
#include "pfenkf/enkf/regularization.hpp"

namespace pfenkf::enkf {

struct FilterConfig {
    int final_step = 0;
    std::set<int> analysis_steps;
    double inflation = 1.0;
    double l_loc = 0.0;  // 0 disables localization
    RegularizationSettings regularization;
    ensemble::ForecastSettings forecast;
    bool recalibrate = false;
    data::CalibrationSettings calibration;

    void validate(double model_length_scale) const;
};

/// Observations for an analysis step.
using DataSource = std::function<data::DataBatch(int step)>;

struct MemberAnalysis {
    std::size_t member = 0;
    double misfit_before = 0.0;
    double misfit_after = 0.0;
    std::optional<double> crack_before;
    std::optional<double> crack_after;  // after regularization
    double force_before = 0.0;
    double force_after = 0.0;
    int regularization_iterations = 0;
    int regularization_attempts = 0;
    bool failed = false;
    std::string failure;
};

struct AnalysisRecord {
    int step = 0;
    AnalysisStats stats;
    data::MaternParams kernel;
    std::vector<MemberAnalysis> members;
};

struct FilterResult {
    ensemble::EnsembleState final_state;
    std::vector<std::vector<double>> forces;  // [step][member], NaN for failed members; row 0 is the initial state
    std::vector<AnalysisRecord> analyses;
};

/// Called after every completed step (forecast and, if any, analysis).
using StepObserver = std::function<void(int step, const ensemble::EnsembleState&)>;

/// Forecast from the prior to config.final_step; at analysis steps inflate,
/// apply the localized Kalman shift and regularize every member.
FilterResult run_filter(const fracture::FractureProblem& problem, ensemble::EnsembleState prior,
                        const fracture::LoadSchedule& schedule, data::ObservationModel obs, const FilterConfig& config,
                        const DataSource& data_source, const StepObserver& observer = {});

/// Mean and sample std over the values that are present.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

/// One row per member and analysis step.
void write_analysis_report(std::ostream& os, const std::vector<AnalysisRecord>& records,
                           const std::string& config_hash);

/// Columns: step, load, member_0, member_1, ...
void write_force_table(std::ostream& os, const std::vector<std::vector<double>>& forces,
                       const fracture::LoadSchedule& schedule, const std::string& config_hash);

}  // namespace pfenkf::enkf
