#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "pfenkf/data/dataset.hpp"
#include "pfenkf/enkf/filter.hpp"
#include "pfenkf/experiment/config.hpp"

namespace pfenkf::experiment {

/// Ensemble and ground-truth discretizations plus the observation layout.
struct Setup {
    std::shared_ptr<const fem::Mesh> mesh;
    std::shared_ptr<const fem::Mesh> truth_mesh;
    fracture::FractureProblem problem;
    fracture::FractureProblem truth_problem;
    fracture::LoadSchedule schedule;
    std::vector<fem::Point> sensors;
    data::ObservationModel obs;
};

Setup build_setup(const ExperimentConfig& config);

/// Seed of the sensor-noise stream, derived from the master seed.
std::uint64_t data_seed(const ExperimentConfig& config);

struct TruthRun {
    std::vector<double> loads;   // index = step, entry 0 is the undeformed state
    std::vector<double> forces;
    std::map<int, fracture::FieldState> snapshots;
};

/// Ground truth on the truth mesh up to `last_step`, keeping the states at
/// `snapshot_steps`. Throws fracture::SolverError with the step in the message.
TruthRun run_truth(const Setup& setup, const ExperimentConfig& config, int last_step,
                   const std::set<int>& snapshot_steps);

/// Noisy observations of the truth at every analysis step.
std::map<int, data::DataBatch> generate_observations(const Setup& setup, const ExperimentConfig& config,
                                                     const TruthRun& truth);

struct FilterRun {
    enkf::FilterResult result;
    /// Same prior and forecasts without any analysis, if requested.
    std::optional<std::vector<std::vector<double>>> no_analysis_forces;
};

/// The prior ensemble of the configuration.
ensemble::EnsembleState sample_prior_ensemble(const Setup& setup, const ExperimentConfig& config);

FilterRun run_filter_experiment(const Setup& setup, const ExperimentConfig& config,
                                const std::map<int, data::DataBatch>& data, int threads,
                                const enkf::StepObserver& observer = {});

/// Hyperparameter fit at the first analysis step: forecast the prior to that
/// step and maximize the data likelihood over (sigma, l).
data::CalibrationResult run_calibration(const Setup& setup, const ExperimentConfig& config,
                                        const std::map<int, data::DataBatch>& data, int threads);

/// Linear-Gaussian check: EnKF posterior mean from a sampled ensemble against
/// exact Gaussian conditioning.
struct ToyResult {
    Eigen::VectorXd truth;
    Eigen::VectorXd prior_mean;
    Eigen::VectorXd exact_posterior_mean;
    Eigen::VectorXd ensemble_posterior_mean;
    double max_relative_error = 0.0;  // relative to the largest exact entry
};
ToyResult run_linear_toy(const ExperimentConfig& config);

/// Crack position statistics per analysis step (1D): mean and std before
/// and after, with the number of members that carry a crack.
struct CrackSummary {
    int step = 0;
    double mean_before = 0.0, std_before = 0.0;
    double mean_after = 0.0, std_after = 0.0;
    int cracked_before = 0, cracked_after = 0;
};
std::vector<CrackSummary> crack_summary(const std::vector<enkf::AnalysisRecord>& records);

/// Largest relative spread (max - min) / |mean| of the member forces over the
/// steps 1..last_step.
double max_relative_force_spread(const std::vector<std::vector<double>>& forces, int last_step);

// Output writers. Every file starts with a "# config_hash" comment line.
void write_truth_outputs(const std::filesystem::path& dir, const Setup& setup, const ExperimentConfig& config,
                         const TruthRun& truth);
void write_data_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const Setup& setup,
                        const std::map<int, data::DataBatch>& data);
void write_filter_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const FilterRun& run,
                          const std::optional<TruthRun>& truth);
void write_toy_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const ToyResult& toy);

/// Observations from config.observation.data_file.
std::map<int, data::DataBatch> read_observations(const ExperimentConfig& config);

}  // namespace pfenkf::experiment
