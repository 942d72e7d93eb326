#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfenkf/ensemble/prior.hpp"
#include "pfenkf/fracture/stepping.hpp"

namespace pfenkf::ensemble {

class EnsembleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnsembleState {
    std::vector<fracture::FieldState> members;
    std::vector<std::uint64_t> seeds;
    std::vector<Nucleus> nuclei;
    std::vector<char> failed;  // flagged members are frozen and excluded from statistics
    int step = 0;

    [[nodiscard]] std::size_t size() const { return members.size(); }
    [[nodiscard]] std::vector<std::size_t> active() const;
    [[nodiscard]] std::size_t num_failed() const;

    friend bool operator==(const EnsembleState&, const EnsembleState&) = default;
};

EnsembleState sample_prior(const PriorSpec1D& spec, const fem::FeSpace& space, std::size_t n_ens, std::uint64_t seed);
EnsembleState sample_prior(const PriorSpec2D& spec, const fem::FeSpace& space, std::size_t n_ens, std::uint64_t seed);

struct ForecastSettings {
    fracture::NewtonSettings newton;
    int threads = 1;
    double max_failed_fraction = 0.1;
};

struct ForecastReport {
    std::vector<int> iterations;  // Newton iterations per member
    std::vector<std::size_t> newly_failed;
    std::vector<std::string> failure_messages;  // parallel to newly_failed
};

/// Advance every active member to `load`. Failed members are flagged; throws
/// EnsembleFailure when the failed fraction exceeds the limit.
ForecastReport forecast_step(const fracture::FractureProblem& problem, EnsembleState& ens, double load,
                             const ForecastSettings& settings);

/// Mean of the stacked (a_u, a_d) vectors over active members.
Eigen::VectorXd ensemble_mean(const EnsembleState& ens);

/// Columns (a_i - mean) / sqrt(n - 1) over active members.
Eigen::MatrixXd ensemble_anomalies(const EnsembleState& ens);

/// a_i <- r (a_i - mean) + mean on the stacked vectors; phi is left alone.
void inflate(EnsembleState& ens, double r);

/// exp(-|x_i - y_j|^2 / (2 l^2)).
Eigen::MatrixXd localization_taper(const std::vector<fem::Point>& a, const std::vector<fem::Point>& b, double l_loc);

/// Per-member field dumps with history plus a manifest holding the step,
/// member seeds, nuclei, failure flags and the given config hash.
void save_checkpoint(const std::filesystem::path& dir, const fem::FeSpace& space, const EnsembleState& ens,
                     const std::string& config_hash);
EnsembleState load_checkpoint(const std::filesystem::path& dir, const fem::FeSpace& space,
                              std::string* config_hash = nullptr);

}  // namespace pfenkf::ensemble
