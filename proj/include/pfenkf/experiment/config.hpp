#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfenkf/data/observation.hpp"
#include "pfenkf/enkf/filter.hpp"
#include "pfenkf/ensemble/prior.hpp"
#include "pfenkf/fem/mesh.hpp"
#include "pfenkf/fracture/stepping.hpp"

namespace pfenkf::experiment {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Rod1D, Sens2D, LinearToy };

struct RodMesh {
    int elements = 200;
    double x_min = -1.0;
    double x_max = 1.0;
    /// Interior nodes shifted by this fraction of a cell (0 keeps a uniform mesh).
    double offset = 0.0;
};

struct ObservationSettings {
    int sensors = 25;
    fem::Region region{-1.0, 1.0, 0.0, 0.0};  // sensor box; y ignored in 1D
    std::filesystem::path sensor_file;       // overrides the generated layout
    double rho = 1.0;
    double sigma_e = 4e-4;
    int n_obs = 20;
    data::MaternParams kernel;
    std::filesystem::path data_file;  // read instead of generating from the truth
};

/// Linear-Gaussian check problem: state on equispaced points of [0, 1] with a
/// squared-exponential prior, a few observed entries.
struct ToySettings {
    int state_size = 6;
    std::vector<int> observed{1, 4};
    int members = 10000;
    double prior_sigma = 1.0;
    double prior_length = 0.3;
    double sigma_e = 0.1;
    int n_obs = 1;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Rod1D;
    std::string id;
    std::string preset;
    std::uint64_t seed = 1;

    fem::MaterialParams material;
    double penalty_factor = 100.0;  // beta in alpha = beta G_c / ell

    RodMesh rod_mesh;
    RodMesh rod_truth_mesh;
    fem::SensMeshSettings sens_mesh;
    fem::SensMeshSettings sens_truth_mesh;

    std::vector<fracture::LoadSegment> load;
    int final_step = 0;
    fracture::NewtonSettings newton;

    ensemble::PriorSpec1D prior_1d;
    ensemble::PriorSpec2D prior_2d;
    ensemble::Nucleus truth_nucleus;

    ObservationSettings observation;

    int members = 50;
    enkf::FilterConfig filter;
    bool compare_no_analysis = false;
    int extrapolation_offset = 30;  // steps after the last analysis
    bool checkpoints = true;

    ToySettings toy;

    std::filesystem::path out_dir = "out";
    std::string hash;  // FNV-1a over every effective setting except output paths

    [[nodiscard]] int dim() const { return kind == ExperimentKind::Sens2D ? 2 : 1; }
    [[nodiscard]] fracture::LoadSchedule schedule() const { return fracture::LoadSchedule(load); }
    /// Step at which the extrapolated forces are compared.
    [[nodiscard]] int extrapolation_step() const;
};

/// Reads an INI file. Sections named "<preset>:<section>" override keys of
/// <section> when that preset is selected; the other preset sections are
/// ignored. Unknown sections or keys are errors. Relative file paths are
/// taken relative to the config file.
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& preset,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Same, from text; `base_dir` resolves relative paths.
ExperimentConfig parse_config(const std::string& text, const std::string& preset,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              const std::filesystem::path& base_dir = ".");

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace pfenkf::experiment
