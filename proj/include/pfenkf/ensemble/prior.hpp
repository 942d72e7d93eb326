#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "pfenkf/fem/fe_space.hpp"

namespace pfenkf::ensemble {

/// Gaussian damage nucleus imposed as the phase-field floor.
struct Nucleus {
    fem::Point center{0.0, 0.0};
    double magnitude = 0.0;
    double width = 0.05;  // standard deviation of the bump, mm

    friend bool operator==(const Nucleus&, const Nucleus&) = default;
};

struct PriorSpec1D {
    double position_mean = -0.25;
    double position_std = 0.12;
    double magnitude_min = 0.73;
    double magnitude_max = 0.76;
    double width = 0.05;

    void validate() const;
};

/// Pore center X0 = x_offset + x_scale * Beta(a, b), Y0 = y_offset +
/// y_scale * Beta(a, b) + y_origin. The slit runs along y = y_origin in mesh
/// coordinates, so y_origin = 0.5 maps slit-centered offsets onto the mesh.
struct PriorSpec2D {
    double x_offset = 0.51;
    double x_scale = 0.11;
    double y_offset = -0.11;
    double y_scale = 0.13;
    double y_origin = 0.5;
    double beta_a = 8.0;
    double beta_b = 8.0;
    double width = 0.03;
    double magnitude = 0.75;

    void validate() const;
};

/// Seed of member `index` derived from the master seed, independent of the
/// order in which members are processed.
std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t index);

/// Draw from Beta(a, b) as a ratio of gamma variates.
double sample_beta(std::mt19937_64& rng, double a, double b);

/// Resamples until the center lies in the open domain; throws after 100 tries.
Nucleus sample_nucleus(const PriorSpec1D& spec, std::mt19937_64& rng);
Nucleus sample_nucleus(const PriorSpec2D& spec, std::mt19937_64& rng);

/// Phase floor per quadrature point: magnitude * exp(-r^2 / (2 width^2)).
Eigen::VectorXd nucleus_floor(const fem::FeSpace& space, const Nucleus& nucleus);

}  // namespace pfenkf::ensemble
