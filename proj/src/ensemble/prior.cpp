#include "pfenkf/ensemble/prior.hpp"

#include <cmath>
#include <stdexcept>

namespace pfenkf::ensemble {

namespace {

constexpr int kMaxTries = 100;

}  // namespace

void PriorSpec1D::validate() const {
    if (!(position_std > 0.0)) throw std::invalid_argument("prior position std must be positive");
    if (!(magnitude_min > 0.0 && magnitude_max < 1.0 && magnitude_min <= magnitude_max))
        throw std::invalid_argument("prior magnitude range must lie in (0, 1)");
    if (!(width > 0.0)) throw std::invalid_argument("nucleus width must be positive");
}

void PriorSpec2D::validate() const {
    if (!(beta_a > 0.0 && beta_b > 0.0)) throw std::invalid_argument("Beta parameters must be positive");
    if (!(x_scale > 0.0 && y_scale > 0.0)) throw std::invalid_argument("pore position scales must be positive");
    if (!(magnitude > 0.0 && magnitude < 1.0)) throw std::invalid_argument("pore magnitude must lie in (0, 1)");
    if (!(width > 0.0)) throw std::invalid_argument("pore width must be positive");
}

std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t index) {
    // SplitMix64 finalizer over a combination of seed and index.
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double sample_beta(std::mt19937_64& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

Nucleus sample_nucleus(const PriorSpec1D& spec, std::mt19937_64& rng) {
    spec.validate();
    std::normal_distribution<double> pos(spec.position_mean, spec.position_std);
    std::uniform_real_distribution<double> mag(spec.magnitude_min, spec.magnitude_max);
    for (int t = 0; t < kMaxTries; ++t) {
        const double x = pos(rng);
        const double m = mag(rng);
        if (x > -1.0 && x < 1.0) return {{x, 0.0}, m, spec.width};
    }
    throw std::runtime_error("could not sample a nucleus inside the domain");
}

Nucleus sample_nucleus(const PriorSpec2D& spec, std::mt19937_64& rng) {
    spec.validate();
    for (int t = 0; t < kMaxTries; ++t) {
        const double x = spec.x_offset + spec.x_scale * sample_beta(rng, spec.beta_a, spec.beta_b);
        const double y = spec.y_origin + spec.y_offset + spec.y_scale * sample_beta(rng, spec.beta_a, spec.beta_b);
        if (x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) return {{x, y}, spec.magnitude, spec.width};
    }
    throw std::runtime_error("could not sample a pore inside the domain");
}

Eigen::VectorXd nucleus_floor(const fem::FeSpace& space, const Nucleus& n) {
    Eigen::VectorXd floor(static_cast<Eigen::Index>(space.num_qp_total()));
    for (std::size_t e = 0; e < space.num_elements(); ++e)
        for (int q = 0; q < space.nqp(); ++q) {
            const auto p = space.qp_coord(e, q);
            const double dx = p[0] - n.center[0];
            const double dy = space.dim() == 2 ? p[1] - n.center[1] : 0.0;
            floor[static_cast<Eigen::Index>(e * space.nqp() + q)] =
                n.magnitude * std::exp(-(dx * dx + dy * dy) / (2.0 * n.width * n.width));
        }
    return floor;
}

}  // namespace pfenkf::ensemble
