#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>

#include <Eigen/SVD>

#include "pfenkf/ensemble/ensemble.hpp"

using namespace pfenkf;
using namespace pfenkf::ensemble;

namespace {

std::shared_ptr<const fem::FeSpace> rod_space(int n) {
    return std::make_shared<const fem::FeSpace>(std::make_shared<const fem::Mesh>(fem::build_mesh_1d(n)));
}

EnsembleState from_columns(const fem::FeSpace& space, const Eigen::MatrixXd& X) {
    EnsembleState ens;
    const Eigen::VectorXd floor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_qp_total()));
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        auto m = fracture::make_initial_state(space, floor);
        m.set_stacked(X.col(i));
        ens.members.push_back(m);
        ens.seeds.push_back(static_cast<std::uint64_t>(i));
        ens.nuclei.emplace_back();
        ens.failed.push_back(0);
    }
    return ens;
}

Eigen::MatrixXd random_columns(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = g(rng);
    return X;
}

}  // namespace

TEST_CASE("1D prior sampling") {
    const auto space = rod_space(50);
    const PriorSpec1D spec;
    const auto a = sample_prior(spec, *space, 1000, 5);
    CHECK(a == sample_prior(spec, *space, 1000, 5));
    double sum = 0.0, sq = 0.0;
    for (const auto& n : a.nuclei) {
        sum += n.center[0];
        sq += n.center[0] * n.center[0];
        CHECK(n.magnitude >= spec.magnitude_min);
        CHECK(n.magnitude <= spec.magnitude_max);
    }
    const double mean = sum / 1000.0, sd = std::sqrt((sq - 1000.0 * mean * mean) / 999.0);
    CHECK(std::abs(mean + 0.25) < 0.012);
    CHECK(std::abs(sd - 0.12) < 0.01);
    // The floor carries the nucleus magnitude at its center.
    CHECK(a.members[0].phi.maxCoeff() <= a.nuclei[0].magnitude + 1e-12);
    CHECK(a.members[0].phi.maxCoeff() > 0.5 * a.nuclei[0].magnitude);
}

TEST_CASE("2D prior sampling") {
    fem::SensMeshSettings s;
    s.h_coarse = s.h_fine = 0.1;
    const auto space = std::make_shared<const fem::FeSpace>(std::make_shared<const fem::Mesh>(fem::build_mesh_sens(s)));
    const auto a = sample_prior(PriorSpec2D{}, *space, 1000, 9);
    double sum = 0.0;
    for (const auto& n : a.nuclei) sum += n.center[0];
    CHECK(std::abs(sum / 1000.0 - 0.565) < 0.003);
}

TEST_CASE("member seeds are distinct") {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 0; i < 1000; ++i) s.push_back(member_seed(1, i));
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
}

TEST_CASE("ensemble mean and anomalies") {
    const auto space = rod_space(3);  // 8 stacked entries
    const Eigen::Index M = 8;
    Eigen::MatrixXd same(M, 4);
    for (int j = 0; j < 4; ++j) same.col(j) = Eigen::VectorXd::LinSpaced(M, 0.0, 1.0);
    auto e = from_columns(*space, same);
    CHECK(ensemble_mean(e) == same.col(0));
    CHECK(ensemble_anomalies(e).norm() == 0.0);

    Eigen::MatrixXd pm(M, 2);
    pm.col(0) = Eigen::VectorXd::LinSpaced(M, 1.0, 2.0);
    pm.col(1) = -pm.col(0);
    e = from_columns(*space, pm);
    CHECK(ensemble_mean(e).norm() == 0.0);

    const Eigen::MatrixXd X = random_columns(M, 5, 1);
    e = from_columns(*space, X);
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(M);
    for (int j = 0; j < 5; ++j) direct += X.col(j);
    direct /= 5.0;
    CHECK((ensemble_mean(e) - direct).cwiseAbs().maxCoeff() < 1e-14);

    const Eigen::MatrixXd X3 = random_columns(M, 3, 2);
    e = from_columns(*space, X3);
    const Eigen::MatrixXd A = ensemble_anomalies(e);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(M, M);
    const Eigen::VectorXd m3 = X3.rowwise().mean();
    for (int j = 0; j < 3; ++j) C += (X3.col(j) - m3) * (X3.col(j) - m3).transpose() / 2.0;
    CHECK((A * A.transpose() - C).cwiseAbs().maxCoeff() < 1e-14);

    e = from_columns(*space, random_columns(M, 2, 3));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ensemble_anomalies(e));
    CHECK(svd.singularValues()[1] < 1e-14);
}

TEST_CASE("inflation") {
    const auto space = rod_space(3);
    const Eigen::MatrixXd X = random_columns(8, 6, 4);
    auto e = from_columns(*space, X);
    inflate(e, 1.0);
    for (int j = 0; j < 6; ++j) CHECK(e.members[static_cast<std::size_t>(j)].stacked() == X.col(j));

    const Eigen::MatrixXd A0 = ensemble_anomalies(e);
    const Eigen::VectorXd m0 = ensemble_mean(e);
    inflate(e, 1.05);
    CHECK((ensemble_anomalies(e) - 1.05 * A0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((ensemble_mean(e) - m0).cwiseAbs().maxCoeff() < 1e-14);

    auto two = from_columns(*space, random_columns(8, 2, 5));
    const double before = (two.members[0].stacked() - two.members[1].stacked()).norm();
    inflate(two, 2.0);
    CHECK((two.members[0].stacked() - two.members[1].stacked()).norm() == doctest::Approx(2.0 * before));
}

TEST_CASE("localization taper") {
    const std::vector<fem::Point> a{{0.0, 0.0}, {0.3, 0.4}}, b{{0.0, 0.0}, {100.0, 0.0}};
    const auto T = localization_taper(a, b, 0.45);
    CHECK(T(0, 0) == 1.0);
    CHECK(T(0, 1) == 0.0);
    CHECK(T(1, 0) == doctest::Approx(std::exp(-0.25 / (2 * 0.45 * 0.45))));
}

TEST_CASE("forecast in the elastic regime") {
    auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_1d(100));
    auto space = std::make_shared<const fem::FeSpace>(mesh);
    const fracture::FractureProblem p{space, fem::make_material(210000.0, 0.3, 2.7, 2.5e-2, 10.0, fem::Kinematics::Uniaxial),
                                      fracture::tension_rod_conditions(*space)};
    auto ens = sample_prior(PriorSpec1D{}, *space, 6, 3);
    ForecastSettings fs;
    for (int n = 1; n <= 3; ++n) forecast_step(p, ens, 1e-4 * n, fs);
    // Damage hardly grows yet: every member stays close to its floor.
    for (std::size_t i = 0; i < 6; ++i) {
        const auto floor = nucleus_floor(*space, ens.nuclei[i]);
        CHECK((ens.members[i].phi - floor).cwiseAbs().maxCoeff() < 1e-2);
    }

    // Member results do not depend on the order or the thread count.
    auto swapped = sample_prior(PriorSpec1D{}, *space, 6, 3);
    std::reverse(swapped.members.begin(), swapped.members.end());
    fs.threads = 3;
    for (int n = 1; n <= 3; ++n) forecast_step(p, swapped, 1e-4 * n, fs);
    for (std::size_t i = 0; i < 6; ++i) CHECK(swapped.members[5 - i] == ens.members[i]);
}

TEST_CASE("checkpoint round trip") {
    const auto space = rod_space(20);
    auto ens = sample_prior(PriorSpec1D{}, *space, 4, 8);
    ens.failed[2] = 1;
    ens.step = 17;
    const auto dir = std::filesystem::temp_directory_path() / "pfenkf_checkpoint_test";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, *space, ens, "abc123");
    std::string hash;
    CHECK(load_checkpoint(dir, *space, &hash) == ens);
    CHECK(hash == "abc123");
    std::filesystem::remove_all(dir);
}
