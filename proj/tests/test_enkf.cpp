#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "pfenkf/enkf/analysis.hpp"
#include "pfenkf/enkf/crack.hpp"
#include "pfenkf/enkf/filter.hpp"
#include "pfenkf/enkf/regularization.hpp"
#include "pfenkf/experiment/checks.hpp"

using namespace pfenkf;
using namespace pfenkf::enkf;

namespace {

fracture::FractureProblem rod(int elements) {
    auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_1d(elements));
    auto space = std::make_shared<const fem::FeSpace>(mesh);
    return {space, fem::make_material(210000.0, 0.3, 2.7, 2.5e-2, 10.0, fem::Kinematics::Uniaxial),
            fracture::tension_rod_conditions(*space)};
}

Eigen::SparseMatrix<double, Eigen::RowMajor> picker(int rows, int cols, std::vector<int> idx) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> H(rows, cols);
    for (int k = 0; k < rows; ++k) H.insert(k, idx[static_cast<std::size_t>(k)]) = 1.0;
    H.makeCompressed();
    return H;
}

fracture::FieldState cracked_rod(const fracture::FractureProblem& p, int steps) {
    const ensemble::Nucleus nucleus{{0.57, 0.0}, 0.7, 0.05};
    auto s = fracture::make_initial_state(p.fe(), ensemble::nucleus_floor(p.fe(), nucleus));
    for (int n = 1; n <= steps; ++n) fracture::advance_step(p, s, 1e-4 * n, {});
    return s;
}

}  // namespace

TEST_CASE("Kalman shift without spread is the identity") {
    Eigen::MatrixXd X(4, 3);
    for (int j = 0; j < 3; ++j) X.col(j) << 1.0, 2.0, 3.0, 4.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(2, 7.0);
    CHECK(kalman_update_matrix(X, picker(2, 4, {0, 2}), y, 1, 1.0, Eigen::MatrixXd::Identity(2, 2)) == X);
    CHECK_THROWS_AS(kalman_update_matrix(X.leftCols(1), picker(2, 4, {0, 2}), y, 1, 1.0, Eigen::MatrixXd::Identity(2, 2)),
                    std::invalid_argument);
}

TEST_CASE("repeated observations equal one observation with reduced noise") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(4, 8);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 8; ++j) X(i, j) = g(rng);
    const auto H = picker(2, 4, {1, 3});
    Eigen::MatrixXd R(2, 2);
    R << 0.2, 0.05, 0.05, 0.1;
    Eigen::VectorXd y(2);
    y << 0.4, -0.3;
    const Eigen::MatrixXd three = kalman_update_matrix(X, H, 3.0 * y, 3, 1.0, R);
    const Eigen::MatrixXd one = kalman_update_matrix(X, H, y, 1, 1.0, R / 3.0);
    CHECK((three - one).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dense gain and toy posterior oracles") {
    CHECK(experiment::check_dense_gain(3).passed);
    CHECK(experiment::check_toy_posterior(3).passed);
}

TEST_CASE("crack position") {
    auto space = std::make_shared<const fem::FeSpace>(std::make_shared<const fem::Mesh>(fem::build_mesh_1d(200)));
    Eigen::VectorXd phi(static_cast<Eigen::Index>(space->num_qp_total()));
    for (std::size_t e = 0; e < space->num_elements(); ++e)
        for (int q = 0; q < space->nqp(); ++q)
            phi[static_cast<Eigen::Index>(e * static_cast<std::size_t>(space->nqp()) + static_cast<std::size_t>(q))] =
                std::max(0.0, 1.0 - std::abs(space->qp_coord(e, q)[0] - 0.3) / 0.05);
    const auto x = crack_position_1d(*space, phi);
    REQUIRE(x);
    CHECK(std::abs(*x - 0.3) < 1e-2);
    CHECK_FALSE(crack_position_1d(*space, Eigen::VectorXd::Zero(phi.size())));

    const auto p = rod(200);
    const auto truth = cracked_rod(p, 110);
    const auto c = crack_position_1d(p.fe(), truth.phi);
    REQUIRE(c);
    CHECK(std::abs(*c - 0.57) <= 2e-2);
}

TEST_CASE("regularization of an elastic member is a fixed point") {
    const auto p = rod(100);
    auto s = fracture::make_initial_state(p.fe(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.fe().num_qp_total())));
    for (int n = 1; n <= 10; ++n) fracture::advance_step(p, s, 1e-4 * n, {});
    // Re-solve at fixed load until the lagged micromorphic field has caught up.
    for (int k = 0; k < 400; ++k) {
        fracture::reset_history(s);
        fracture::advance_step(p, s, s.load, {});
    }
    RegularizationReport rep;
    const auto r = regularize_member(p, s, {}, &rep);
    CHECK((r.u - s.u).norm() < 1e-8 * s.u.norm());
    CHECK((r.phi - s.phi).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.history == 0);
    CHECK(rep.attempts == 1);
    CHECK_THROWS_AS(regularize_member(p, s, {0.01, 1, false, {}}), std::invalid_argument);
}

TEST_CASE("regularization removes analysis artifacts") {
    const auto p = rod(200);
    const auto truth = cracked_rod(p, 110);
    const auto x0 = crack_position_1d(p.fe(), truth.phi);
    REQUIRE(x0);
    auto noisy = truth;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < p.fe().num_nodes(); ++i) {
        const double x = p.fe().mesh().node(i)[0];
        noisy.u[static_cast<Eigen::Index>(i)] += 3e-4 * std::sin(40.0 * x);
        noisy.d[static_cast<Eigen::Index>(i)] += 0.1 * g(rng) - 0.05;
    }
    p.bc.apply(noisy.u, noisy.load);
    RegularizationReport rep;
    const auto r = regularize_member(p, noisy, {}, &rep);
    CHECK(r.phi.minCoeff() >= 0.0);
    CHECK(r.phi.maxCoeff() <= 1.0);
    CHECK(rep.max_subsolve_residual <= 1e-8);
    const auto x1 = crack_position_1d(p.fe(), r.phi);
    REQUIRE(x1);
    CHECK(std::abs(*x1 - *x0) <= 2.0 * 1e-2);
    // Monotone displacement away from the crack band.
    for (std::size_t i = 1; i < p.fe().num_nodes(); ++i) {
        const double x = p.fe().mesh().node(i)[0];
        if (std::abs(x - *x0) > 0.15)
            CHECK(r.u[static_cast<Eigen::Index>(i)] >= r.u[static_cast<Eigen::Index>(i - 1)] - 1e-12);
    }
    CHECK(experiment::check_regularization(4).passed);
}

TEST_CASE("filter without analyses is a plain forecast") {
    const auto p = rod(50);
    const auto prior = ensemble::sample_prior(ensemble::PriorSpec1D{}, p.fe(), 4, 2);
    const fracture::LoadSchedule schedule({{1, 1e-4}});
    auto obs = data::make_observation_model(p.fe(), data::equispaced_sensors_1d(5), 1.0, 4e-4, {});
    FilterConfig cfg;
    cfg.final_step = 5;
    const auto res = run_filter(p, prior, schedule, obs, cfg, [](int) -> data::DataBatch { throw std::logic_error("no data"); });
    auto plain = prior;
    for (int n = 1; n <= 5; ++n) ensemble::forecast_step(p, plain, schedule.load_at(n), {});
    for (std::size_t i = 0; i < 4; ++i) CHECK(res.final_state.members[i] == plain.members[i]);
    CHECK(res.forces.size() == 6);
    CHECK(res.analyses.empty());
}

TEST_CASE("one analysis on a small rod") {
    const auto p = rod(100);
    auto truth_state = cracked_rod(p, 20);
    const auto prior = ensemble::sample_prior(ensemble::PriorSpec1D{}, p.fe(), 8, 5);
    const fracture::LoadSchedule schedule({{1, 1e-4}});
    const auto sensors = data::equispaced_sensors_1d(10);
    auto obs = data::make_observation_model(p.fe(), sensors, 1.0, 4e-4, {});
    const auto batch = data::generate_data(p.fe(), truth_state, sensors, 1.0, 4e-4, 20, 1, 20);
    FilterConfig cfg;
    cfg.final_step = 22;
    cfg.analysis_steps = {20};
    cfg.inflation = 1.05;
    cfg.l_loc = 0.2;
    const auto res = run_filter(p, prior, schedule, obs, cfg, [&](int) { return batch; });
    REQUIRE(res.analyses.size() == 1);
    const auto& a = res.analyses[0];
    CHECK(a.step == 20);
    CHECK(a.stats.misfit_after < a.stats.misfit_before);
    for (const auto& m : res.final_state.members) {
        CHECK(m.phi.minCoeff() >= 0.0);
        CHECK(m.phi.maxCoeff() <= 1.0);
    }
}

TEST_CASE("statistics over present values") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto [m, s] = mean_and_std({1.0, nan, 3.0});
    CHECK(m == 2.0);
    CHECK(s == doctest::Approx(std::sqrt(2.0)));
    FilterConfig cfg;
    cfg.final_step = 10;
    cfg.analysis_steps = {12};
    CHECK_THROWS(cfg.validate(2.5e-2));
}
