#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "pfenkf/ensemble/prior.hpp"
#include "pfenkf/fracture/assembly.hpp"
#include "pfenkf/fracture/at2.hpp"
#include "pfenkf/fracture/newton.hpp"
#include "pfenkf/fracture/stepping.hpp"

using namespace pfenkf;
using namespace pfenkf::fracture;

namespace {

FractureProblem rod(int elements, double beta = 10.0, double gc = 2.7) {
    auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_1d(elements));
    auto space = std::make_shared<const fem::FeSpace>(mesh);
    return {space, fem::make_material(210000.0, 0.3, gc, 2.5e-2, beta, fem::Kinematics::Uniaxial),
            tension_rod_conditions(*space)};
}

Eigen::VectorXd zero_floor(const fem::FeSpace& s) { return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.num_qp_total())); }

// Bar as springs in series: element stiffness E sum_q w_q g(phi_q) / h^2.
double series_force(const FractureProblem& p, const Eigen::VectorXd& phi, double load) {
    const auto& s = p.fe();
    double compliance = 0.0;
    for (std::size_t e = 0; e < s.num_elements(); ++e) {
        double k = 0.0;
        for (int q = 0; q < s.nqp(); ++q) {
            const double g = at2_functions(phi[static_cast<Eigen::Index>(e * s.nqp() + q)]).g;
            k += s.weight(e, q) * g;
        }
        const double h = s.mesh().element_measure(e);
        compliance += h * h / (p.params.youngs_modulus * k);
    }
    return load / compliance;
}

}  // namespace

TEST_CASE("AT2 functions") {
    auto a = at2_functions(0.0);
    CHECK(a.g == 1.0);
    CHECK(a.w == 0.0);
    a = at2_functions(1.0);
    CHECK(a.g == 0.0);
    CHECK(a.w == 1.0);
    a = at2_functions(0.5);
    CHECK(a.g == 0.25);
    CHECK(a.dg == -1.0);
    CHECK(a.w == 0.25);
    CHECK(a.dw == 1.0);
    CHECK(a.cw == 2.0);
}

TEST_CASE("local phase update") {
    const double alpha = 1e4, gc = 2.7, ell = 0.025;
    CHECK(local_phase_update(0.0, 0.0, 0.0, alpha, gc, ell).phi == 0.0);
    CHECK(local_phase_update(0.0, 0.0, 0.7, alpha, gc, ell).phi == 0.7);
    CHECK(std::abs(local_phase_update(1e12, 0.5, 0.0, alpha, gc, ell).phi - 1.0) < 1e-6);
    const auto clamped = local_phase_update(0.0, 0.1, 0.5, alpha, gc, ell);
    CHECK(clamped.phi == 0.5);
    CHECK(clamped.dphi_dd == 0.0);
}

TEST_CASE("micromorphic extrapolation") {
    Eigen::VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    CHECK(extrapolate_micromorphic(v, v, 1e-4, 1e-4) == v);
    CHECK(extrapolate_micromorphic(3.0 * v, 2.0 * v, 1e-4, 1e-4).isApprox(4.0 * v));
    CHECK(extrapolate_micromorphic(3.0 * v, 2.0 * v, 0.0, 1e-4) == 3.0 * v);
    CHECK(extrapolate_micromorphic(3.0 * v, 2.0 * v, 1e-5, 1e-4).isApprox(3.1 * v));
    CHECK_THROWS(extrapolate_micromorphic(v, v, 1e-4, 0.0));
}

TEST_CASE("residual of simple states") {
    const auto p = rod(3);
    const auto& s = p.fe();
    const Eigen::VectorXd floor = zero_floor(s);
    const PhaseContext ctx{&floor, p.params.length_scale, nullptr};
    Eigen::VectorXd u = Eigen::VectorXd::Zero(4), d = Eigen::VectorXd::Zero(4);
    CHECK(assemble_residual(s, p.params, u, d, ctx).norm() == 0.0);

    // Uniform bar with phi = 0: constant stress, interior equilibrium.
    for (int i = 0; i < 4; ++i) u[i] = 1e-4 * (s.mesh().node(static_cast<std::size_t>(i))[0] + 1.0);
    const Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.num_qp_total()));
    const Eigen::VectorXd Ru = displacement_residual(s, p.params, u, phi);
    CHECK(std::abs(Ru[1]) < 1e-12 * std::abs(Ru[0]));
    CHECK(std::abs(Ru[2]) < 1e-12 * std::abs(Ru[0]));
    CHECK(Ru[0] == doctest::Approx(-Ru[3]));

    Eigen::VectorXd bad = u;
    bad[1] = std::nan("");
    CHECK_THROWS_AS(assemble_residual(s, p.params, bad, d, ctx), AssemblyError);
}

TEST_CASE("undamaged tangent is the bar stiffness") {
    const auto p = rod(3, 10.0, 2.7e6);
    const auto& s = p.fe();
    const Eigen::VectorXd floor = zero_floor(s);
    const PhaseContext ctx{&floor, p.params.length_scale, nullptr};
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(4), d = Eigen::VectorXd::Zero(4);
    const Eigen::MatrixXd K(assemble_tangent(s, p.params, u, d, ctx));
    const double k = 210000.0 / (2.0 / 3.0);
    Eigen::MatrixXd expected(4, 4);
    expected << k, -k, 0, 0, -k, 2 * k, -k, 0, 0, -k, 2 * k, -k, 0, 0, -k, k;
    CHECK((K.topLeftCorner(4, 4) - expected).norm() < 1e-9 * k);
}

TEST_CASE("elastic Newton solve and reaction force") {
    const auto p = rod(20, 10.0, 2.7e6);  // G_c large: elastic limit
    auto state = make_initial_state(p.fe(), zero_floor(p.fe()));
    CHECK(reaction_force(p, state) == 0.0);
    advance_step(p, state, 1e-4, {});
    for (std::size_t i = 0; i < p.fe().num_nodes(); ++i)
        CHECK(state.u[static_cast<Eigen::Index>(i)] ==
              doctest::Approx(5e-5 * (p.fe().mesh().node(i)[0] + 1.0)).epsilon(1e-9));
    CHECK(state.phi.maxCoeff() <= 1e-6);
    CHECK(reaction_force(p, state) == doctest::Approx(210000.0 * 1e-4 / 2.0).epsilon(1e-8));

    // A converged state is a fixed point of the same system.
    const Eigen::VectorXd floor = zero_floor(p.fe());
    const Eigen::VectorXd d0 = Eigen::VectorXd::Zero(state.d.size());
    Eigen::VectorXd u = state.u, d = state.d;
    const PhaseContext ctx{&floor, p.params.length_scale, &d0};
    const auto rep = newton_solve(p, u, d, state.load, ctx, Unknowns::Coupled, {});
    CHECK(rep.iterations == 0);
}

TEST_CASE("tension rod cracks abruptly") {
    const auto p = rod(200);
    const ensemble::Nucleus nucleus{{0.57, 0.0}, 0.7, 0.05};
    auto state = make_initial_state(p.fe(), ensemble::nucleus_floor(p.fe(), nucleus));
    std::vector<double> f{0.0};
    Eigen::VectorXd prev_phi = state.phi;
    for (int n = 1; n <= 130; ++n) {
        advance_step(p, state, 1e-4 * n, {});
        f.push_back(reaction_force(p, state));
        CHECK((state.phi.array() >= prev_phi.array() - 1e-14).all());  // irreversibility
        prev_phi = state.phi;
    }
    // Linear rise with the stiffness of the pre-damaged bar.
    const auto floor = ensemble::nucleus_floor(p.fe(), nucleus);
    CHECK(f[1] == doctest::Approx(series_force(p, floor, 1e-4)).epsilon(1e-5));
    // The nucleus starts to grow with the second step.
    CHECK(f[2] - f[1] == doctest::Approx(series_force(p, floor, 1e-4)).epsilon(1e-3));
    const auto peak = std::max_element(f.begin(), f.end()) - f.begin();
    CHECK(peak > 50);
    CHECK(peak < 130);
    CHECK(f.back() < 1e-3 * 210000.0 * 130e-4 / 2.0);
    // The drop happens within a step or two.
    int drop = 0;
    for (std::size_t n = 1; n < f.size(); ++n)
        if (f[n] < 0.2 * f[n - 1]) ++drop;
    CHECK(drop >= 1);
    CHECK(state.phi.maxCoeff() <= 1.0);
}

TEST_CASE("load schedule") {
    const LoadSchedule s({{1, 1e-4}, {71, 1e-5}});
    CHECK(s.increment(1) == 1e-4);
    CHECK(s.increment(71) == 1e-5);
    CHECK(s.load_at(70) == doctest::Approx(70e-4));
    CHECK(s.load_at(80) == doctest::Approx(70e-4 + 10e-5));
}

TEST_CASE("field dump round trip") {
    const auto p = rod(10);
    auto state = make_initial_state(p.fe(), zero_floor(p.fe()));
    advance_step(p, state, 1e-4, {});
    advance_step(p, state, 2e-4, {});
    std::stringstream ss;
    write_field_dump(ss, p.fe(), state, true);
    CHECK(read_field_dump(ss, p.fe()) == state);
}
