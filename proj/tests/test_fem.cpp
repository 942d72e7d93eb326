#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "pfenkf/fem/fe_space.hpp"
#include "pfenkf/fem/mesh.hpp"
#include "pfenkf/fem/mesh_io.hpp"
#include "pfenkf/fem/strain_split.hpp"

using namespace pfenkf::fem;

TEST_CASE("1D meshes") {
    const auto m200 = build_mesh_1d(200);
    CHECK(m200.num_nodes() == 201);
    CHECK(m200.element_size(17) == doctest::Approx(1e-2).epsilon(1e-12));

    const auto m2 = build_mesh_1d(2);
    CHECK(m2.node(0)[0] == -1.0);
    CHECK(m2.node(1)[0] == doctest::Approx(0.0));
    CHECK(m2.node(2)[0] == 1.0);

    const auto m4 = build_mesh_1d(4);
    double total = 0.0;
    for (std::size_t e = 0; e < 4; ++e) {
        CHECK(m4.element_measure(e) == doctest::Approx(0.5));
        total += m4.element_measure(e);
    }
    CHECK(total == doctest::Approx(2.0));

    const auto off = build_mesh_1d_offset(10, 0.25);
    CHECK(off.num_nodes() == 12);  // the boundary cells are split
    CHECK(off.node(1)[0] == doctest::Approx(-1.0 + 0.2 * 0.25));
    CHECK(off.node(11)[0] == 1.0);
}

TEST_CASE("SENS mesh has a slit of duplicated nodes") {
    SensMeshSettings s;
    s.h_coarse = s.h_fine = 0.1;
    const auto m = build_mesh_sens(s);
    CHECK(m.num_elements() == 200);
    REQUIRE(m.slit().has_value());
    const auto& slit = *m.slit();
    CHECK(slit.lower.size() == slit.upper.size());
    for (std::size_t k = 0; k < slit.lower.size(); ++k) {
        CHECK(slit.lower[k] != slit.upper[k]);
        CHECK(m.node(slit.lower[k]) == m.node(slit.upper[k]));
        CHECK(m.node(slit.lower[k])[0] <= 0.5 + 1e-12);
    }
    double area = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        CHECK(m.element_measure(e) > 0.0);
        area += m.element_measure(e);
    }
    CHECK(area == doctest::Approx(1.0));

    s.flip_diagonals = true;
    CHECK_FALSE(build_mesh_sens(s) == m);
    s.h_fine = 0.2;
    CHECK_THROWS_AS(build_mesh_sens(s), MeshError);
}

TEST_CASE("desk SENS mesh size") {
    SensMeshSettings s;  // h_fine = ell
    const auto m = build_mesh_sens(s);
    CHECK(m.num_dofs() >= 4000);
    CHECK(m.num_dofs() <= 8000);
}

TEST_CASE("mesh text round trip") {
    SensMeshSettings s;
    s.h_coarse = s.h_fine = 0.125;
    const auto m = build_mesh_sens(s);
    std::stringstream ss;
    write_mesh(ss, m);
    CHECK(read_mesh(ss) == m);
}

TEST_CASE("basis evaluation") {
    const auto mesh = build_mesh_1d(4);
    const auto at_node = eval_basis(mesh, {0.0, 0.0});
    double at2 = 0.0;
    for (auto [n, v] : at_node) at2 += n == 2 ? v : 0.0;
    CHECK(at2 == doctest::Approx(1.0));

    const auto mid = eval_basis(mesh, {0.25, 0.0});
    REQUIRE(mid.size() == 2);
    CHECK(mid[0].second == doctest::Approx(0.5));
    CHECK(mid[1].second == doctest::Approx(0.5));
    CHECK_THROWS_AS(eval_basis(mesh, {1.5, 0.0}), SensorOutsideMesh);

    SensMeshSettings s;
    s.h_coarse = 0.1;
    s.h_fine = 0.05;
    const auto sens = build_mesh_sens(s);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const Point p{unit(rng), unit(rng)};
        const auto row = eval_basis(sens, p);
        double sx = 0.0, sy = 0.0, s1 = 0.0;
        for (auto [n, v] : row) {
            sx += v * sens.node(n)[0];
            sy += v * sens.node(n)[1];
            s1 += v;
        }
        CHECK(std::abs(sx - p[0]) < 1e-12);
        CHECK(std::abs(sy - p[1]) < 1e-12);
        CHECK(std::abs(s1 - 1.0) < 1e-12);
    }
}

TEST_CASE("strain energy split") {
    MaterialParams plane;
    plane.kinematics = Kinematics::PlaneStrain;
    plane.penalty = 1.0;
    const auto zero = strain_energy_split({0.0, 0.0, 0.0}, plane);
    CHECK(zero.psi_pos == 0.0);
    CHECK(zero.psi_neg == 0.0);

    // In-plane dilation: trace 2 delta, and with eps_zz = 0 a deviatoric
    // part with dev:dev = 2/3 delta^2.
    const double delta = 1e-3;
    const auto dil = strain_energy_split({delta, delta, 0.0}, plane);
    CHECK(dil.psi_neg == doctest::Approx(0.0));
    const double expected = 0.5 * plane.bulk_modulus() * 4.0 * delta * delta +
                            plane.shear_modulus() * 2.0 / 3.0 * delta * delta;
    CHECK(dil.psi_pos == doctest::Approx(expected).epsilon(1e-12));
    const auto squeeze = strain_energy_split({-delta, -delta, 0.0}, plane);
    CHECK(squeeze.psi_neg == doctest::Approx(0.5 * plane.bulk_modulus() * 4.0 * delta * delta).epsilon(1e-12));

    // Stresses are the gradients of the split energies.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-1e-3, 1e-3);
    for (int k = 0; k < 100; ++k) {
        const Voigt eps{unit(rng), unit(rng), unit(rng)};
        const auto s = strain_energy_split(eps, plane);
        CHECK(s.psi_pos + s.psi_neg == doctest::Approx(elastic_energy(eps, plane)).epsilon(1e-12));
        for (int i = 0; i < 3; ++i) {
            const double h = 1e-6 * 1e-3;
            auto ep = eps, em = eps;
            ep[i] += h;
            em[i] -= h;
            const auto sp = strain_energy_split(ep, plane), sm = strain_energy_split(em, plane);
            const double fd_pos = (sp.psi_pos - sm.psi_pos) / (2 * h);
            const double fd_neg = (sp.psi_neg - sm.psi_neg) / (2 * h);
            const double scale = std::abs(s.stress_pos[i]) + std::abs(s.stress_neg[i]) + 1e-6;
            CHECK(std::abs(fd_pos - s.stress_pos[i]) / scale < 1e-6);
            CHECK(std::abs(fd_neg - s.stress_neg[i]) / scale < 1e-6);
        }
    }

    MaterialParams rod;
    rod.penalty = 1.0;
    const auto t = strain_energy_split({2e-3, 0, 0}, rod);
    CHECK(t.psi_pos == doctest::Approx(0.5 * rod.youngs_modulus * 4e-6));
    CHECK(t.psi_neg == 0.0);
    const auto c = strain_energy_split({-2e-3, 0, 0}, rod);
    CHECK(c.psi_pos == 0.0);
    CHECK(c.stress_neg[0] == doctest::Approx(-2e-3 * rod.youngs_modulus));
}
