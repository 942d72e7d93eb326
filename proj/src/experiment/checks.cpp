#include "pfenkf/experiment/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "pfenkf/data/gp.hpp"
#include "pfenkf/enkf/analysis.hpp"
#include "pfenkf/enkf/crack.hpp"
#include "pfenkf/enkf/regularization.hpp"
#include "pfenkf/ensemble/ensemble.hpp"
#include "pfenkf/experiment/config.hpp"
#include "pfenkf/experiment/experiment.hpp"
#include "pfenkf/fracture/at2.hpp"

namespace pfenkf::experiment {

namespace {

std::string format(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

CheckResult at_most(std::string name, double value, double limit, std::string detail = {}) {
    return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

struct DerivativeFixture {
    std::shared_ptr<const fem::FeSpace> space;
    fem::MaterialParams params;
    double h = 0.0;
};

DerivativeFixture derivative_fixture(int dim) {
    if (dim == 1) {
        auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_1d(50));
        return {std::make_shared<const fem::FeSpace>(mesh),
                fem::make_material(210000.0, 0.3, 2.7, 2.5e-2, 100.0, fem::Kinematics::Uniaxial), 2.0 / 50};
    }
    fem::SensMeshSettings s;
    s.h_coarse = s.h_fine = 0.1;  // 10 x 10 cells, 200 triangles
    auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_sens(s));
    return {std::make_shared<const fem::FeSpace>(mesh),
            fem::make_material(210000.0, 0.3, 2.7, 1.5e-2, 100.0, fem::Kinematics::PlaneStrain), 0.1};
}

double relative(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact, double floor) {
    return (approx - exact).norm() / std::max(exact.norm(), floor);
}

}  // namespace

DerivativeErrors derivative_errors(int dim, int n_states, std::uint64_t seed, const fracture::TangentOptions& tangent) {
    const auto fx = derivative_fixture(dim);
    const auto& space = *fx.space;
    const auto nu = static_cast<Eigen::Index>(space.num_u_dofs());
    const auto nd = static_cast<Eigen::Index>(space.num_nodes());
    const Eigen::Index n = nu + nd;
    DerivativeErrors worst;

    for (int s = 0; s < n_states; ++s) {
        std::mt19937_64 rng(ensemble::member_seed(seed, static_cast<std::uint64_t>(s)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double amp = 4e-3 * fx.h;  // strains up to a few 1e-3
        Eigen::VectorXd u(nu), d(nd), d_frozen(nd), floor(static_cast<Eigen::Index>(space.num_qp_total()));
        for (Eigen::Index i = 0; i < nu; ++i) u[i] = amp * (2.0 * unit(rng) - 1.0);
        for (Eigen::Index i = 0; i < nd; ++i) d[i] = unit(rng);
        for (Eigen::Index i = 0; i < nd; ++i) d_frozen[i] = unit(rng);
        for (Eigen::Index i = 0; i < floor.size(); ++i) floor[i] = 0.4 * unit(rng);

        for (bool frozen : {false, true}) {
            const fracture::PhaseContext ctx{&floor, fx.params.length_scale, frozen ? &d_frozen : nullptr};
            const Eigen::VectorXd R = fracture::assemble_residual(space, fx.params, u, d, ctx);
            const Eigen::MatrixXd K =
                Eigen::MatrixXd(fracture::assemble_tangent(space, fx.params, u, d, ctx, tangent));

            Eigen::VectorXd g_fd(n);
            Eigen::MatrixXd K_fd(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const bool is_u = j < nu;
                const double step = is_u ? 1e-6 * amp : 1e-6;
                Eigen::VectorXd up = u, um = u, dp = d, dm = d;
                if (is_u) {
                    up[j] += step;
                    um[j] -= step;
                } else {
                    dp[j - nu] += step;
                    dm[j - nu] -= step;
                }
                g_fd[j] = (fracture::discrete_energy(space, fx.params, up, dp, ctx) -
                           fracture::discrete_energy(space, fx.params, um, dm, ctx)) /
                          (2.0 * step);
                K_fd.col(j) = (fracture::assemble_residual(space, fx.params, up, dp, ctx) -
                               fracture::assemble_residual(space, fx.params, um, dm, ctx)) /
                              (2.0 * step);
            }
            // The energy gradient is R_u in both contexts and R_d only for a live d.
            worst.gradient = std::max(worst.gradient, relative(g_fd.head(nu), R.head(nu), 1e-300));
            if (!frozen) worst.gradient = std::max(worst.gradient, relative(g_fd.tail(nd), R.tail(nd), 1e-300));
            // Blockwise, so the stiff displacement block does not hide the others.
            const double tiny = 1e-10 * K.norm();
            worst.tangent = std::max({worst.tangent, relative(K_fd.topLeftCorner(nu, nu), K.topLeftCorner(nu, nu), tiny),
                                      relative(K_fd.topRightCorner(nu, nd), K.topRightCorner(nu, nd), tiny),
                                      relative(K_fd.bottomLeftCorner(nd, nu), K.bottomLeftCorner(nd, nu), tiny),
                                      relative(K_fd.bottomRightCorner(nd, nd), K.bottomRightCorner(nd, nd), tiny)});
        }
    }
    return worst;
}

CheckResult check_derivatives(int dim, int n_states, std::uint64_t seed, const fracture::TangentOptions& tangent) {
    const auto e = derivative_errors(dim, n_states, seed, tangent);
    const double value = std::max(e.gradient, e.tangent);
    return at_most(std::string("fd_derivatives_") + (dim == 1 ? "1d" : "2d"), value, 1e-5,
                   format("gradient %.2e, tangent %.2e", e.gradient, e.tangent));
}

CheckResult check_local_update(std::size_t n_inputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) { return std::pow(10.0, lo + (hi - lo) * unit(rng)); };
    std::size_t violations = 0;
    double worst_derivative = 0.0;
    for (std::size_t k = 0; k < n_inputs; ++k) {
        const double psi = unit(rng) < 0.05 ? 0.0 : log_uniform(-6.0, 3.0);
        const double d = -0.2 + 1.4 * unit(rng);
        const double floor = unit(rng) < 0.3 ? 0.0 : unit(rng);
        const double alpha = log_uniform(0.0, 5.0);
        const double gc = log_uniform(-1.0, 1.0);
        const double lambda = log_uniform(-3.0, -1.0);
        const auto p = fracture::local_phase_update(psi, d, floor, alpha, gc, lambda);

        const double raw = (2.0 * psi + alpha * d) / (2.0 * psi + alpha + gc / lambda);
        const double expected = std::min(std::max(raw, floor), 1.0);
        bool ok = p.phi >= floor && p.phi <= 1.0 && std::abs(p.phi - expected) <= 1e-15;
        // Monotone in psi and in d.
        ok = ok && fracture::local_phase_update(psi * 1.1 + 1e-9, d, floor, alpha, gc, lambda).phi >= p.phi - 1e-15;
        ok = ok && fracture::local_phase_update(psi, d + 0.01, floor, alpha, gc, lambda).phi >= p.phi - 1e-15;
        // Feeding phi back as the floor never lowers it.
        ok = ok && fracture::local_phase_update(psi, d, p.phi, alpha, gc, lambda).phi >= p.phi;
        if (!ok) ++violations;

        // Derivatives away from the clamps.
        if (raw > floor + 1e-4 && raw < 1.0 - 1e-4) {
            const double hp = 1e-6 * (2.0 * psi + alpha + gc / lambda), hd = 1e-7;
            const double fd_psi = (fracture::local_phase_update(psi + hp, d, floor, alpha, gc, lambda).phi -
                                   fracture::local_phase_update(std::max(psi - hp, 0.0), d, floor, alpha, gc, lambda).phi) /
                                  (psi + hp - std::max(psi - hp, 0.0));
            const double fd_d = (fracture::local_phase_update(psi, d + hd, floor, alpha, gc, lambda).phi -
                                 fracture::local_phase_update(psi, d - hd, floor, alpha, gc, lambda).phi) /
                                (2.0 * hd);
            const double e1 = std::abs(fd_psi - p.dphi_dpsi) / std::max(std::abs(p.dphi_dpsi), 1e-12);
            const double e2 = std::abs(fd_d - p.dphi_dd) / std::max(std::abs(p.dphi_dd), 1e-12);
            worst_derivative = std::max({worst_derivative, e1, e2});
        } else if (raw >= 1.0 || raw <= floor) {
            if (p.dphi_dpsi != 0.0 || p.dphi_dd != 0.0) ++violations;
        }
    }
    CheckResult r{"local_phase_update", violations == 0 && worst_derivative <= 1e-5, static_cast<double>(violations),
                  0.0, ""};
    r.detail = std::to_string(n_inputs) + " inputs, " + std::to_string(violations) + " violations, derivative error " +
               format("%.2e", worst_derivative);
    return r;
}

CheckResult check_toy_posterior(std::uint64_t seed, int members) {
    ExperimentConfig c;
    c.kind = ExperimentKind::LinearToy;
    c.seed = seed;
    c.toy.members = members;
    const auto toy = run_linear_toy(c);
    return at_most("toy_posterior_mean", toy.max_relative_error, 0.02,
                   format("max relative deviation %.3e", toy.max_relative_error));
}

CheckResult check_dense_gain(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int M = 6, N = 40, n_obs = 5;
    const double rho = 0.9;
    Eigen::MatrixXd X(M, N);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) X(i, j) = gauss(rng);
    Eigen::SparseMatrix<double, Eigen::RowMajor> H(2, M);
    H.insert(0, 1) = 1.0;
    H.insert(1, 3) = 0.4;
    H.insert(1, 4) = 0.6;
    H.makeCompressed();
    Eigen::MatrixXd B(2, 2);
    B << 0.3, 0.1, 0.1, 0.2;
    const Eigen::MatrixXd R = B * B.transpose() + 0.01 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd y(2);
    y << gauss(rng), gauss(rng);

    const Eigen::MatrixXd Hd(H);
    const Eigen::VectorXd mean = X.rowwise().mean();
    const Eigen::MatrixXd A = X.colwise() - mean;
    const Eigen::MatrixXd C = A * A.transpose() / (N - 1);
    const Eigen::MatrixXd gain = C * Hd.transpose() * (rho * rho * n_obs * Hd * C * Hd.transpose() + R).inverse();
    const Eigen::MatrixXd expected = X + gain * ((-rho * n_obs * Hd * X).colwise() + y);
    const Eigen::MatrixXd got = enkf::kalman_update_matrix(X, H, y, n_obs, rho, R);
    const double err = (got - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff();
    return at_most("dense_gain", err, 1e-10, format("max relative deviation %.2e", err));
}

CheckResult check_inflation(std::uint64_t seed) {
    auto space = std::make_shared<const fem::FeSpace>(std::make_shared<const fem::Mesh>(fem::build_mesh_1d(20)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ensemble::EnsembleState ens;
    const Eigen::VectorXd floor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->num_qp_total()));
    for (int i = 0; i < 15; ++i) {
        auto m = fracture::make_initial_state(*space, floor);
        Eigen::VectorXd a = m.stacked();
        for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = 0.5 + gauss(rng);
        m.set_stacked(a);
        ens.members.push_back(m);
        ens.seeds.push_back(static_cast<std::uint64_t>(i));
        ens.nuclei.emplace_back();
        ens.failed.push_back(0);
    }
    const double r = 1.3;
    const Eigen::VectorXd mean0 = ensemble::ensemble_mean(ens);
    const Eigen::MatrixXd A0 = ensemble::ensemble_anomalies(ens);
    ensemble::inflate(ens, r);
    const Eigen::VectorXd mean1 = ensemble::ensemble_mean(ens);
    const Eigen::MatrixXd A1 = ensemble::ensemble_anomalies(ens);
    const double mean_err = (mean1 - mean0).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd C0 = A0 * A0.transpose(), C1 = A1 * A1.transpose();
    const double cov_err = (C1 - r * r * C0).cwiseAbs().maxCoeff() / (r * r * C0.cwiseAbs().maxCoeff());
    CheckResult res{"inflation", mean_err <= 1e-14 && cov_err <= 1e-12, std::max(mean_err, cov_err), 1e-14, ""};
    res.detail = format("mean shift %.2e, covariance deviation %.2e", mean_err, cov_err);
    return res;
}

CheckResult check_taper_psd(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (int M = 1; M <= 50; ++M) {
        std::vector<fem::Point> pts(static_cast<std::size_t>(M));
        for (auto& p : pts) p = {unit(rng), unit(rng)};
        Eigen::MatrixXd X(M, 10);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < 10; ++j) X(i, j) = gauss(rng);
        const Eigen::MatrixXd A = (X.colwise() - X.rowwise().mean()) / 3.0;
        const Eigen::MatrixXd C = (A * A.transpose()).cwiseProduct(ensemble::localization_taper(pts, pts, 0.2));
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C).eigenvalues();
        worst = std::min(worst, ev.minCoeff() / std::max(ev.maxCoeff(), 1e-300));
    }
    return {"tapered_covariance_psd", worst >= -1e-8, worst, -1e-8,
            format("smallest relative eigenvalue %.2e over M = 1..50", worst)};
}

CheckResult check_matern_exponential() {
    const data::MaternParams w{0.5, 1.7, 0.3};
    double worst = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double r = 0.01 * k;
        worst = std::max(worst, std::abs(data::matern(r, w) - w.sigma * w.sigma * std::exp(-r / w.length)));
    }
    return at_most("matern_nu_half", worst, 1e-10, format("max deviation %.2e", worst));
}

CheckResult check_matern_large_nu() {
    const data::MaternParams w{80.0, 1.0, 0.25};
    const double got = data::matern(w.length, w);
    const double se = std::exp(-0.5);
    const double rel = std::abs(got - se) / se;
    return at_most("matern_large_nu", rel, 0.01, format("nu 80 at r = l: relative deviation %.2e", rel));
}

CheckResult check_matern_gram_psd(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<fem::Point> pts(50);
    for (auto& p : pts) p = {unit(rng), unit(rng)};
    double worst = 0.0;
    for (double nu : {0.5, 1.5, 2.5}) {
        const Eigen::MatrixXd K = data::matern_gram(pts, pts, {nu, 1.0, 0.3});
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
        worst = std::min(worst, ev.minCoeff() / ev.maxCoeff());
    }
    return {"matern_gram_psd", worst >= -1e-10, worst, -1e-10,
            format("smallest relative eigenvalue %.2e on 50 points", worst)};
}

CheckResult check_regularization(std::uint64_t seed) {
    // Cracked rod as in the 1D experiment.
    auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_1d(200));
    auto space = std::make_shared<const fem::FeSpace>(mesh);
    const auto params = fem::make_material(210000.0, 0.3, 2.7, 2.5e-2, 10.0, fem::Kinematics::Uniaxial);
    const fracture::FractureProblem problem{space, params, fracture::tension_rod_conditions(*space)};
    const ensemble::Nucleus nucleus{{0.57, 0.0}, 0.7, 0.05};
    auto state = fracture::make_initial_state(*space, ensemble::nucleus_floor(*space, nucleus));
    for (int n = 1; n <= 110; ++n) fracture::advance_step(problem, state, 1e-4 * n, {});
    const auto crack = enkf::crack_position_1d(*space, state.phi);
    if (!crack) return {"regularization", false, 0.0, 0.0, "reference rod did not crack"};

    // Perturb like an analysis would: smooth displacement noise and rough d noise.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noisy = state;
    const double a1 = gauss(rng), a2 = gauss(rng);
    for (std::size_t i = 0; i < space->num_nodes(); ++i) {
        const double x = mesh->node(i)[0];
        noisy.u[static_cast<Eigen::Index>(i)] += 2e-4 * (a1 * std::sin(3.0 * x) + a2 * std::cos(2.0 * x)) +
                                                 2e-6 * gauss(rng);
        noisy.d[static_cast<Eigen::Index>(i)] += 0.05 * gauss(rng);
    }
    problem.bc.apply(noisy.u, noisy.load);

    enkf::RegularizationSettings settings;
    enkf::RegularizationReport report;
    const auto reg = enkf::regularize_member(problem, noisy, settings, &report);
    const auto after = enkf::crack_position_1d(*space, reg.phi);
    const double h = 2.0 / 200;
    const double shift = after ? std::abs(*after - *crack) : 1e9;
    const bool nonneg = reg.phi.minCoeff() >= 0.0;
    const bool solved = report.max_subsolve_residual <= settings.newton.tolerance;
    CheckResult res{"regularization", nonneg && shift <= 2.0 * h && solved, shift / h, 2.0, ""};
    res.detail = format("crack moved %.2f elements, min phi %.2e, sub-solve residual %.2e", shift / h,
                        reg.phi.minCoeff(), report.max_subsolve_residual);
    return res;
}

std::vector<CheckResult> run_validation(std::uint64_t seed, const fracture::TangentOptions& tangent) {
    return {check_derivatives(1, 10, seed, tangent),
            check_derivatives(2, 10, seed, tangent),
            check_local_update(100000, seed),
            check_toy_posterior(seed),
            check_dense_gain(seed),
            check_inflation(seed),
            check_taper_psd(seed),
            check_matern_exponential(),
            check_matern_large_nu(),
            check_matern_gram_psd(seed),
            check_regularization(seed)};
}

}  // namespace pfenkf::experiment
