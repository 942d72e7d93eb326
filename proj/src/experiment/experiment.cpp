#include "pfenkf/experiment/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "pfenkf/enkf/analysis.hpp"
#include "pfenkf/fem/mesh_io.hpp"

namespace pfenkf::experiment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

fem::Mesh make_rod_mesh(const RodMesh& m) {
    if (m.offset > 0.0) return fem::build_mesh_1d_offset(m.elements, m.offset, m.x_min, m.x_max);
    return fem::build_mesh_1d(m.elements, m.x_min, m.x_max);
}

fracture::FractureProblem make_problem(std::shared_ptr<const fem::Mesh> mesh, const fem::MaterialParams& params) {
    auto space = std::make_shared<const fem::FeSpace>(std::move(mesh));
    auto bc = space->dim() == 1 ? fracture::tension_rod_conditions(*space) : fracture::sens_shear_conditions(*space);
    return {space, params, std::move(bc)};
}

std::vector<fem::Point> make_sensors(const ExperimentConfig& c) {
    if (!c.observation.sensor_file.empty()) {
        std::ifstream in(c.observation.sensor_file);
        if (!in) throw ConfigError("cannot open sensor file " + c.observation.sensor_file.string());
        return data::read_sensors_csv(in);
    }
    const auto& o = c.observation;
    if (c.dim() == 1) return data::equispaced_sensors_1d(o.sensors, o.region.x_min, o.region.x_max);
    return data::grid_sensors_2d(o.sensors, o.region.x_min, o.region.x_max, o.region.y_min, o.region.y_max);
}

enkf::FilterConfig filter_config(const ExperimentConfig& c, int threads) {
    auto f = c.filter;
    f.forecast.threads = threads;
    return f;
}

}  // namespace

Setup build_setup(const ExperimentConfig& c) {
    if (c.kind == ExperimentKind::LinearToy) throw ConfigError("the linear toy has no finite element setup");
    std::shared_ptr<const fem::Mesh> mesh, truth_mesh;
    if (c.dim() == 1) {
        mesh = std::make_shared<const fem::Mesh>(make_rod_mesh(c.rod_mesh));
        truth_mesh = std::make_shared<const fem::Mesh>(make_rod_mesh(c.rod_truth_mesh));
    } else {
        mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_sens(c.sens_mesh));
        truth_mesh = std::make_shared<const fem::Mesh>(fem::build_mesh_sens(c.sens_truth_mesh));
    }
    auto problem = make_problem(mesh, c.material);
    auto truth_problem = make_problem(truth_mesh, c.material);
    auto sensors = make_sensors(c);
    auto obs = data::make_observation_model(problem.fe(), sensors, c.observation.rho, c.observation.sigma_e,
                                            c.observation.kernel);
    return {mesh, truth_mesh, std::move(problem), std::move(truth_problem), c.schedule(), std::move(sensors),
            std::move(obs)};
}

std::uint64_t data_seed(const ExperimentConfig& c) { return ensemble::member_seed(c.seed, 0x7fffffffULL); }

TruthRun run_truth(const Setup& setup, const ExperimentConfig& c, int last_step, const std::set<int>& snapshot_steps) {
    const auto& space = setup.truth_problem.fe();
    auto state = fracture::make_initial_state(space, ensemble::nucleus_floor(space, c.truth_nucleus));
    TruthRun run;
    run.loads.push_back(0.0);
    run.forces.push_back(fracture::reaction_force(setup.truth_problem, state));
    if (snapshot_steps.count(0)) run.snapshots[0] = state;
    for (int n = 1; n <= last_step; ++n) {
        try {
            fracture::advance_step(setup.truth_problem, state, setup.schedule.load_at(n), c.newton);
        } catch (const fracture::SolverError& e) {
            throw fracture::SolverError("ground truth failed at step " + std::to_string(n) + ": " + e.what(),
                                        e.trace());
        }
        run.loads.push_back(state.load);
        run.forces.push_back(fracture::reaction_force(setup.truth_problem, state));
        if (snapshot_steps.count(n)) run.snapshots[n] = state;
    }
    return run;
}

std::map<int, data::DataBatch> generate_observations(const Setup& setup, const ExperimentConfig& c,
                                                     const TruthRun& truth) {
    std::map<int, data::DataBatch> out;
    for (int s : c.filter.analysis_steps) {
        auto it = truth.snapshots.find(s);
        if (it == truth.snapshots.end())
            throw std::invalid_argument("no truth state at analysis step " + std::to_string(s));
        out[s] = data::generate_data(setup.truth_problem.fe(), it->second, setup.sensors, c.observation.rho,
                                     c.observation.sigma_e, c.observation.n_obs, data_seed(c), s);
    }
    return out;
}

std::map<int, data::DataBatch> read_observations(const ExperimentConfig& c) {
    std::ifstream in(c.observation.data_file);
    if (!in) throw ConfigError("cannot open data file " + c.observation.data_file.string());
    return data::read_data_csv(in, c.dim());
}

ensemble::EnsembleState sample_prior_ensemble(const Setup& setup, const ExperimentConfig& c) {
    if (c.dim() == 1)
        return ensemble::sample_prior(c.prior_1d, setup.problem.fe(), static_cast<std::size_t>(c.members), c.seed);
    return ensemble::sample_prior(c.prior_2d, setup.problem.fe(), static_cast<std::size_t>(c.members), c.seed);
}

FilterRun run_filter_experiment(const Setup& setup, const ExperimentConfig& c,
                                const std::map<int, data::DataBatch>& data, int threads,
                                const enkf::StepObserver& observer) {
    for (int s : c.filter.analysis_steps)
        if (!data.count(s)) throw ConfigError("no observations for analysis step " + std::to_string(s));
    const auto prior = sample_prior_ensemble(setup, c);
    const auto source = [&](int step) { return data.at(step); };
    FilterRun run;
    run.result = enkf::run_filter(setup.problem, prior, setup.schedule, setup.obs, filter_config(c, threads), source,
                                  observer);
    if (c.compare_no_analysis) {
        auto plain = filter_config(c, threads);
        plain.analysis_steps.clear();
        plain.final_step = c.extrapolation_step();
        run.no_analysis_forces = enkf::run_filter(setup.problem, prior, setup.schedule, setup.obs, plain, source).forces;
    }
    return run;
}

data::CalibrationResult run_calibration(const Setup& setup, const ExperimentConfig& c,
                                        const std::map<int, data::DataBatch>& data, int threads) {
    if (c.filter.analysis_steps.empty()) throw ConfigError("calibration needs at least one analysis step");
    const int step = *c.filter.analysis_steps.begin();
    auto it = data.find(step);
    if (it == data.end()) throw ConfigError("no observations for analysis step " + std::to_string(step));
    auto ens = sample_prior_ensemble(setup, c);
    auto settings = c.filter.forecast;
    settings.threads = threads;
    for (int n = 1; n <= step; ++n) ensemble::forecast_step(setup.problem, ens, setup.schedule.load_at(n), settings);
    ensemble::inflate(ens, c.filter.inflation);
    const Eigen::VectorXd mean = ensemble::ensemble_mean(ens);
    const Eigen::MatrixXd HA = setup.obs.H * ensemble::ensemble_anomalies(ens);
    return data::calibrate_hyperparameters(it->second.Y, setup.obs.H * mean, HA, setup.obs, setup.obs.kernel,
                                           c.filter.calibration);
}

ToyResult run_linear_toy(const ExperimentConfig& c) {
    const auto& t = c.toy;
    const int M = t.state_size;
    const int K = static_cast<int>(t.observed.size());
    Eigen::MatrixXd C(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const double r = (i - j) / std::max(1.0, M - 1.0);
            C(i, j) = t.prior_sigma * t.prior_sigma * std::exp(-0.5 * r * r / (t.prior_length * t.prior_length));
        }
    C.diagonal().array() += 1e-10 * t.prior_sigma * t.prior_sigma;
    const Eigen::MatrixXd L = C.llt().matrixL();
    Eigen::SparseMatrix<double, Eigen::RowMajor> H(K, M);
    for (int k = 0; k < K; ++k) H.insert(k, t.observed[static_cast<std::size_t>(k)]) = 1.0;
    H.makeCompressed();

    std::mt19937_64 rng(ensemble::member_seed(c.seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](int n) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = gauss(rng);
        return z;
    };
    ToyResult res;
    res.prior_mean = Eigen::VectorXd::LinSpaced(M, 0.0, 1.0);
    res.truth = res.prior_mean + L * draw(M);
    const Eigen::MatrixXd R = t.sigma_e * t.sigma_e * Eigen::MatrixXd::Identity(K, K);
    Eigen::VectorXd y_sum = Eigen::VectorXd::Zero(K);
    const Eigen::VectorXd Ht = H * res.truth;
    for (int j = 0; j < t.n_obs; ++j) y_sum += Ht + t.sigma_e * draw(K);

    Eigen::MatrixXd X(M, t.members);
    for (int i = 0; i < t.members; ++i) X.col(i) = res.prior_mean + L * draw(M);

    const Eigen::MatrixXd Hd = Eigen::MatrixXd(H);
    const Eigen::MatrixXd G = t.n_obs * Hd * C * Hd.transpose() + R;
    res.exact_posterior_mean =
        res.prior_mean + C * Hd.transpose() * G.ldlt().solve(y_sum - t.n_obs * Hd * res.prior_mean);
    const Eigen::MatrixXd Xa = enkf::kalman_update_matrix(X, H, y_sum, t.n_obs, 1.0, R);
    res.ensemble_posterior_mean = Xa.rowwise().mean();
    const double scale = res.exact_posterior_mean.cwiseAbs().maxCoeff();
    res.max_relative_error = (res.ensemble_posterior_mean - res.exact_posterior_mean).cwiseAbs().maxCoeff() / scale;
    return res;
}

std::vector<CrackSummary> crack_summary(const std::vector<enkf::AnalysisRecord>& records) {
    std::vector<CrackSummary> out;
    for (const auto& r : records) {
        std::vector<double> before, after;
        CrackSummary s;
        s.step = r.step;
        for (const auto& m : r.members) {
            before.push_back(m.crack_before ? *m.crack_before : kNaN);
            after.push_back(m.crack_after && !m.failed ? *m.crack_after : kNaN);
            s.cracked_before += m.crack_before ? 1 : 0;
            s.cracked_after += m.crack_after && !m.failed ? 1 : 0;
        }
        std::tie(s.mean_before, s.std_before) = enkf::mean_and_std(before);
        std::tie(s.mean_after, s.std_after) = enkf::mean_and_std(after);
        out.push_back(s);
    }
    return out;
}

double max_relative_force_spread(const std::vector<std::vector<double>>& forces, int last_step) {
    double worst = 0.0;
    for (int n = 1; n <= last_step && n < static_cast<int>(forces.size()); ++n) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
        int count = 0;
        for (double f : forces[static_cast<std::size_t>(n)])
            if (std::isfinite(f)) {
                lo = std::min(lo, f);
                hi = std::max(hi, f);
                sum += f;
                ++count;
            }
        if (count < 2) continue;
        worst = std::max(worst, (hi - lo) / std::abs(sum / count));
    }
    return worst;
}

void write_truth_outputs(const std::filesystem::path& dir, const Setup& setup, const ExperimentConfig& c,
                         const TruthRun& truth) {
    auto os = open_output(dir / "truth_forces.csv");
    os << "# config_hash " << c.hash << "\nstep,u_D,force\n";
    for (std::size_t n = 0; n < truth.forces.size(); ++n)
        os << n << ',' << fmt17(truth.loads[n]) << ',' << fmt17(truth.forces[n]) << '\n';
    auto mesh_os = open_output(dir / "truth_mesh.txt");
    mesh_os << "# config_hash " << c.hash << '\n';
    fem::write_mesh(mesh_os, *setup.truth_mesh);
    for (const auto& [step, state] : truth.snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "truth_step_%04d.txt", step);
        auto f = open_output(dir / "fields" / name);
        f << "# config_hash " << c.hash << '\n';
        fracture::write_field_dump(f, setup.truth_problem.fe(), state);
    }
}

void write_data_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const Setup& setup,
                        const std::map<int, data::DataBatch>& data) {
    std::vector<data::DataBatch> batches;
    for (const auto& [step, b] : data) batches.push_back(b);
    auto os = open_output(dir / "data.csv");
    data::write_data_csv(os, batches, c.dim(), c.hash);
    auto ss = open_output(dir / "sensors.csv");
    data::write_sensors_csv(ss, setup.sensors, c.dim(), c.hash);
}

void write_filter_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const FilterRun& run,
                          const std::optional<TruthRun>& truth) {
    const auto schedule = c.schedule();
    {
        auto os = open_output(dir / "analysis_report.csv");
        enkf::write_analysis_report(os, run.result.analyses, c.hash);
    }
    {
        auto os = open_output(dir / "ensemble_forces.csv");
        enkf::write_force_table(os, run.result.forces, schedule, c.hash);
    }
    if (run.no_analysis_forces) {
        auto os = open_output(dir / "no_analysis_forces.csv");
        enkf::write_force_table(os, *run.no_analysis_forces, schedule, c.hash);
    }
    {
        auto os = open_output(dir / "analysis_summary.csv");
        os << "# config_hash " << c.hash << "\n"
           << "step,crack_mean_pre,crack_std_pre,cracked_pre,crack_mean_post,crack_std_post,cracked_post,"
              "misfit_pre,misfit_post,spread_pre,spread_post,kernel_sigma,kernel_length\n";
        const auto cracks = crack_summary(run.result.analyses);
        for (std::size_t k = 0; k < cracks.size(); ++k) {
            const auto& s = cracks[k];
            const auto& r = run.result.analyses[k];
            os << s.step << ',' << fmt17(s.mean_before) << ',' << fmt17(s.std_before) << ',' << s.cracked_before << ','
               << fmt17(s.mean_after) << ',' << fmt17(s.std_after) << ',' << s.cracked_after << ','
               << fmt17(r.stats.misfit_before) << ',' << fmt17(r.stats.misfit_after) << ','
               << fmt17(r.stats.spread_before) << ',' << fmt17(r.stats.spread_after) << ','
               << fmt17(r.kernel.sigma) << ',' << fmt17(r.kernel.length) << '\n';
        }
    }
    // Histogram source: member forces at the extrapolation step, and the peak
    // force of every member, with and without analysis.
    const int e = c.extrapolation_step();
    const auto& with = run.result.forces;
    const std::size_t n_members = with.empty() ? 0 : with.front().size();
    auto value = [](const std::vector<std::vector<double>>& f, int step, std::size_t i) {
        return step < static_cast<int>(f.size()) ? f[static_cast<std::size_t>(step)][i] : kNaN;
    };
    auto peak = [](const std::vector<std::vector<double>>& f, std::size_t i) {
        double p = kNaN;
        for (const auto& row : f)
            if (std::isfinite(row[i]) && !(row[i] <= p)) p = row[i];
        return p;
    };
    auto os = open_output(dir / "extrapolation.csv");
    os << "# config_hash " << c.hash << "\n# extrapolation_step " << e << "\n";
    os << "member,force_analysis,force_no_analysis,peak_analysis,peak_no_analysis\n";
    for (std::size_t i = 0; i < n_members; ++i) {
        os << i << ',' << fmt17(value(with, e, i)) << ','
           << fmt17(run.no_analysis_forces ? value(*run.no_analysis_forces, e, i) : kNaN) << ','
           << fmt17(peak(with, i)) << ',' << fmt17(run.no_analysis_forces ? peak(*run.no_analysis_forces, i) : kNaN)
           << '\n';
    }
    if (truth) {
        os << "truth," << fmt17(e < static_cast<int>(truth->forces.size()) ? truth->forces[static_cast<std::size_t>(e)] : kNaN)
           << ",,";
        double p = kNaN;
        for (double f : truth->forces)
            if (!(f <= p)) p = f;
        os << fmt17(p) << ",\n";
    }
}

void write_toy_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const ToyResult& toy) {
    auto os = open_output(dir / "toy_posterior.csv");
    os << "# config_hash " << c.hash << "\nindex,truth,prior_mean,exact_posterior_mean,ensemble_posterior_mean\n";
    for (Eigen::Index i = 0; i < toy.truth.size(); ++i)
        os << i << ',' << fmt17(toy.truth[i]) << ',' << fmt17(toy.prior_mean[i]) << ','
           << fmt17(toy.exact_posterior_mean[i]) << ',' << fmt17(toy.ensemble_posterior_mean[i]) << '\n';
}

}  // namespace pfenkf::experiment
