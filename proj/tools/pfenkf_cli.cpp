// Command line driver: truth, generate-data, filter, calibrate, validate.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pfenkf/data/gp.hpp"
#include "pfenkf/experiment/checks.hpp"
#include "pfenkf/experiment/config.hpp"
#include "pfenkf/experiment/experiment.hpp"

namespace ex = pfenkf::experiment;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;
constexpr int kSolverFailure = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    int parallel = 1;
    std::string out;
    std::string preset = "desk";
    bool tangent_fault = false;
};

ex::ExperimentConfig load(const Options& o) {
    auto c = ex::load_config(o.config, o.preset, o.seed);
    if (!o.out.empty()) c.out_dir = o.out;
    return c;
}

std::set<int> truth_snapshots(const ex::ExperimentConfig& c) {
    std::set<int> s = c.filter.analysis_steps;
    s.insert(c.final_step);
    return s;
}

std::map<int, pfenkf::data::DataBatch> observations(const ex::Setup& setup, const ex::ExperimentConfig& c,
                                                    std::optional<ex::TruthRun>& truth) {
    if (!c.observation.data_file.empty()) return ex::read_observations(c);
    truth = ex::run_truth(setup, c, c.final_step, truth_snapshots(c));
    return ex::generate_observations(setup, c, *truth);
}

int cmd_truth(const Options& o) {
    const auto c = load(o);
    const auto setup = ex::build_setup(c);
    const auto truth = ex::run_truth(setup, c, c.final_step, truth_snapshots(c));
    ex::write_truth_outputs(c.out_dir, setup, c, truth);
    std::printf("truth: %d steps, peak force %.6g, outputs in %s\n", c.final_step,
                *std::max_element(truth.forces.begin(), truth.forces.end()), c.out_dir.string().c_str());
    return kOk;
}

int cmd_generate_data(const Options& o) {
    const auto c = load(o);
    const auto setup = ex::build_setup(c);
    const int last = c.filter.analysis_steps.empty() ? 0 : *c.filter.analysis_steps.rbegin();
    const auto truth = ex::run_truth(setup, c, last, c.filter.analysis_steps);
    const auto data = ex::generate_observations(setup, c, truth);
    ex::write_data_outputs(c.out_dir, c, setup, data);
    std::printf("data: %zu analysis steps, %zu sensors, outputs in %s\n", data.size(), setup.sensors.size(),
                c.out_dir.string().c_str());
    return kOk;
}

int cmd_filter(const Options& o) {
    const auto c = load(o);
    if (c.kind == ex::ExperimentKind::LinearToy) {
        const auto toy = ex::run_linear_toy(c);
        ex::write_toy_outputs(c.out_dir, c, toy);
        std::printf("toy: max relative deviation of the posterior mean %.3e\n", toy.max_relative_error);
        return kOk;
    }
    const auto setup = ex::build_setup(c);
    std::optional<ex::TruthRun> truth;
    const auto data = observations(setup, c, truth);
    if (truth) {
        ex::write_truth_outputs(c.out_dir, setup, c, *truth);
        ex::write_data_outputs(c.out_dir, c, setup, data);
    }
    pfenkf::enkf::StepObserver observer;
    if (c.checkpoints)
        observer = [&](int step, const pfenkf::ensemble::EnsembleState& ens) {
            if (!c.filter.analysis_steps.count(step)) return;
            char name[32];
            std::snprintf(name, sizeof name, "step_%04d", step);
            pfenkf::ensemble::save_checkpoint(c.out_dir / "checkpoints" / name, setup.problem.fe(), ens, c.hash);
        };
    const auto run = ex::run_filter_experiment(setup, c, data, o.parallel, observer);
    ex::write_filter_outputs(c.out_dir, c, run, truth);
    for (const auto& s : ex::crack_summary(run.result.analyses))
        if (c.dim() == 1)
            std::printf("step %d: crack %.4f +- %.4f (%d cracked) -> %.4f +- %.4f (%d cracked)\n", s.step,
                        s.mean_before, s.std_before, s.cracked_before, s.mean_after, s.std_after, s.cracked_after);
    std::printf("filter: %zu members, %zu failed, outputs in %s\n", run.result.final_state.size(),
                run.result.final_state.num_failed(), c.out_dir.string().c_str());
    return kOk;
}

int cmd_calibrate(const Options& o) {
    const auto c = load(o);
    const auto setup = ex::build_setup(c);
    std::optional<ex::TruthRun> truth;
    const auto data = observations(setup, c, truth);
    const auto cal = ex::run_calibration(setup, c, data, o.parallel);
    std::filesystem::create_directories(c.out_dir);
    std::ofstream os(c.out_dir / "hyperparameters.txt");
    pfenkf::data::write_hyperparameters(os, cal.params, c.hash);
    std::printf("calibrate: sigma %.6g, l %.6g, objective %.6g -> %.6g (%s after %d iterations)\n", cal.params.sigma,
                cal.params.length, cal.initial_objective, cal.objective, cal.converged ? "converged" : "stopped",
                cal.iterations);
    return kOk;
}

int cmd_validate(const Options& o) {
    std::uint64_t seed = o.seed.value_or(1);
    pfenkf::fracture::TangentOptions tangent;
    if (o.tangent_fault) tangent.uu_scale = 1.01;
    bool all = true;
    for (const auto& r : ex::run_validation(seed, tangent)) {
        std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        all = all && r.passed;
    }
    return all ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-field fracture with ensemble Kalman data assimilation"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", o.config, "experiment INI file")->check(CLI::ExistingFile);
        if (needs_config) opt->required();
        sub->add_option("--seed", o.seed, "master seed (overrides the config)");
        sub->add_option("--parallel", o.parallel, "worker threads for the ensemble")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory (overrides the config)");
        sub->add_option("--preset", o.preset, "configuration preset")->check(CLI::IsMember({"desk", "paper"}));
    };
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&);
        bool needs_config;
    };
    const Sub subs[] = {{"truth", "run the ground truth", cmd_truth, true},
                        {"generate-data", "synthetic sensor data from the ground truth", cmd_generate_data, true},
                        {"filter", "run the ensemble filter", cmd_filter, true},
                        {"calibrate", "fit the discrepancy hyperparameters", cmd_calibrate, true},
                        {"validate", "run the verification checks", cmd_validate, false}};
    int (*selected)(const Options&) = nullptr;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, s.needs_config);
        if (std::string(s.name) == "validate")
            sub->add_flag("--tangent-fault", o.tangent_fault, "perturb the displacement tangent")->group("");
        sub->callback([&selected, run = s.run] { selected = run; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }
    try {
        return selected(o);
    } catch (const ex::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kConfigError;
    } catch (const pfenkf::fracture::SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverFailure;
    } catch (const pfenkf::ensemble::EnsembleFailure& e) {
        std::fprintf(stderr, "ensemble failure: %s\n", e.what());
        return kSolverFailure;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
}
