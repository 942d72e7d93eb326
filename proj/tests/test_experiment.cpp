#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "pfenkf/experiment/config.hpp"
#include "pfenkf/experiment/experiment.hpp"

using namespace pfenkf;
using namespace pfenkf::experiment;

namespace {

const char* kRod = R"(
[experiment]
id = rod1d
seed = 3

[material]
penalty_factor = 10

[mesh]
elements = 50

[load]
final_step = 20

[observation]
sensors = 5

[filter]
members = 4
analysis_steps = 10, 15

[output]
dir = somewhere
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pfenkf_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PFENKF_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
    const auto c = parse_config(kRod, "desk");
    CHECK(c.kind == ExperimentKind::Rod1D);
    CHECK(c.dim() == 1);
    CHECK(c.seed == 3);
    CHECK(c.rod_mesh.elements == 50);
    CHECK(c.rod_truth_mesh.elements == 100);
    CHECK(c.material.penalty == doctest::Approx(10.0 * 2.7 / 2.5e-2));
    CHECK(c.filter.analysis_steps == std::set<int>{10, 15});
    CHECK(c.filter.final_step == 20);
    CHECK(c.extrapolation_step() == 20);
    CHECK(c.out_dir == "somewhere");
    CHECK(c.hash.size() == 16);

    // The hash follows every setting but the output location.
    CHECK(parse_config(kRod, "desk").hash == c.hash);
    std::string moved = kRod;
    moved.replace(moved.find("somewhere"), 9, "elsewhere");
    CHECK(parse_config(moved, "desk").hash == c.hash);
    CHECK(parse_config(kRod, "desk", 4).hash != c.hash);
    CHECK(parse_config(kRod, "desk", 4).seed == 4);
    std::string explicit_default = std::string(kRod) + "\n[solver]\ntolerance = 1e-8\n";
    CHECK(parse_config(explicit_default, "desk").hash == c.hash);
}

TEST_CASE("preset sections") {
    const std::string text = std::string(kRod) + "\n[desk:filter]\nmembers = 6\n[paper:filter]\nmembers = 8\n";
    CHECK(parse_config(text, "desk").members == 6);
    CHECK(parse_config(text, "paper").members == 8);
    CHECK_THROWS_AS(parse_config(std::string(kRod) + "\n[other:filter]\nmembers = 2\n", "desk"), ConfigError);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config(std::string(kRod) + "\n[filter]\nbogus = 1\n", "desk"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nid = nope\n", "desk"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kRod) + "\n[mesh]\nelements = many\n", "desk"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kRod) + "\n[observation]\ndata_file = missing.csv\n", "desk"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/file.ini", "desk"), ConfigError);
}

TEST_CASE("shipped configs parse in both presets") {
    for (const char* name : {"rod1d.ini", "sens2d.ini", "linear-toy.ini"})
        for (const char* preset : {"desk", "paper"}) CHECK_NOTHROW(load_config(std::filesystem::path(PFENKF_CONFIG_DIR) / name, preset));
    const auto desk = load_config(std::filesystem::path(PFENKF_CONFIG_DIR) / "sens2d.ini", "desk");
    const auto setup = build_setup(desk);
    CHECK(setup.mesh->num_dofs() >= 4000);
    CHECK(setup.mesh->num_dofs() <= 8000);
    CHECK(setup.truth_mesh->num_dofs() > setup.mesh->num_dofs());
    CHECK(desk.members == 20);
    CHECK(setup.sensors.size() == 25);
}

TEST_CASE("truth run outputs") {
    const auto c = parse_config(kRod, "desk");
    const auto setup = build_setup(c);
    const auto truth = run_truth(setup, c, c.final_step, {10, 15, 20});
    CHECK(truth.forces.size() == 21);
    CHECK(truth.snapshots.size() == 3);
    // Nearly linear prefix, below E u_D / 2 because of the nucleus.
    CHECK(truth.forces[2] == doctest::Approx(2.0 * truth.forces[1]).epsilon(1e-3));
    CHECK(truth.forces[1] < 210000.0 * 1e-4 / 2.0);

    const auto a = scratch("truth_a"), b = scratch("truth_b");
    write_truth_outputs(a, setup, c, truth);
    write_truth_outputs(b, setup, c, run_truth(setup, c, c.final_step, {10, 15, 20}));
    const auto csv = slurp(a / "truth_forces.csv");
    CHECK(csv.rfind("# config_hash " + c.hash + "\nstep,u_D,force\n", 0) == 0);
    CHECK(csv == slurp(b / "truth_forces.csv"));
    CHECK(slurp(a / "fields" / "truth_step_0010.txt") == slurp(b / "fields" / "truth_step_0010.txt"));

    const auto data = generate_observations(setup, c, truth);
    CHECK(data.size() == 2);
    CHECK(data.at(10).num_obs() == 20);
    write_data_outputs(a, c, setup, data);
    auto with_file = c;
    with_file.observation.data_file = a / "data.csv";
    const auto back = read_observations(with_file);
    CHECK(back.at(15).Y == data.at(15).Y);
}

TEST_CASE("linear toy") {
    ExperimentConfig c;
    c.kind = ExperimentKind::LinearToy;
    const auto toy = run_linear_toy(c);
    CHECK(toy.truth.size() == 6);
    CHECK(toy.max_relative_error < 0.02);
    CHECK(run_linear_toy(c).ensemble_posterior_mean == toy.ensemble_posterior_mean);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    {
        std::ofstream os(dir / "bad.ini");
        os << kRod << "\n[observation]\nkernel_nu = -1\n";
    }
    {
        std::ofstream os(dir / "missing.ini");
        os << kRod << "\n[observation]\ndata_file = nowhere.csv\n";
    }
    CHECK(run_cli("validate") == 0);
    CHECK(run_cli("validate --tangent-fault") == 1);
    CHECK(run_cli("filter --config " + (dir / "missing.ini").string()) == 2);
    CHECK(run_cli("truth --config " + (dir / "bad.ini").string()) == 2);
    CHECK(run_cli("truth --config /nonexistent.ini") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("truth --config " + (dir / "missing.ini").string() + " --out " + (dir / "t").string()) == 2);
    CHECK(run_cli("filter --config " + std::string(PFENKF_CONFIG_DIR) + "/linear-toy.ini --out " + (dir / "toy").string()) == 0);
    CHECK(std::filesystem::exists(dir / "toy" / "toy_posterior.csv"));
}
