#include "pfenkf/ensemble/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace pfenkf::ensemble {

namespace {

template <class Spec>
EnsembleState sample_prior_impl(const Spec& spec, const fem::FeSpace& space, std::size_t n_ens, std::uint64_t seed) {
    if (n_ens < 2) throw std::invalid_argument("ensemble needs at least two members");
    EnsembleState ens;
    for (std::size_t i = 0; i < n_ens; ++i) {
        const auto s = member_seed(seed, i);
        std::mt19937_64 rng(s);
        const auto nucleus = sample_nucleus(spec, rng);
        ens.seeds.push_back(s);
        ens.nuclei.push_back(nucleus);
        ens.members.push_back(fracture::make_initial_state(space, nucleus_floor(space, nucleus)));
    }
    ens.failed.assign(n_ens, 0);
    return ens;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::filesystem::path member_file(const std::filesystem::path& dir, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%04zu.txt", i);
    return dir / buf;
}

}  // namespace

std::vector<std::size_t> EnsembleState::active() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < members.size(); ++i)
        if (failed.empty() || !failed[i]) idx.push_back(i);
    return idx;
}

std::size_t EnsembleState::num_failed() const {
    std::size_t n = 0;
    for (char f : failed) n += f ? 1 : 0;
    return n;
}

EnsembleState sample_prior(const PriorSpec1D& spec, const fem::FeSpace& space, std::size_t n_ens, std::uint64_t seed) {
    return sample_prior_impl(spec, space, n_ens, seed);
}

EnsembleState sample_prior(const PriorSpec2D& spec, const fem::FeSpace& space, std::size_t n_ens, std::uint64_t seed) {
    return sample_prior_impl(spec, space, n_ens, seed);
}

ForecastReport forecast_step(const fracture::FractureProblem& problem, EnsembleState& ens, double load,
                             const ForecastSettings& settings) {
    if (ens.failed.size() != ens.members.size()) ens.failed.assign(ens.members.size(), 0);
    const auto act = ens.active();
    ForecastReport report;
    report.iterations.assign(ens.size(), 0);
    std::vector<char> failed_now(ens.size(), 0);
    std::vector<std::string> messages(ens.size());

    auto work = [&](std::size_t i) {
        try {
            const auto rep = fracture::advance_step(problem, ens.members[i], load, settings.newton);
            report.iterations[i] = rep.newton_iterations;
        } catch (const fracture::SolverError& e) {
            failed_now[i] = 1;
            messages[i] = e.what();
        }
    };
    const int threads = std::max(1, settings.threads);
    if (threads == 1) {
        for (std::size_t i : act) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < act.size(); k = next++) work(act[k]);
            });
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < ens.size(); ++i)
        if (failed_now[i]) {
            ens.failed[i] = 1;
            report.newly_failed.push_back(i);
            report.failure_messages.push_back(messages[i]);
        }
    ++ens.step;
    if (static_cast<double>(ens.num_failed()) > settings.max_failed_fraction * static_cast<double>(ens.size()))
        throw EnsembleFailure("too many ensemble members failed (" + std::to_string(ens.num_failed()) + " of " +
                              std::to_string(ens.size()) + ") at step " + std::to_string(ens.step) +
                              (report.failure_messages.empty() ? "" : "; last: " + report.failure_messages.back()));
    return report;
}

Eigen::VectorXd ensemble_mean(const EnsembleState& ens) {
    const auto act = ens.active();
    if (act.empty()) throw std::invalid_argument("ensemble has no active members");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(ens.members[act[0]].stacked().size());
    for (std::size_t i : act) mean += ens.members[i].stacked();
    return mean / static_cast<double>(act.size());
}

Eigen::MatrixXd ensemble_anomalies(const EnsembleState& ens) {
    const auto act = ens.active();
    if (act.size() < 2) throw std::invalid_argument("anomalies need at least two active members");
    const Eigen::VectorXd mean = ensemble_mean(ens);
    Eigen::MatrixXd A(mean.size(), static_cast<Eigen::Index>(act.size()));
    const double s = 1.0 / std::sqrt(static_cast<double>(act.size() - 1));
    for (std::size_t k = 0; k < act.size(); ++k)
        A.col(static_cast<Eigen::Index>(k)) = (ens.members[act[k]].stacked() - mean) * s;
    return A;
}

void inflate(EnsembleState& ens, double r) {
    if (!(r >= 1.0)) throw std::invalid_argument("inflation factor must be at least 1");
    if (r == 1.0) return;
    const Eigen::VectorXd mean = ensemble_mean(ens);
    for (std::size_t i : ens.active()) {
        auto& m = ens.members[i];
        m.set_stacked(r * (m.stacked() - mean) + mean);
    }
}

Eigen::MatrixXd localization_taper(const std::vector<fem::Point>& a, const std::vector<fem::Point>& b, double l_loc) {
    if (!(l_loc > 0.0)) throw std::invalid_argument("localization length must be positive");
    Eigen::MatrixXd T(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    const double c = 1.0 / (2.0 * l_loc * l_loc);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double dx = a[i][0] - b[j][0], dy = a[i][1] - b[j][1];
            T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::exp(-(dx * dx + dy * dy) * c);
        }
    return T;
}

void save_checkpoint(const std::filesystem::path& dir, const fem::FeSpace& space, const EnsembleState& ens,
                     const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    std::ofstream man(dir / "manifest.txt");
    if (!man) throw std::runtime_error("cannot write checkpoint manifest in " + dir.string());
    man << "# pfenkf ensemble checkpoint\n";
    man << "config_hash " << config_hash << "\n";
    man << "step " << ens.step << "\n";
    man << "members " << ens.size() << "\n";
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& n = ens.nuclei[i];
        man << i << ' ' << ens.seeds[i] << ' ' << (ens.failed.empty() ? 0 : int(ens.failed[i])) << ' '
            << fmt17(n.center[0]) << ' ' << fmt17(n.center[1]) << ' ' << fmt17(n.magnitude) << ' ' << fmt17(n.width)
            << '\n';
        std::ofstream f(member_file(dir, i));
        if (!f) throw std::runtime_error("cannot write checkpoint member file");
        fracture::write_field_dump(f, space, ens.members[i], true);
    }
}

EnsembleState load_checkpoint(const std::filesystem::path& dir, const fem::FeSpace& space, std::string* config_hash) {
    std::ifstream man(dir / "manifest.txt");
    if (!man) throw std::runtime_error("missing checkpoint manifest in " + dir.string());
    std::string line, key;
    EnsembleState ens;
    std::size_t n = 0;
    std::string hash;
    while (std::getline(man, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> key;
        if (key == "config_hash") {
            ls >> hash;
        } else if (key == "step") {
            ls >> ens.step;
        } else if (key == "members") {
            ls >> n;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(man, line)) throw std::runtime_error("checkpoint manifest truncated");
        std::istringstream ls(line);
        std::size_t id;
        std::uint64_t seed;
        int failed;
        Nucleus nu;
        std::string x, y, m, w;
        ls >> id >> seed >> failed >> x >> y >> m >> w;
        if (!ls || id != i) throw std::runtime_error("bad checkpoint manifest line: " + line);
        nu.center = {std::strtod(x.c_str(), nullptr), std::strtod(y.c_str(), nullptr)};
        nu.magnitude = std::strtod(m.c_str(), nullptr);
        nu.width = std::strtod(w.c_str(), nullptr);
        std::ifstream f(member_file(dir, i));
        if (!f) throw std::runtime_error("missing checkpoint member file " + member_file(dir, i).string());
        ens.members.push_back(fracture::read_field_dump(f, space));
        ens.seeds.push_back(seed);
        ens.failed.push_back(static_cast<char>(failed));
        ens.nuclei.push_back(nu);
    }
    if (config_hash) *config_hash = hash;
    return ens;
}

}  // namespace pfenkf::ensemble
