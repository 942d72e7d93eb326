#include "pfenkf/data/dataset.hpp"

#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pfenkf/ensemble/prior.hpp"

namespace pfenkf::data {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
}

bool skip_line(const std::string& line) { return line.empty() || line[0] == '#'; }

}  // namespace

DataBatch generate_data(const fem::FeSpace& truth_space, const fracture::FieldState& truth,
                        const std::vector<fem::Point>& sensors, double rho, double sigma_e, int n_obs,
                        std::uint64_t seed, int step) {
    if (n_obs < 1) throw std::invalid_argument("n_obs must be at least 1");
    if (sigma_e < 0.0) throw std::invalid_argument("sensor noise must be non-negative");
    const auto H = build_observation_matrix(truth_space, sensors);
    const Eigen::VectorXd clean = rho * (H * truth.stacked());
    DataBatch batch;
    batch.step = step;
    batch.Y.resize(clean.size(), n_obs);
    std::mt19937_64 rng(ensemble::member_seed(seed, static_cast<std::uint64_t>(step)));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int j = 0; j < n_obs; ++j)
        for (Eigen::Index k = 0; k < clean.size(); ++k) {
            const double e = noise(rng);
            batch.Y(k, j) = clean[k] + sigma_e * e;
        }
    return batch;
}

void write_data_csv(std::ostream& os, const std::vector<DataBatch>& batches, int components,
                    const std::string& config_hash) {
    os << "# config_hash " << config_hash << "\n";
    os << "step,obs_index,sensor_id,component,value\n";
    for (const auto& b : batches)
        for (Eigen::Index j = 0; j < b.Y.cols(); ++j)
            for (Eigen::Index k = 0; k < b.Y.rows(); ++k)
                os << b.step << ',' << j << ',' << k / components << ',' << k % components << ',' << fmt17(b.Y(k, j))
                   << '\n';
}

std::map<int, DataBatch> read_data_csv(std::istream& is, int components) {
    struct Entry {
        int step, obs, sensor, comp;
        double value;
    };
    std::vector<Entry> entries;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (skip_line(line)) continue;
        if (!header) {
            if (line != "step,obs_index,sensor_id,component,value") throw std::runtime_error("unexpected data header");
            header = true;
            continue;
        }
        const auto c = split_csv(line);
        if (c.size() != 5) throw std::runtime_error("bad data line: " + line);
        entries.push_back({std::stoi(c[0]), std::stoi(c[1]), std::stoi(c[2]), std::stoi(c[3]), to_double(c[4])});
    }
    std::map<int, std::pair<int, int>> extent;  // step -> (n_obs, n_sensors)
    for (const auto& e : entries) {
        if (e.comp < 0 || e.comp >= components || e.obs < 0 || e.sensor < 0)
            throw std::runtime_error("data entry out of range");
        auto& ext = extent[e.step];
        ext.first = std::max(ext.first, e.obs + 1);
        ext.second = std::max(ext.second, e.sensor + 1);
    }
    std::map<int, DataBatch> out;
    std::map<int, Eigen::Index> filled;
    for (const auto& [step, ext] : extent) {
        auto& b = out[step];
        b.step = step;
        b.Y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(ext.second) * components, ext.first,
                                        std::numeric_limits<double>::quiet_NaN());
    }
    for (const auto& e : entries) {
        out[e.step].Y(static_cast<Eigen::Index>(e.sensor) * components + e.comp, e.obs) = e.value;
        ++filled[e.step];
    }
    for (const auto& [step, b] : out)
        if (filled[step] != b.Y.size())
            throw std::runtime_error("data for step " + std::to_string(step) + " is incomplete");
    return out;
}

void write_sensors_csv(std::ostream& os, const std::vector<fem::Point>& sensors, int dim,
                       const std::string& config_hash) {
    os << "# config_hash " << config_hash << "\n";
    os << (dim == 2 ? "sensor_id,x,y\n" : "sensor_id,x\n");
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        os << i << ',' << fmt17(sensors[i][0]);
        if (dim == 2) os << ',' << fmt17(sensors[i][1]);
        os << '\n';
    }
}

std::vector<fem::Point> read_sensors_csv(std::istream& is) {
    std::vector<fem::Point> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (skip_line(line)) continue;
        if (!header) {
            if (line.rfind("sensor_id,x", 0) != 0) throw std::runtime_error("unexpected sensor header");
            header = true;
            continue;
        }
        const auto c = split_csv(line);
        if (c.size() < 2 || c.size() > 3) throw std::runtime_error("bad sensor line: " + line);
        if (std::stoul(c[0]) != out.size()) throw std::runtime_error("sensor ids must be consecutive from 0");
        out.push_back({to_double(c[1]), c.size() == 3 ? to_double(c[2]) : 0.0});
    }
    return out;
}

void write_hyperparameters(std::ostream& os, const MaternParams& w, const std::string& config_hash) {
    os << "# config_hash " << config_hash << "\n";
    os << "nu " << fmt17(w.nu) << "\nsigma " << fmt17(w.sigma) << "\nlength " << fmt17(w.length) << "\n";
}

MaternParams read_hyperparameters(std::istream& is) {
    MaternParams w;
    std::string line;
    while (std::getline(is, line)) {
        if (skip_line(line)) continue;
        std::istringstream ls(line);
        std::string key, value;
        ls >> key >> value;
        if (key == "nu")
            w.nu = to_double(value);
        else if (key == "sigma")
            w.sigma = to_double(value);
        else if (key == "length")
            w.length = to_double(value);
        else
            throw std::runtime_error("unknown hyperparameter key '" + key + "'");
    }
    w.validate();
    return w;
}

}  // namespace pfenkf::data
