#include "pfenkf/experiment/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace pfenkf::experiment {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& where, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw ConfigError(where + ": expected a number, got '" + text + "'");
    return v;
}

long long parse_int(const std::string& where, const std::string& text) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw ConfigError(where + ": expected an integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& where, const std::string& text) {
    if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
    if (text == "false" || text == "no" || text == "off" || text == "0") return false;
    throw ConfigError(where + ": expected true or false, got '" + text + "'");
}

// Flattened INI view with preset overrides applied. Every lookup records the
// effective value so the hash covers defaults as well as explicit keys.
class Reader {
public:
    Reader(const pt::ptree& tree, const std::string& preset) {
        std::vector<std::pair<std::string, const pt::ptree*>> overrides;
        for (const auto& [section, body] : tree) {
            if (!body.data().empty() && body.empty())
                throw ConfigError("key '" + section + "' outside of any section");
            const auto colon = section.find(':');
            if (colon == std::string::npos) {
                for (const auto& [key, value] : body) values_[section][key] = trim(value.data());
            } else if (section.substr(0, colon) == preset) {
                overrides.emplace_back(section.substr(colon + 1), &body);
            } else if (section.substr(0, colon) != "desk" && section.substr(0, colon) != "paper") {
                throw ConfigError("unknown preset in section [" + section + "]");
            }
        }
        for (const auto& [section, body] : overrides)
            for (const auto& [key, value] : *body) values_[section][key] = trim(value.data());
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) {
        used_.insert({section, key});
        auto s = values_.find(section);
        if (s == values_.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    double real(const std::string& section, const std::string& key, double def) {
        const auto r = raw(section, key);
        const double v = r ? parse_double(where(section, key), *r) : def;
        record(section, key, fmt17(v));
        return v;
    }
    int integer(const std::string& section, const std::string& key, int def) {
        const auto r = raw(section, key);
        const long long v = r ? parse_int(where(section, key), *r) : def;
        if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(where(section, key) + ": value out of range");
        record(section, key, std::to_string(v));
        return static_cast<int>(v);
    }
    std::uint64_t unsigned64(const std::string& section, const std::string& key, std::uint64_t def) {
        const auto r = raw(section, key);
        std::uint64_t v = def;
        if (r) {
            const auto* end = r->data() + r->size();
            auto [p, ec] = std::from_chars(r->data(), end, v);
            if (ec != std::errc() || p != end)
                throw ConfigError(where(section, key) + ": expected a non-negative integer, got '" + *r + "'");
        }
        record(section, key, std::to_string(v));
        return v;
    }
    bool boolean(const std::string& section, const std::string& key, bool def) {
        const auto r = raw(section, key);
        const bool v = r ? parse_bool(where(section, key), *r) : def;
        record(section, key, v ? "true" : "false");
        return v;
    }
    std::string text(const std::string& section, const std::string& key, const std::string& def,
                     bool hashed = true) {
        const auto r = raw(section, key);
        const std::string v = r ? *r : def;
        if (hashed) record(section, key, v);
        return v;
    }
    std::vector<int> int_list(const std::string& section, const std::string& key, const std::vector<int>& def) {
        const auto r = raw(section, key);
        std::vector<int> v = def;
        if (r) {
            v.clear();
            for (const auto& item : split(*r, ',')) v.push_back(static_cast<int>(parse_int(where(section, key), item)));
        }
        std::string canon;
        for (int x : v) canon += (canon.empty() ? "" : ",") + std::to_string(x);
        record(section, key, canon);
        return v;
    }
    std::vector<fracture::LoadSegment> segments(const std::string& section, const std::string& key,
                                                const std::vector<fracture::LoadSegment>& def) {
        const auto r = raw(section, key);
        std::vector<fracture::LoadSegment> v = def;
        if (r) {
            v.clear();
            for (const auto& item : split(*r, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw ConfigError(where(section, key) + ": expected 'step:increment' entries");
                v.push_back({static_cast<int>(parse_int(where(section, key), trim(item.substr(0, colon)))),
                             parse_double(where(section, key), trim(item.substr(colon + 1)))});
            }
        }
        std::string canon;
        for (const auto& s : v) canon += (canon.empty() ? "" : ",") + std::to_string(s.first_step) + ":" + fmt17(s.increment);
        record(section, key, canon);
        return v;
    }

    void override_value(const std::string& section, const std::string& key, const std::string& value) {
        record(section, key, value);
    }

    void reject_unused() const {
        for (const auto& [section, keys] : values_)
            for (const auto& [key, value] : keys)
                if (!used_.count({section, key})) throw ConfigError("unknown setting [" + section + "] " + key);
    }

    [[nodiscard]] std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : effective_) out += k + "=" + v + "\n";
        return out;
    }

private:
    static std::string where(const std::string& section, const std::string& key) {
        return "[" + section + "] " + key;
    }
    void record(const std::string& section, const std::string& key, const std::string& value) {
        effective_[section + "." + key] = value;
    }

    std::map<std::string, std::map<std::string, std::string>> values_;
    std::set<std::pair<std::string, std::string>> used_;
    std::map<std::string, std::string> effective_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

RodMesh read_rod_mesh(Reader& r, const std::string& section, const RodMesh& def) {
    RodMesh m;
    m.elements = r.integer(section, "elements", def.elements);
    m.x_min = r.real(section, "x_min", def.x_min);
    m.x_max = r.real(section, "x_max", def.x_max);
    m.offset = r.real(section, "offset", def.offset);
    if (m.elements < 2) throw ConfigError("[" + section + "] elements must be at least 2");
    if (!(m.x_max > m.x_min)) throw ConfigError("[" + section + "] needs x_max > x_min");
    if (!(m.offset >= 0.0 && m.offset < 1.0)) throw ConfigError("[" + section + "] offset must lie in [0, 1)");
    return m;
}

fem::SensMeshSettings read_sens_mesh(Reader& r, const std::string& section, const fem::SensMeshSettings& def) {
    fem::SensMeshSettings m;
    m.h_coarse = r.real(section, "h_coarse", def.h_coarse);
    m.h_fine = r.real(section, "h_fine", def.h_fine);
    m.refine_band.x_min = r.real(section, "band_x_min", def.refine_band.x_min);
    m.refine_band.x_max = r.real(section, "band_x_max", def.refine_band.x_max);
    m.refine_band.y_min = r.real(section, "band_y_min", def.refine_band.y_min);
    m.refine_band.y_max = r.real(section, "band_y_max", def.refine_band.y_max);
    m.notch_length = r.real(section, "notch_length", def.notch_length);
    m.flip_diagonals = r.boolean(section, "flip_diagonals", def.flip_diagonals);
    if (!(m.h_fine > 0.0 && m.h_coarse >= m.h_fine))
        throw ConfigError("[" + section + "] needs 0 < h_fine <= h_coarse");
    return m;
}

ExperimentKind parse_kind(const std::string& id) {
    if (id == "rod1d") return ExperimentKind::Rod1D;
    if (id == "sens2d") return ExperimentKind::Sens2D;
    if (id == "linear-toy") return ExperimentKind::LinearToy;
    throw ConfigError("[experiment] id must be rod1d, sens2d or linear-toy, got '" + id + "'");
}

void read_toy(Reader& r, ExperimentConfig& c) {
    auto& t = c.toy;
    t.state_size = r.integer("toy", "state_size", t.state_size);
    t.observed = r.int_list("toy", "observed", t.observed);
    t.members = r.integer("toy", "members", t.members);
    t.prior_sigma = r.real("toy", "prior_sigma", t.prior_sigma);
    t.prior_length = r.real("toy", "prior_length", t.prior_length);
    t.sigma_e = r.real("toy", "sigma_e", t.sigma_e);
    t.n_obs = r.integer("toy", "n_obs", t.n_obs);
    if (t.state_size < 1) throw ConfigError("[toy] state_size must be positive");
    if (t.members < 2) throw ConfigError("[toy] members must be at least 2");
    if (t.n_obs < 1) throw ConfigError("[toy] n_obs must be positive");
    if (!(t.prior_sigma > 0.0 && t.prior_length > 0.0 && t.sigma_e > 0.0))
        throw ConfigError("[toy] prior_sigma, prior_length and sigma_e must be positive");
    if (t.observed.empty()) throw ConfigError("[toy] needs at least one observed entry");
    for (int k : t.observed)
        if (k < 0 || k >= t.state_size) throw ConfigError("[toy] observed index out of range");
}

void read_physics(Reader& r, ExperimentConfig& c, const std::filesystem::path& base) {
    const bool two_d = c.kind == ExperimentKind::Sens2D;
    const double E = r.real("material", "youngs_modulus", 210000.0);
    const double nu = r.real("material", "poisson_ratio", 0.3);
    const double Gc = r.real("material", "fracture_energy", 2.7);
    const double ell = r.real("material", "length_scale", two_d ? 1.5e-2 : 2.5e-2);
    c.penalty_factor = r.real("material", "penalty_factor", 100.0);
    try {
        c.material = fem::make_material(E, nu, Gc, ell, c.penalty_factor,
                                        two_d ? fem::Kinematics::PlaneStrain : fem::Kinematics::Uniaxial);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[material] ") + e.what());
    }

    if (two_d) {
        c.sens_mesh = read_sens_mesh(r, "mesh", fem::SensMeshSettings{});
        fem::SensMeshSettings truth_def = c.sens_mesh;
        truth_def.h_coarse *= 0.97;
        truth_def.h_fine *= 0.97;
        truth_def.flip_diagonals = !c.sens_mesh.flip_diagonals;
        c.sens_truth_mesh = read_sens_mesh(r, "truth_mesh", truth_def);
    } else {
        c.rod_mesh = read_rod_mesh(r, "mesh", RodMesh{});
        c.rod_truth_mesh = read_rod_mesh(r, "truth_mesh", RodMesh{2 * c.rod_mesh.elements, c.rod_mesh.x_min,
                                                                  c.rod_mesh.x_max, 0.25});
    }

    c.load = r.segments("load", "increments",
                        two_d ? std::vector<fracture::LoadSegment>{{1, 1e-4}, {71, 1e-5}}
                              : std::vector<fracture::LoadSegment>{{1, 1e-4}});
    try {
        (void)fracture::LoadSchedule(c.load);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[load] ") + e.what());
    }
    c.final_step = r.integer("load", "final_step", two_d ? 500 : 130);
    if (c.final_step < 1) throw ConfigError("[load] final_step must be positive");

    c.newton.tolerance = r.real("solver", "tolerance", c.newton.tolerance);
    c.newton.max_iterations = r.integer("solver", "max_iterations", c.newton.max_iterations);
    c.newton.line_search = r.boolean("solver", "line_search", c.newton.line_search);
    c.newton.max_load_cuts = r.integer("solver", "max_load_cuts", c.newton.max_load_cuts);
    try {
        c.newton.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[solver] ") + e.what());
    }

    try {
        if (two_d) {
            auto& p = c.prior_2d;
            p.x_offset = r.real("prior", "x_offset", p.x_offset);
            p.x_scale = r.real("prior", "x_scale", p.x_scale);
            p.y_offset = r.real("prior", "y_offset", p.y_offset);
            p.y_scale = r.real("prior", "y_scale", p.y_scale);
            p.y_origin = r.real("prior", "y_origin", p.y_origin);
            p.beta_a = r.real("prior", "beta_a", p.beta_a);
            p.beta_b = r.real("prior", "beta_b", p.beta_b);
            p.width = r.real("prior", "width", p.width);
            p.magnitude = r.real("prior", "magnitude", p.magnitude);
            p.validate();
        } else {
            auto& p = c.prior_1d;
            p.position_mean = r.real("prior", "position_mean", p.position_mean);
            p.position_std = r.real("prior", "position_std", p.position_std);
            p.magnitude_min = r.real("prior", "magnitude_min", p.magnitude_min);
            p.magnitude_max = r.real("prior", "magnitude_max", p.magnitude_max);
            p.width = r.real("prior", "width", p.width);
            p.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[prior] ") + e.what());
    }

    auto& t = c.truth_nucleus;
    t.center[0] = r.real("truth", "x", two_d ? 0.58 : 0.57);
    t.center[1] = two_d ? r.real("truth", "y", 0.45) : 0.0;
    t.magnitude = r.real("truth", "magnitude", two_d ? 0.75 : 0.7);
    t.width = r.real("truth", "width", two_d ? 0.03 : 0.05);
    if (!(t.magnitude >= 0.0 && t.magnitude < 1.0)) throw ConfigError("[truth] magnitude must lie in [0, 1)");
    if (!(t.width > 0.0)) throw ConfigError("[truth] width must be positive");

    auto& o = c.observation;
    o.sensors = r.integer("observation", "sensors", two_d ? 100 : 25);
    if (two_d) {
        o.region = {r.real("observation", "x_min", 0.0), r.real("observation", "x_max", 1.0),
                    r.real("observation", "y_min", 0.0), r.real("observation", "y_max", 1.0)};
    } else {
        o.region = {r.real("observation", "x_min", c.rod_mesh.x_min), r.real("observation", "x_max", c.rod_mesh.x_max),
                    0.0, 0.0};
    }
    o.sensor_file = resolve(base, r.text("observation", "sensor_file", ""));
    o.rho = r.real("observation", "rho", 1.0);
    o.sigma_e = r.real("observation", "sigma_e", 4e-4);
    o.n_obs = r.integer("observation", "n_obs", 20);
    o.kernel.nu = r.real("observation", "kernel_nu", 1.5);
    o.kernel.sigma = r.real("observation", "kernel_sigma", 1e-4);
    o.kernel.length = r.real("observation", "kernel_length", 0.1);
    o.data_file = resolve(base, r.text("observation", "data_file", ""));
    if (o.sensors < 1) throw ConfigError("[observation] sensors must be positive");
    if (!(o.sigma_e > 0.0)) throw ConfigError("[observation] sigma_e must be positive");
    if (o.n_obs < 1) throw ConfigError("[observation] n_obs must be positive");
    try {
        o.kernel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[observation] ") + e.what());
    }
    for (const auto& f : {o.sensor_file, o.data_file})
        if (!f.empty() && !std::filesystem::exists(f)) throw ConfigError("file not found: " + f.string());

    c.members = r.integer("filter", "members", two_d ? 20 : 50);
    if (c.members < 2) throw ConfigError("[filter] members must be at least 2");
    auto& f = c.filter;
    f.final_step = c.final_step;
    const auto steps = r.int_list("filter", "analysis_steps", two_d ? std::vector<int>{381} : std::vector<int>{82, 92, 102});
    f.analysis_steps = std::set<int>(steps.begin(), steps.end());
    f.inflation = r.real("filter", "inflation", 1.05);
    f.l_loc = r.real("filter", "localization_length", two_d ? 0.45 : 0.2);
    f.regularization.length_scale = r.real("filter", "regularization_length", 4.0 * ell);
    f.regularization.n_stagger = r.integer("filter", "n_stagger", two_d ? 4 : 1);
    f.regularization.restore_history = r.boolean("filter", "restore_history", false);
    f.regularization.newton = c.newton;
    f.forecast.newton = c.newton;
    f.forecast.max_failed_fraction = r.real("filter", "max_failed_fraction", 0.1);
    f.recalibrate = r.boolean("filter", "recalibrate", false);
    c.compare_no_analysis = r.boolean("filter", "compare_no_analysis", two_d);
    c.extrapolation_offset = r.integer("filter", "extrapolation_offset", 30);
    c.checkpoints = r.boolean("filter", "checkpoints", true);
    try {
        f.validate(ell);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[filter] ") + e.what());
    }
    if (c.extrapolation_offset < 0) throw ConfigError("[filter] extrapolation_offset must be non-negative");
    if (!(f.forecast.max_failed_fraction >= 0.0 && f.forecast.max_failed_fraction < 1.0))
        throw ConfigError("[filter] max_failed_fraction must lie in [0, 1)");
}

}  // namespace

int ExperimentConfig::extrapolation_step() const {
    const int last = filter.analysis_steps.empty() ? 0 : *filter.analysis_steps.rbegin();
    return std::min(final_step, last + extrapolation_offset);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::string& preset,
                              std::optional<std::uint64_t> seed_override, const std::filesystem::path& base_dir) {
    if (preset != "desk" && preset != "paper") throw ConfigError("preset must be desk or paper, got '" + preset + "'");
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    Reader r(tree, preset);
    ExperimentConfig c;
    c.preset = preset;
    c.id = r.text("experiment", "id", "");
    c.kind = parse_kind(c.id);
    c.seed = r.unsigned64("experiment", "seed", 1);
    if (seed_override) {
        c.seed = *seed_override;
        r.override_value("experiment", "seed", std::to_string(c.seed));
    }
    c.out_dir = r.text("output", "dir", "out", false);

    if (c.kind == ExperimentKind::LinearToy)
        read_toy(r, c);
    else
        read_physics(r, c, base_dir);
    r.reject_unused();
    c.hash = fnv1a_hex(r.canonical());
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& preset,
                             std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), preset, seed_override, path.parent_path());
}

}  // namespace pfenkf::experiment
