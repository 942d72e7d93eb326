#include "pfenkf/enkf/filter.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "pfenkf/enkf/crack.hpp"

namespace pfenkf::enkf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt17(*v) : std::string("nan"); }

std::optional<double> crack_measure(const fracture::FractureProblem& problem, const fracture::FieldState& s) {
    if (problem.fe().dim() != 1) return std::nullopt;
    return crack_position_1d(problem.fe(), s.phi);
}

std::vector<double> force_row(const fracture::FractureProblem& problem, const ensemble::EnsembleState& ens) {
    std::vector<double> row(ens.size(), kNaN);
    for (std::size_t i : ens.active()) row[i] = fracture::reaction_force(problem, ens.members[i]);
    return row;
}

}  // namespace

void FilterConfig::validate(double model_length_scale) const {
    if (final_step < 0) throw std::invalid_argument("final step must be non-negative");
    if (!(inflation >= 1.0)) throw std::invalid_argument("inflation factor must be at least 1");
    if (l_loc < 0.0) throw std::invalid_argument("localization length must be non-negative");
    if (!(regularization.length_scale > model_length_scale))
        throw std::invalid_argument("regularization length scale must exceed the model length scale");
    if (regularization.n_stagger < 1) throw std::invalid_argument("n_stagger must be at least 1");
    for (int s : analysis_steps)
        if (s < 1 || s > final_step) throw std::invalid_argument("analysis step " + std::to_string(s) + " out of range");
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
    double sum = 0.0;
    int n = 0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    if (n == 0) return {kNaN, kNaN};
    const double mean = sum / n;
    if (n < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1))};
}

FilterResult run_filter(const fracture::FractureProblem& problem, ensemble::EnsembleState ens,
                        const fracture::LoadSchedule& schedule, data::ObservationModel obs, const FilterConfig& config,
                        const DataSource& data_source, const StepObserver& observer) {
    config.validate(problem.params.length_scale);
    if (ens.failed.size() != ens.size()) ens.failed.assign(ens.size(), 0);
    const auto& space = problem.fe();

    Eigen::MatrixXd taper_so, taper_oo;
    Taper taper;
    if (config.l_loc > 0.0 && !config.analysis_steps.empty()) {
        const auto channels = obs.channel_locations();
        taper_so = ensemble::localization_taper(space.dof_locations(), channels, config.l_loc);
        taper_oo = ensemble::localization_taper(channels, channels, config.l_loc);
        taper = {&taper_so, &taper_oo};
    }

    FilterResult result;
    result.forces.push_back(force_row(problem, ens));
    double load = ens.step > 0 ? schedule.load_at(ens.step) : 0.0;
    while (ens.step < config.final_step) {
        const int n = ens.step + 1;
        load += schedule.increment(n);
        ensemble::forecast_step(problem, ens, load, config.forecast);
        if (config.analysis_steps.count(n)) {
            AnalysisRecord rec;
            rec.step = n;
            const auto act = ens.active();
            for (std::size_t i : act) {
                MemberAnalysis m;
                m.member = i;
                m.crack_before = crack_measure(problem, ens.members[i]);
                m.force_before = fracture::reaction_force(problem, ens.members[i]);
                rec.members.push_back(m);
            }
            const auto batch = data_source(n);
            if (batch.Y.rows() != obs.num_channels())
                throw std::invalid_argument("data batch for step " + std::to_string(n) + " has wrong channel count");
            ensemble::inflate(ens, config.inflation);
            if (config.recalibrate) {
                const Eigen::VectorXd mean = ensemble::ensemble_mean(ens);
                const Eigen::MatrixXd HA = obs.H * ensemble::ensemble_anomalies(ens);
                const auto cal = data::calibrate_hyperparameters(batch.Y, obs.H * mean, HA, obs, obs.kernel,
                                                                 config.calibration);
                obs.kernel = cal.params;
            }
            rec.kernel = obs.kernel;
            // Keep the forecast phase fields: the Kalman shift leaves them alone,
            // and they are the history against which regularization can restore.
            rec.stats = kalman_update(ens, batch, obs, observation_noise(obs), taper);
            for (std::size_t k = 0; k < act.size(); ++k) {
                auto& m = rec.members[k];
                m.misfit_before = rec.stats.member_misfit_before[k];
                m.misfit_after = rec.stats.member_misfit_after[k];
                RegularizationReport rr;
                try {
                    ens.members[act[k]] = regularize_member(problem, ens.members[act[k]], config.regularization, &rr);
                    m.regularization_iterations = rr.iterations;
                    m.regularization_attempts = rr.attempts;
                    m.crack_after = crack_measure(problem, ens.members[act[k]]);
                    m.force_after = fracture::reaction_force(problem, ens.members[act[k]]);
                } catch (const fracture::SolverError& e) {
                    ens.failed[act[k]] = 1;
                    m.failed = true;
                    m.failure = e.what();
                    m.force_after = kNaN;
                }
            }
            std::string first_failure;
            for (const auto& m : rec.members)
                if (m.failed && first_failure.empty()) first_failure = "; first: " + m.failure;
            result.analyses.push_back(std::move(rec));
            if (static_cast<double>(ens.num_failed()) >
                config.forecast.max_failed_fraction * static_cast<double>(ens.size()))
                throw ensemble::EnsembleFailure("too many members failed regularization at step " + std::to_string(n) +
                                                first_failure);
        }
        result.forces.push_back(force_row(problem, ens));
        if (observer) observer(n, ens);
    }
    result.final_state = std::move(ens);
    return result;
}

void write_analysis_report(std::ostream& os, const std::vector<AnalysisRecord>& records,
                           const std::string& config_hash) {
    os << "# config_hash " << config_hash << "\n";
    os << "step,member,misfit_pre,misfit_post,crack_pre,crack_post,force_pre,force_post,reg_iterations,"
          "reg_attempts,failed\n";
    for (const auto& r : records)
        for (const auto& m : r.members)
            os << r.step << ',' << m.member << ',' << fmt17(m.misfit_before) << ',' << fmt17(m.misfit_after) << ','
               << fmt_opt(m.crack_before) << ',' << fmt_opt(m.crack_after) << ',' << fmt17(m.force_before) << ','
               << fmt17(m.force_after) << ',' << m.regularization_iterations << ',' << m.regularization_attempts << ','
               << (m.failed ? 1 : 0) << '\n';
}

void write_force_table(std::ostream& os, const std::vector<std::vector<double>>& forces,
                       const fracture::LoadSchedule& schedule, const std::string& config_hash) {
    os << "# config_hash " << config_hash << "\n";
    os << "step,load";
    const std::size_t n = forces.empty() ? 0 : forces.front().size();
    for (std::size_t i = 0; i < n; ++i) os << ",member_" << i;
    os << '\n';
    double load = 0.0;
    for (std::size_t s = 0; s < forces.size(); ++s) {
        if (s > 0) load += schedule.increment(static_cast<int>(s));
        os << s << ',' << fmt17(load);
        for (double f : forces[s]) os << ',' << fmt17(f);
        os << '\n';
    }
}

}  // namespace pfenkf::enkf
