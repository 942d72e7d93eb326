#include "pfenkf/enkf/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "pfenkf/data/gp.hpp"

namespace pfenkf::enkf {

namespace {

Eigen::LDLT<Eigen::MatrixXd> factor_gain(const Eigen::MatrixXd& G) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    const double pivot = ldlt.vectorD().size() ? ldlt.vectorD().minCoeff() : 0.0;
    if (ldlt.info() != Eigen::Success || !(pivot > 0.0))
        throw data::NotPositiveDefinite("innovation covariance is not positive definite", pivot);
    return ldlt;
}

}  // namespace

Eigen::MatrixXd kalman_update_matrix(const Eigen::MatrixXd& X, const Eigen::SparseMatrix<double, Eigen::RowMajor>& H,
                                     const Eigen::VectorXd& y_sum, int n_obs, double rho, const Eigen::MatrixXd& R,
                                     const Taper& taper) {
    const Eigen::Index M = X.rows(), N = X.cols(), m = H.rows();
    if (N < 2) throw std::invalid_argument("Kalman update needs at least two members");
    if (H.cols() != M || y_sum.size() != m || R.rows() != m || R.cols() != m)
        throw std::invalid_argument("Kalman update: dimension mismatch");
    if (n_obs < 1) throw std::invalid_argument("Kalman update needs n_obs >= 1");
    if ((taper.state_obs && (taper.state_obs->rows() != M || taper.state_obs->cols() != m)) ||
        (taper.obs_obs && (taper.obs_obs->rows() != m || taper.obs_obs->cols() != m)))
        throw std::invalid_argument("Kalman update: taper has wrong shape");

    const Eigen::VectorXd mean = X.rowwise().mean();
    const Eigen::MatrixXd A = (X.colwise() - mean) / std::sqrt(static_cast<double>(N - 1));
    const Eigen::MatrixXd HA = H * A;
    Eigen::MatrixXd CHt = A * HA.transpose();
    Eigen::MatrixXd HCHt = HA * HA.transpose();
    if (taper.state_obs) CHt.array() *= taper.state_obs->array();
    if (taper.obs_obs) HCHt.array() *= taper.obs_obs->array();

    const Eigen::MatrixXd G = rho * rho * n_obs * HCHt + R;
    const auto ldlt = factor_gain(G);
    const Eigen::MatrixXd innovation = (-rho * n_obs * (H * X)).colwise() + y_sum;
    return X + CHt * ldlt.solve(innovation);
}

Eigen::MatrixXd observation_noise(const data::ObservationModel& obs) {
    Eigen::MatrixXd R = data::discrepancy_covariance(obs, obs.kernel);
    R.diagonal().array() += obs.sigma_e * obs.sigma_e;
    return R;
}

AnalysisStats kalman_update(ensemble::EnsembleState& ens, const data::DataBatch& batch,
                            const data::ObservationModel& obs, const Eigen::MatrixXd& R, const Taper& taper) {
    const auto act = ens.active();
    if (act.size() < 2) throw std::invalid_argument("analysis needs at least two active members");
    const Eigen::Index M = ens.members[act[0]].stacked().size();
    Eigen::MatrixXd X(M, static_cast<Eigen::Index>(act.size()));
    for (std::size_t k = 0; k < act.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = ens.members[act[k]].stacked();

    const Eigen::VectorXd y_mean = batch.mean();
    auto misfit_and_spread = [&](const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& G, std::vector<double>& member,
                                 double& misfit, double& spread) {
        const Eigen::MatrixXd HX = obs.H * Xs;
        const auto ldlt = factor_gain(G);
        member.clear();
        misfit = 0.0;
        for (Eigen::Index i = 0; i < HX.cols(); ++i) {
            const Eigen::VectorXd r = y_mean - obs.rho * HX.col(i);
            member.push_back(std::sqrt(r.dot(ldlt.solve(r))));
            misfit += member.back();
        }
        misfit /= static_cast<double>(HX.cols());
        const Eigen::VectorXd mu = HX.rowwise().mean();
        const Eigen::VectorXd var =
            (HX.colwise() - mu).rowwise().squaredNorm() / static_cast<double>(HX.cols() - 1);
        spread = var.array().sqrt().mean();
    };

    // Misfits are measured in the metric of the innovation covariance of the
    // averaged observation.
    const Eigen::VectorXd mean = X.rowwise().mean();
    const Eigen::MatrixXd HA = obs.H * ((X.colwise() - mean) / std::sqrt(static_cast<double>(X.cols() - 1)));
    Eigen::MatrixXd HCHt = HA * HA.transpose();
    if (taper.obs_obs) HCHt.array() *= taper.obs_obs->array();
    const Eigen::MatrixXd G_mean = obs.rho * obs.rho * HCHt + R / batch.num_obs();

    AnalysisStats stats;
    misfit_and_spread(X, G_mean, stats.member_misfit_before, stats.misfit_before, stats.spread_before);
    const Eigen::MatrixXd Xa = kalman_update_matrix(X, obs.H, batch.sum(), batch.num_obs(), obs.rho, R, taper);
    misfit_and_spread(Xa, G_mean, stats.member_misfit_after, stats.misfit_after, stats.spread_after);
    for (std::size_t k = 0; k < act.size(); ++k) ens.members[act[k]].set_stacked(Xa.col(static_cast<Eigen::Index>(k)));
    return stats;
}

}  // namespace pfenkf::enkf
