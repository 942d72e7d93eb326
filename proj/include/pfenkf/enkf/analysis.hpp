#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pfenkf/data/dataset.hpp"
#include "pfenkf/data/observation.hpp"
#include "pfenkf/ensemble/ensemble.hpp"

namespace pfenkf::enkf {

/// Optional Schur tapers: state-to-channel (M x n_ch) and channel-to-channel.
struct Taper {
    const Eigen::MatrixXd* state_obs = nullptr;
    const Eigen::MatrixXd* obs_obs = nullptr;
};

/// Kalman shift of every column of X (members as columns):
///   x_i + C H^T (rho^2 n_obs H C H^T + R)^{-1} (y_sum - rho n_obs H x_i)
/// with C the empirical covariance of the columns and R = C_delta + C_e.
Eigen::MatrixXd kalman_update_matrix(const Eigen::MatrixXd& X, const Eigen::SparseMatrix<double, Eigen::RowMajor>& H,
                                     const Eigen::VectorXd& y_sum, int n_obs, double rho, const Eigen::MatrixXd& R,
                                     const Taper& taper = {});

struct AnalysisStats {
    double misfit_before = 0.0;  // mean over members of |y_mean - rho H a|_G
    double misfit_after = 0.0;
    double spread_before = 0.0;  // mean std of H a over channels
    double spread_after = 0.0;
    std::vector<double> member_misfit_before;  // indexed like EnsembleState::active()
    std::vector<double> member_misfit_after;
};

/// Applies the Kalman shift to the stacked (u, d) vectors of all active
/// members. Phase fields are not touched.
AnalysisStats kalman_update(ensemble::EnsembleState& ens, const data::DataBatch& batch,
                            const data::ObservationModel& obs, const Eigen::MatrixXd& R, const Taper& taper = {});

/// C_delta + sigma_e^2 I over the observation channels.
Eigen::MatrixXd observation_noise(const data::ObservationModel& obs);

}  // namespace pfenkf::enkf
