#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cbartgp/covariance.hpp"

namespace cbartgp {

struct GpFit {
  CovarianceModel model;          // fitted parameters
  double loglik = 0.0;            // exact zero-mean Gaussian log-likelihood at the MLE
  Eigen::VectorXd fitted_struct;  // conditional mean of the structured component
  bool converged = false;
  int evaluations = 0;
  std::vector<double> start_logliks;  // log-likelihood at each multi-start initializer
};

// Zero-mean Gaussian log-likelihood of residuals e under Sigma(model):
// -1/2 (n log 2pi + log|Sigma| + e' Sigma^-1 e).
double gp_loglik(const Eigen::VectorXd& e, const CovarianceModel& model);

// Maximum likelihood fit by multi-start simplex search on transformed
// parameters. AR1 fits {rho, sigma}; spatial kinds fit {sigma2, phi, tau2}
// with Matern smoothness fixed at nu = 1/2 unless locations carry one.
GpFit fit_gp_mle(const Eigen::VectorXd& e, CovKind kind,
                 const Eigen::MatrixXd& locations = Eigen::MatrixXd());

// Simple kriging predictor k*' (K + tau2 I)^-1 e at the new locations.
Eigen::VectorXd krige(const GpFit& fit, const Eigen::VectorXd& residuals,
                      const Eigen::MatrixXd& train_locations,
                      const Eigen::MatrixXd& new_locations);

}  // namespace cbartgp
