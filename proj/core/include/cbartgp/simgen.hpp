#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "cbartgp/covariance.hpp"
#include "cbartgp/tree.hpp"

namespace cbartgp {

// Synthetic dataset with the generating truth attached. For spatial designs
// the first n_train rows are the training split and the rest the test split.
struct SimDataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;          // n x p covariates
  Eigen::MatrixXd locations;  // n x 1 index or n x 2 coordinates
  Eigen::VectorXd f_true;
  CovarianceModel truth;
  int n_train = 0;
  int n_test = 0;
  std::uint64_t seed = 0;

  Eigen::MatrixXd x_train() const { return x.topRows(n_train); }
  Eigen::MatrixXd x_test() const { return x.bottomRows(n_test); }
  Eigen::MatrixXd loc_train() const { return locations.topRows(n_train); }
  Eigen::MatrixXd loc_test() const { return locations.bottomRows(n_test); }
  Eigen::VectorXd y_train() const { return y.head(n_train); }
  Eigen::VectorXd y_test() const { return y.tail(n_test); }
};

// y_i = x_i^3 + eta_i with x ~ U(-1,1) and eta the AR(1) recursion
// eta_1 = eps_1, eta_i = rho eta_{i-1} + eps_i, eps ~ N(0, sigma^2).
SimDataset gen_ar1_cubic(int n, double rho, double sigma, std::uint64_t seed);

// Spatial design: s ~ U(0,1)^2, z ~ GP(0, sigma2 exp(-d/phi)), eps ~ N(0, tau2),
// f(x) = x^3; the covariate follows the scenario:
//   1  x = s1 + s2
//   2  x ~ 2 U(0,1)
//   3  x = 0.5 (s1 + s2) + U(0,1)
SimDataset gen_spatial(int scenario, int n_train, int n_test, const Eigen::Vector3d& theta,
                       std::uint64_t seed);

// Draw z + eps at fixed locations under the spatial truth (exact kernel factorization).
Eigen::VectorXd sample_spatial_noise(const Eigen::MatrixXd& locations,
                                     const Eigen::Vector3d& theta, std::uint64_t seed);

// The five-observation golden fixture whose dummy representation is the
// three-leaf design [{2}, {3,4}, {1,5}] (1-based), with leaf means (1, 2, 3).
struct Figure1Example {
  SimDataset data;
  Tree tree;
};
Figure1Example gen_figure1_example();

}  // namespace cbartgp
