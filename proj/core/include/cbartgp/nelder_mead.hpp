#pragma once

#include <Eigen/Dense>
#include <functional>

namespace cbartgp {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fmin = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Downhill simplex minimizer with standard coefficients (reflect 1, expand 2,
// contract 0.5, shrink 0.5). Converges when the simplex diameter falls below
// diam_tol.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double initial_step, double diam_tol,
                             int max_evals);

}  // namespace cbartgp
