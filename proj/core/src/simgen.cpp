#include "cbartgp/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "cbartgp/rng.hpp"

namespace cbartgp {

namespace {

// Substream ids; keeping x and noise draws on separate streams makes the
// covariate and error parts of a dataset independently reproducible.
enum Stream : std::uint64_t { kX = 1, kNoise = 2, kLocations = 3, kGpField = 4 };

}  // namespace

SimDataset gen_ar1_cubic(int n, double rho, double sigma, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_ar1_cubic requires n >= 1");
  if (rho < 0.0 || rho >= 1.0 || sigma <= 0.0)
    throw ConfigError("gen_ar1_cubic requires 0 <= rho < 1 and sigma > 0");

  SimDataset d;
  d.seed = seed;
  d.n_train = n;
  d.n_test = 0;
  d.x.resize(n, 1);
  d.locations.resize(n, 1);
  d.f_true.resize(n);
  d.y.resize(n);
  d.truth = CovarianceModel::ar1(rho, sigma);

  // The AR(1) index runs along increasing x: the error at x_(i) is eta_i, so
  // nearby covariate values carry correlated errors. An unordered covariate
  // would turn the dependence into white noise in x and nothing would
  // distinguish the iid fit from the correlated one.
  Rng rx = Rng::substream(seed, kX);
  std::vector<double> xs(n);
  for (double& v : xs) v = rx.uniform(-1.0, 1.0);
  std::sort(xs.begin(), xs.end());

  Rng re = Rng::substream(seed, kNoise);
  double eta_prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eps = re.normal(0.0, sigma);
    const double eta = (i == 0) ? eps : rho * eta_prev + eps;
    eta_prev = eta;
    d.x(i, 0) = xs[i];
    d.locations(i, 0) = i + 1;
    d.f_true(i) = xs[i] * xs[i] * xs[i];
    d.y(i) = d.f_true(i) + eta;
  }
  return d;
}

Eigen::VectorXd sample_spatial_noise(const Eigen::MatrixXd& locations,
                                     const Eigen::Vector3d& theta, std::uint64_t seed) {
  const int n = static_cast<int>(locations.rows());
  const double sigma2 = theta(0), phi = theta(1), tau2 = theta(2);
  Rng rz = Rng::substream(seed, kGpField);
  Rng re = Rng::substream(seed, kNoise);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  if (sigma2 > 0.0) {
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
      k(i, i) = sigma2;
      for (int j = i + 1; j < n; ++j) {
        const double dij = (locations.row(i) - locations.row(j)).norm();
        k(i, j) = k(j, i) = spatial_kernel(dij, sigma2, phi, 0.5);
      }
    }
    const SpdFactor f = spd_factorize(k);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = rz.normal();
    z = f.llt.matrixL() * u;
  }
  if (tau2 > 0.0) {
    const double tau = std::sqrt(tau2);
    for (int i = 0; i < n; ++i) z(i) += re.normal(0.0, tau);
  }
  return z;
}

SimDataset gen_spatial(int scenario, int n_train, int n_test, const Eigen::Vector3d& theta,
                       std::uint64_t seed) {
  if (scenario < 1 || scenario > 3) throw ConfigError("gen_spatial: scenario must be 1, 2 or 3");
  if (n_train < 1 || n_test < 0) throw ConfigError("gen_spatial: invalid split sizes");
  const int n = n_train + n_test;

  SimDataset d;
  d.seed = seed;
  d.n_train = n_train;
  d.n_test = n_test;
  d.truth = CovarianceModel::spatial_exp(theta(0), theta(1), theta(2));

  Rng rs = Rng::substream(seed, kLocations);
  d.locations.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    d.locations(i, 0) = rs.uniform();
    d.locations(i, 1) = rs.uniform();
  }
  d.truth.locations = d.locations;

  Rng rx = Rng::substream(seed, kX);
  d.x.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const double s12 = d.locations(i, 0) + d.locations(i, 1);
    switch (scenario) {
      case 1: d.x(i, 0) = s12; break;
      case 2: d.x(i, 0) = 2.0 * rx.uniform(); break;
      default: d.x(i, 0) = 0.5 * s12 + rx.uniform(); break;
    }
  }

  const Eigen::VectorXd eta = sample_spatial_noise(d.locations, theta, seed);
  d.f_true = d.x.col(0).array().cube();
  d.y = d.f_true + eta;
  return d;
}

Figure1Example gen_figure1_example() {
  Figure1Example ex;
  // Two rules: root splits on x1, the left child on x2; leaves left-to-right
  // carry means 1, 2, 3.
  ex.tree.birth(0, SplitRule{0, 0.5});
  ex.tree.birth(ex.tree.node(0).left, SplitRule{1, 0.5});
  ex.tree.leaf_means() = {1.0, 2.0, 3.0};

  SimDataset& d = ex.data;
  d.n_train = 5;
  d.x.resize(5, 2);
  d.x << 0.8, 0.2,   // leaf 3
         0.2, 0.3,   // leaf 1
         0.3, 0.7,   // leaf 2
         0.1, 0.6,   // leaf 2
         0.9, 0.9;   // leaf 3
  d.locations.resize(5, 1);
  d.locations << 1, 2, 3, 4, 5;
  d.f_true.resize(5);
  d.f_true << 3, 1, 2, 2, 3;
  d.y = d.f_true;
  d.truth = CovarianceModel::iid(1.0);
  return ex;
}

}  // namespace cbartgp
