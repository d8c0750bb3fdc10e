#include <doctest.h>

#include "cbartgp/gp.hpp"
#include "cbartgp/simgen.hpp"
#include "oracles.hpp"

using namespace cbartgp;

TEST_SUITE("gp") {

TEST_CASE("zero residuals under the identity covariance") {
  const int n = 14;
  const Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  CHECK(gp_loglik(e, CovarianceModel::iid(1.0)) ==
        doctest::Approx(-0.5 * n * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("rho-zero ar1 is the iid normal log-likelihood") {
  Rng rng(3);
  const Eigen::VectorXd e = oracle::random_vector(9, rng);
  const double iid_ll = -0.5 * (9 * std::log(2.0 * M_PI) + e.squaredNorm());
  CHECK(gp_loglik(e, CovarianceModel::ar1(0.0, 1.0)) == doctest::Approx(iid_ll).epsilon(1e-12));
}

TEST_CASE("ar1 log-likelihood matches the dense covariance evaluation") {
  Eigen::VectorXd e(5);
  e << 0.3, -0.1, 0.4, 0.2, -0.5;
  const double ll = gp_loglik(e, CovarianceModel::ar1(0.5, 1.0));
  const double dense = oracle::mvn_logpdf_zero_mean(e, oracle::ar1_sigma_dense(0.5, 1.0, 5));
  CHECK(ll == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("ar1 mle is consistent on a long series") {
  const SimDataset d = gen_ar1_cubic(2000, 0.8, 0.1, 12345);
  const Eigen::VectorXd eta = d.y - d.f_true;
  const GpFit fit = fit_gp_mle(eta, CovKind::AR1);
  CHECK(fit.converged);
  CHECK(std::abs(fit.model.params(0) - 0.8) < 0.05);
  CHECK(std::abs(fit.model.params(1) - 0.1) < 0.02);
}

TEST_CASE("iid data fitted as ar1 shows no dependence") {
  Rng rng(777);
  const Eigen::VectorXd e = oracle::random_vector(2000, rng);
  const GpFit fit = fit_gp_mle(e, CovKind::AR1);
  CHECK(std::abs(fit.model.params(0)) < 0.1);
}

TEST_CASE("mle never falls below its starting points") {
  const SimDataset d = gen_ar1_cubic(300, 0.6, 0.2, 5);
  const GpFit fit = fit_gp_mle(d.y - d.f_true, CovKind::AR1);
  REQUIRE(fit.start_logliks.size() == 5);
  for (double s : fit.start_logliks) CHECK(fit.loglik >= s - 1e-9);
}

TEST_CASE("forward and central finite differences of the surface agree") {
  const SimDataset d = gen_ar1_cubic(80, 0.5, 0.3, 21);
  const Eigen::VectorXd e = d.y - d.f_true;
  Rng rng(23);

  // central differences at step 1e-5 and at twice the step must agree: a
  // kink or jitter-induced jump in the surface would break this
  auto check_surface = [&](auto&& f, Eigen::VectorXd theta) {
    const double h = 1e-5;
    for (int i = 0; i < theta.size(); ++i) {
      auto central = [&](double step) {
        Eigen::VectorXd up = theta, dn = theta;
        up(i) += step;
        dn(i) -= step;
        return (f(up) - f(dn)) / (2.0 * step);
      };
      const double fine = central(h);
      const double coarse = central(2.0 * h);
      CHECK(std::abs(fine - coarse) <= 1e-4 * std::max(1.0, std::abs(fine)));
    }
  };

  // admissible points of moderate misfit around the generating values
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd theta(2);
    theta << rng.uniform(0.35, 0.65), rng.uniform(0.25, 0.4);
    check_surface(
        [&](const Eigen::VectorXd& t) {
          return gp_loglik(e, CovarianceModel::ar1(t(0), t(1)));
        },
        theta);
  }

  const Eigen::MatrixXd locs = oracle::random_matrix(40, 2, rng);
  const Eigen::VectorXd es = e.head(40);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd theta(3);
    theta << rng.uniform(0.08, 0.2), rng.uniform(0.4, 0.8), rng.uniform(0.05, 0.15);
    check_surface(
        [&](const Eigen::VectorXd& t) {
          CovarianceModel m = CovarianceModel::spatial_exp(t(0), t(1), t(2));
          m.locations = locs;
          return gp_loglik(es, m);
        },
        theta);
  }
}

TEST_CASE("kriging with no nugget interpolates the training residuals") {
  Rng rng(31);
  const Eigen::MatrixXd locs = oracle::random_matrix(25, 2, rng);
  const Eigen::VectorXd resid = oracle::random_vector(25, rng);
  GpFit fit;
  fit.model = CovarianceModel::spatial_exp(1.3, 0.7, 0.0, locs);
  const Eigen::VectorXd z = krige(fit, resid, locs, locs);
  CHECK((z - resid).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("kriging reverts to the mean far away") {
  Rng rng(37);
  const Eigen::MatrixXd locs = oracle::random_matrix(15, 2, rng);
  const Eigen::VectorXd resid = oracle::random_vector(15, rng);
  GpFit fit;
  fit.model = CovarianceModel::spatial_exp(1.0, 0.2, 0.1, locs);
  Eigen::MatrixXd far(1, 2);
  far << 500.0, 500.0;
  CHECK(std::abs(krige(fit, resid, locs, far)(0)) < 1e-12);
}

TEST_CASE("kriging matches joint-Gaussian conditioning") {
  Rng rng(41);
  const int n = 20, m = 4;
  const Eigen::MatrixXd locs = oracle::random_matrix(n, 2, rng);
  const Eigen::MatrixXd news = oracle::random_matrix(m, 2, rng);
  const Eigen::VectorXd resid = oracle::random_vector(n, rng);
  const double s2 = 1.4, phi = 0.5, t2 = 0.3;
  GpFit fit;
  fit.model = CovarianceModel::spatial_exp(s2, phi, t2, locs);

  // condition (z*, e) jointly: cov(z*, e_j) = K(s*, s_j), var(e) = K + t2 I
  Eigen::MatrixXd c_ee(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = (locs.row(i) - locs.row(j)).norm();
      c_ee(i, j) = spatial_kernel(d, s2, phi, 0.5) + (i == j ? t2 : 0.0);
    }
  }
  Eigen::MatrixXd c_se(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      c_se(i, j) = spatial_kernel((news.row(i) - locs.row(j)).norm(), s2, phi, 0.5);
    }
  }
  const Eigen::VectorXd cond_mean = c_se * c_ee.inverse() * resid;
  CHECK(krige(fit, resid, locs, news).isApprox(cond_mean, 1e-8));
}

TEST_CASE("spatial mle attains at least the truth's likelihood") {
  const Eigen::Vector3d theta(3.0, 6.0, 1.0);
  const SimDataset d = gen_spatial(3, 120, 0, theta, 99);
  const Eigen::VectorXd e = d.y - d.f_true;
  const GpFit fit = fit_gp_mle(e, CovKind::SpatialExp, d.locations);
  CovarianceModel truth = CovarianceModel::spatial_exp(3.0, 6.0, 1.0);
  truth.locations = d.locations;
  CHECK(fit.loglik >= gp_loglik(e, truth) - 1e-6);
}

}  // TEST_SUITE
