#include "cbartgp/gp.hpp"

#include <algorithm>
#include <cmath>

#include "cbartgp/nelder_mead.hpp"
#include "cbartgp/rng.hpp"

namespace cbartgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kVarLo = 1e-6, kVarHi = 1e6;  // box for sigma2, phi, tau2
constexpr double kRhoHi = 0.999;

double clamp_pos(double v) { return std::clamp(v, kVarLo, kVarHi); }

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Transformed coordinates used by the simplex search.
CovarianceModel model_from_u(CovKind kind, const Eigen::VectorXd& u,
                             const Eigen::MatrixXd& locations) {
  switch (kind) {
    case CovKind::AR1: {
      const double rho = kRhoHi * sigmoid(u(0));
      const double sigma = std::clamp(std::exp(u(1)), 1e-3, 1e3);
      return CovarianceModel::ar1(rho, sigma);
    }
    case CovKind::SpatialExp:
      return CovarianceModel::spatial_exp(clamp_pos(std::exp(u(0))), clamp_pos(std::exp(u(1))),
                                          clamp_pos(std::exp(u(2))), locations);
    case CovKind::SpatialMatern:
      return CovarianceModel::spatial_matern(clamp_pos(std::exp(u(0))), clamp_pos(std::exp(u(1))),
                                             clamp_pos(std::exp(u(2))), 0.5, locations);
    default:
      throw ConfigError("fit_gp_mle supports AR1, SpatialExp and SpatialMatern kinds");
  }
}

double lag1_autocorr(const Eigen::VectorXd& e) {
  const int n = static_cast<int>(e.size());
  const double mean = e.mean();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = e(i) - mean;
    den += d * d;
    if (i + 1 < n) num += d * (e(i + 1) - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

Eigen::VectorXd mom_start(CovKind kind, const Eigen::VectorXd& e,
                          const Eigen::MatrixXd& locations) {
  if (kind == CovKind::AR1) {
    const double r1 = std::clamp(lag1_autocorr(e), 1e-3, 0.95);
    const double sd = std::sqrt(e.squaredNorm() / e.size());
    const double sigma0 = std::clamp(sd * std::sqrt(1.0 - r1 * r1), 1e-3, 1e3);
    Eigen::VectorXd u(2);
    u << logit(r1 / kRhoHi), std::log(sigma0);
    return u;
  }
  const double v = std::max(e.squaredNorm() / e.size(), 2.0 * kVarLo);
  const int m = std::min<int>(static_cast<int>(locations.rows()), 200);
  double dist = 0.0;
  int cnt = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      dist += (locations.row(i) - locations.row(j)).norm();
      ++cnt;
    }
  }
  const double phi0 = clamp_pos(cnt > 0 ? dist / cnt : 1.0);
  Eigen::VectorXd u(3);
  u << std::log(0.5 * v), std::log(phi0), std::log(0.5 * v);
  return u;
}

}  // namespace

double gp_loglik(const Eigen::VectorXd& e, const CovarianceModel& model) {
  const int n = static_cast<int>(e.size());
  if (model.spatial()) {
    if (model.locations.rows() != n)
      throw ConfigError("gp_loglik: spatial model requires locations with n rows");
    const Eigen::MatrixXd sigma = build_spatial_sigma(model, model.locations);
    SpdFactor f = spd_factorize(sigma);
    return -0.5 * (n * kLog2Pi + f.logdet + e.dot(f.llt.solve(e)));
  }
  const PrecisionView prec = make_precision(model, n);
  return -0.5 * (n * kLog2Pi + prec.logdet_sigma() + e.dot(prec.apply(e)));
}

GpFit fit_gp_mle(const Eigen::VectorXd& e, CovKind kind, const Eigen::MatrixXd& locations) {
  const int n = static_cast<int>(e.size());
  if (n < 10) throw ConfigError("fit_gp_mle requires n >= 10");
  const bool spatial = kind == CovKind::SpatialExp || kind == CovKind::SpatialMatern;
  if (spatial && locations.rows() != n)
    throw ConfigError("fit_gp_mle: spatial fit requires n x 2 locations");

  auto objective = [&](const Eigen::VectorXd& u) {
    const double ll = gp_loglik(e, model_from_u(kind, u, locations));
    return std::isfinite(ll) ? -ll : 1e300;
  };

  const Eigen::VectorXd u0 = mom_start(kind, e, locations);
  Rng jitter(0x9D2C5680u);  // fixed stream: fits are deterministic in the data

  GpFit fit;
  double best = 1e300;
  Eigen::VectorXd best_u = u0;
  for (int s = 0; s < 5; ++s) {
    Eigen::VectorXd us = u0;
    if (s > 0) {
      for (int i = 0; i < us.size(); ++i) us(i) += 0.7 * jitter.normal();
    }
    fit.start_logliks.push_back(-objective(us));
    NelderMeadResult r = nelder_mead(objective, us, 0.5, 1e-6, 800);
    fit.evaluations += r.evaluations;
    fit.converged = fit.converged || r.converged;
    if (r.fmin < best) {
      best = r.fmin;
      best_u = r.x;
    }
  }

  fit.model = model_from_u(kind, best_u, locations);
  fit.loglik = gp_loglik(e, fit.model);

  if (kind == CovKind::AR1) {
    const double rho = fit.model.params(0);
    fit.fitted_struct = Eigen::VectorXd::Zero(n);
    for (int i = 1; i < n; ++i) fit.fitted_struct(i) = rho * e(i - 1);
  } else {
    CovarianceModel pure = fit.model;
    pure.params(2) = 0.0;  // kernel without the nugget
    const Eigen::MatrixXd k = build_spatial_sigma(pure, locations);
    const Eigen::MatrixXd sigma = build_spatial_sigma(fit.model, locations);
    fit.fitted_struct = k * spd_factorize(sigma).llt.solve(e);
  }
  return fit;
}

Eigen::VectorXd krige(const GpFit& fit, const Eigen::VectorXd& residuals,
                      const Eigen::MatrixXd& train_locations,
                      const Eigen::MatrixXd& new_locations) {
  if (!fit.model.spatial()) throw ConfigError("krige requires a spatial GP fit");
  const int n = static_cast<int>(train_locations.rows());
  if (residuals.size() != n) throw ConfigError("krige: residuals/locations size mismatch");
  const double sigma2 = fit.model.params(0);
  const double phi = fit.model.params(1);
  const double nu = fit.model.kind == CovKind::SpatialMatern ? fit.model.params(3) : 0.5;

  const Eigen::MatrixXd sigma = build_spatial_sigma(fit.model, train_locations);
  const Eigen::VectorXd alpha = spd_factorize(sigma).llt.solve(residuals);

  const int n_new = static_cast<int>(new_locations.rows());
  Eigen::VectorXd out(n_new);
  for (int i = 0; i < n_new; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = (new_locations.row(i) - train_locations.row(j)).norm();
      acc += spatial_kernel(d, sigma2, phi, nu) * alpha(j);
    }
    out(i) = acc;
  }
  return out;
}

}  // namespace cbartgp
