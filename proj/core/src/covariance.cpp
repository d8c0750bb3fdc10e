#include "cbartgp/covariance.hpp"

#include <cmath>
#include <sstream>

namespace cbartgp {

CovarianceModel CovarianceModel::iid(double sigma2) {
  if (sigma2 <= 0.0) throw ConfigError("iid covariance requires sigma2 > 0");
  CovarianceModel m;
  m.kind = CovKind::IID;
  m.params = Eigen::VectorXd::Constant(1, sigma2);
  return m;
}

CovarianceModel CovarianceModel::ar1(double rho, double sigma) {
  if (rho < 0.0 || rho >= 1.0) throw ConfigError("ar1 requires 0 <= rho < 1");
  if (sigma <= 0.0) throw ConfigError("ar1 requires sigma > 0");
  CovarianceModel m;
  m.kind = CovKind::AR1;
  m.params.resize(2);
  m.params << rho, sigma;
  return m;
}

CovarianceModel CovarianceModel::arp(const Eigen::VectorXd& coeffs, double tau2) {
  if (coeffs.size() < 1) throw ConfigError("arp requires p >= 1 coefficients");
  if (tau2 <= 0.0) throw ConfigError("arp requires tau2 > 0");
  CovarianceModel m;
  m.kind = CovKind::ARp;
  m.params.resize(coeffs.size() + 1);
  m.params.head(coeffs.size()) = coeffs;
  m.params(coeffs.size()) = tau2;
  return m;
}

CovarianceModel CovarianceModel::spatial_exp(double sigma2, double phi, double tau2,
                                             Eigen::MatrixXd locations) {
  if (sigma2 < 0.0 || phi <= 0.0 || tau2 < 0.0)
    throw ConfigError("spatial_exp requires sigma2 >= 0, phi > 0, tau2 >= 0");
  CovarianceModel m;
  m.kind = CovKind::SpatialExp;
  m.params.resize(3);
  m.params << sigma2, phi, tau2;
  m.locations = std::move(locations);
  return m;
}

CovarianceModel CovarianceModel::spatial_matern(double sigma2, double phi, double tau2,
                                                double nu, Eigen::MatrixXd locations) {
  if (sigma2 < 0.0 || phi <= 0.0 || tau2 < 0.0)
    throw ConfigError("spatial_matern requires sigma2 >= 0, phi > 0, tau2 >= 0");
  if (nu != 0.5 && nu != 1.5 && nu != 2.5)
    throw ConfigError("spatial_matern smoothness nu must be one of 1/2, 3/2, 5/2");
  CovarianceModel m;
  m.kind = CovKind::SpatialMatern;
  m.params.resize(4);
  m.params << sigma2, phi, tau2, nu;
  m.locations = std::move(locations);
  return m;
}

PrecisionView PrecisionView::from_sparse(SpMat q, double logdet_sigma) {
  PrecisionView v;
  v.sparse_storage_ = true;
  v.sp_ = std::move(q);
  v.sp_.makeCompressed();
  v.logdet_sigma_ = logdet_sigma;
  v.n_ = static_cast<int>(v.sp_.rows());
  return v;
}

PrecisionView PrecisionView::from_dense(Eigen::MatrixXd q, double logdet_sigma) {
  PrecisionView v;
  v.sparse_storage_ = false;
  v.dn_ = std::move(q);
  v.logdet_sigma_ = logdet_sigma;
  v.n_ = static_cast<int>(v.dn_.rows());
  return v;
}

Eigen::VectorXd PrecisionView::apply(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw ConfigError("PrecisionView::apply dimension mismatch");
  if (sparse_storage_) return sp_ * x;
  return dn_ * x;
}

Eigen::MatrixXd PrecisionView::group_sums(const std::vector<int>& group, int b) const {
  if (static_cast<int>(group.size()) != n_)
    throw ConfigError("group_sums: group vector must have length n");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b, b);
  if (sparse_storage_) {
    for (int h = 0; h < n_; ++h) {
      const int gh = group[h];
      for (SpMat::InnerIterator it(sp_, h); it; ++it) {
        out(gh, group[it.col()]) += it.value();
      }
    }
  } else {
    for (int h = 0; h < n_; ++h) {
      const int gh = group[h];
      for (int l = 0; l < n_; ++l) out(gh, group[l]) += dn_(h, l);
    }
  }
  return out;
}

Eigen::VectorXd PrecisionView::row_group_sums(const std::vector<int>& rows,
                                              const std::vector<int>& group, int b) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(b);
  if (sparse_storage_) {
    for (int h : rows) {
      for (SpMat::InnerIterator it(sp_, h); it; ++it) out(group[it.col()]) += it.value();
    }
  } else {
    for (int h : rows) {
      for (int l = 0; l < n_; ++l) out(group[l]) += dn_(h, l);
    }
  }
  return out;
}

double PrecisionView::pair_sum(const std::vector<int>& rows_i,
                               const std::vector<int>& rows_j) const {
  double s = 0.0;
  if (sparse_storage_) {
    std::vector<char> in_j(n_, 0);
    for (int l : rows_j) in_j[l] = 1;
    for (int h : rows_i) {
      for (SpMat::InnerIterator it(sp_, h); it; ++it) {
        if (in_j[it.col()]) s += it.value();
      }
    }
  } else {
    for (int h : rows_i) {
      for (int l : rows_j) s += dn_(h, l);
    }
  }
  return s;
}

PrecisionView PrecisionView::scaled(double factor) const {
  if (factor <= 0.0) throw ConfigError("PrecisionView::scaled requires factor > 0");
  const double logdet = logdet_sigma_ - n_ * std::log(factor);
  if (sparse_storage_) {
    SpMat q = sp_ * factor;
    return from_sparse(std::move(q), logdet);
  }
  return from_dense(dn_ * factor, logdet);
}

Eigen::MatrixXd PrecisionView::to_dense() const {
  if (sparse_storage_) return Eigen::MatrixXd(sp_);
  return dn_;
}

PrecisionView build_ar_precision(double rho, double sigma, int n) {
  if (n < 1) throw ConfigError("build_ar_precision requires n >= 1");
  if (rho < 0.0 || rho >= 1.0) throw ConfigError("build_ar_precision requires 0 <= rho < 1");
  if (sigma <= 0.0) throw ConfigError("build_ar_precision requires sigma > 0");

  const double inv_s2 = 1.0 / (sigma * sigma);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    // (A^T A)_ii = 1 + rho^2 except the last row where the subdiagonal ends.
    const double d = (i + 1 < n) ? 1.0 + rho * rho : 1.0;
    trips.emplace_back(i, i, inv_s2 * d);
    if (rho != 0.0 && i + 1 < n) {
      trips.emplace_back(i, i + 1, -inv_s2 * rho);
      trips.emplace_back(i + 1, i, -inv_s2 * rho);
    }
  }
  PrecisionView::SpMat q(n, n);
  q.setFromTriplets(trips.begin(), trips.end());
  // |A| = 1, so log|Sigma| depends on sigma only.
  return PrecisionView::from_sparse(std::move(q), 2.0 * n * std::log(sigma));
}

double spatial_kernel(double d, double sigma2, double phi, double nu) {
  if (nu <= 0.0 || nu == 0.5) return sigma2 * std::exp(-d / phi);
  const double r = std::sqrt(2.0 * nu) * d / phi;
  if (nu == 1.5) return sigma2 * (1.0 + r) * std::exp(-r);
  if (nu == 2.5) return sigma2 * (1.0 + r + r * r / 3.0) * std::exp(-r);
  throw ConfigError("spatial_kernel: unsupported nu");
}

SpdFactor spd_factorize(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  const double scale = m.diagonal().mean();
  double jitter = 0.0;
  std::ostringstream attempts;
  for (int k = 0; k <= 7; ++k) {
    Eigen::MatrixXd work = m;
    if (k > 0) {
      jitter = scale * 1e-10 * std::pow(10.0, k - 1);  // 1e-10 .. 1e-4 of mean diag
      work.diagonal().array() += jitter;
      attempts << (k > 1 ? ", " : "") << jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      double logdet = 0.0;
      const auto& L = llt.matrixLLT();
      for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
      return SpdFactor{std::move(llt), logdet, k > 0 ? jitter : 0.0};
    }
  }
  throw NumericError("matrix not positive definite; attempted jitters: " + attempts.str());
}

Eigen::MatrixXd build_spatial_sigma(const CovarianceModel& model,
                                    const Eigen::MatrixXd& locations) {
  if (!model.spatial())
    throw ConfigError("build_spatial_sigma requires a spatial covariance kind");
  const int n = static_cast<int>(locations.rows());
  if (n < 1 || locations.cols() != 2)
    throw ConfigError("build_spatial_sigma requires n x 2 locations");
  if (!locations.allFinite())
    throw ConfigError("build_spatial_sigma: locations must be finite");
  if (n > 10000)
    throw ConfigError("build_spatial_sigma: dense storage supported up to n = 10^4");

  const double sigma2 = model.params(0);
  const double phi = model.params(1);
  const double tau2 = model.params(2);
  const double nu = model.kind == CovKind::SpatialMatern ? model.params(3) : 0.5;

  Eigen::MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i) {
    sigma(i, i) = sigma2 + tau2;
    for (int j = i + 1; j < n; ++j) {
      const double d = (locations.row(i) - locations.row(j)).norm();
      const double k = spatial_kernel(d, sigma2, phi, nu);
      sigma(i, j) = k;
      sigma(j, i) = k;
    }
  }
  return sigma;
}

SpatialCovariance build_spatial_covariance(const CovarianceModel& model,
                                           const Eigen::MatrixXd& locations) {
  const int n = static_cast<int>(locations.rows());
  Eigen::MatrixXd sigma = build_spatial_sigma(model, locations);
  SpdFactor f = spd_factorize(sigma);
  Eigen::MatrixXd inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  // Symmetrize away the solve's rounding skew.
  inv = 0.5 * (inv + inv.transpose()).eval();
  SpatialCovariance out;
  out.sigma = std::move(sigma);
  out.precision = PrecisionView::from_dense(std::move(inv), f.logdet);
  return out;
}

PrecisionView make_precision(const CovarianceModel& model, int n) {
  switch (model.kind) {
    case CovKind::IID: {
      const double sigma2 = model.params(0);
      if (sigma2 <= 0.0) throw ConfigError("make_precision: sigma2 must be > 0");
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(n);
      const double q = 1.0 / sigma2;
      for (int i = 0; i < n; ++i) trips.emplace_back(i, i, q);
      PrecisionView::SpMat m(n, n);
      m.setFromTriplets(trips.begin(), trips.end());
      return PrecisionView::from_sparse(std::move(m), n * std::log(sigma2));
    }
    case CovKind::AR1:
      return build_ar_precision(model.params(0), model.params(1), n);
    case CovKind::ARp: {
      const int p = static_cast<int>(model.params.size()) - 1;
      const double tau2 = model.params(p);
      if (tau2 <= 0.0) throw ConfigError("make_precision: arp tau2 must be > 0");
      // eta = A^-1 eps with A unit lower triangular, -a_k on the k-th subdiagonal.
      Eigen::SparseMatrix<double> a(n, n);
      std::vector<Eigen::Triplet<double>> trips;
      for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, i, 1.0);
        for (int k = 1; k <= p && i - k >= 0; ++k) {
          if (model.params(k - 1) != 0.0) trips.emplace_back(i, i - k, -model.params(k - 1));
        }
      }
      a.setFromTriplets(trips.begin(), trips.end());
      Eigen::SparseMatrix<double> q = (Eigen::SparseMatrix<double>(a.transpose()) * a) / tau2;
      PrecisionView::SpMat qr(q);
      return PrecisionView::from_sparse(std::move(qr), n * std::log(tau2));
    }
    case CovKind::SpatialExp:
    case CovKind::SpatialMatern: {
      if (model.locations.rows() != n)
        throw ConfigError("make_precision: spatial model needs locations with n rows");
      return build_spatial_covariance(model, model.locations).precision;
    }
  }
  throw ConfigError("make_precision: unknown covariance kind");
}

double blockwise_precision_sum(const PrecisionView& view,
                               const std::vector<int>& omega_i,
                               const std::vector<int>& omega_j) {
  for (int h : omega_i) {
    if (h < 0 || h >= view.n()) throw ConfigError("blockwise_precision_sum: index out of range");
  }
  for (int l : omega_j) {
    if (l < 0 || l >= view.n()) throw ConfigError("blockwise_precision_sum: index out of range");
  }
  return view.pair_sum(omega_i, omega_j);
}

}  // namespace cbartgp
