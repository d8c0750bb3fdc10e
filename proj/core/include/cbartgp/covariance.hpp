#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "cbartgp/errors.hpp"

namespace cbartgp {

enum class CovKind { IID, AR1, ARp, SpatialExp, SpatialMatern };

// Parameterized error covariance.
//
// params by kind:
//   IID            {sigma2}
//   AR1            {rho, sigma}            sigma = innovation std
//   ARp            {a_1 .. a_p, tau2}      tau2 = innovation variance
//   SpatialExp     {sigma2, phi, tau2}
//   SpatialMatern  {sigma2, phi, tau2, nu} nu in {1/2, 3/2, 5/2}
struct CovarianceModel {
  CovKind kind = CovKind::IID;
  Eigen::VectorXd params;
  Eigen::MatrixXd locations;  // n x 2, spatial kinds only

  static CovarianceModel iid(double sigma2);
  static CovarianceModel ar1(double rho, double sigma);
  static CovarianceModel arp(const Eigen::VectorXd& coeffs, double tau2);
  static CovarianceModel spatial_exp(double sigma2, double phi, double tau2,
                                     Eigen::MatrixXd locations = {});
  static CovarianceModel spatial_matern(double sigma2, double phi, double tau2, double nu,
                                        Eigen::MatrixXd locations = {});

  bool spatial() const {
    return kind == CovKind::SpatialExp || kind == CovKind::SpatialMatern;
  }
};

// Symmetric view of Sigma^-1 (sparse or dense) together with log|Sigma|.
class PrecisionView {
public:
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  PrecisionView() = default;
  static PrecisionView from_sparse(SpMat q, double logdet_sigma);
  static PrecisionView from_dense(Eigen::MatrixXd q, double logdet_sigma);

  int n() const { return n_; }
  bool is_sparse() const { return sparse_storage_; }
  double logdet_sigma() const { return logdet_sigma_; }

  // Sigma^-1 x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  // b x b matrix with entries sum_{h: group[h]=j, l: group[l]=k} q_hl,
  // group values in {0..b-1}.
  Eigen::MatrixXd group_sums(const std::vector<int>& group, int b) const;

  // Sums of q over the given rows, bucketed by group[col]; returns length b.
  Eigen::VectorXd row_group_sums(const std::vector<int>& rows,
                                 const std::vector<int>& group, int b) const;

  // sum_{h in rows_i, l in rows_j} q_hl
  double pair_sum(const std::vector<int>& rows_i, const std::vector<int>& rows_j) const;

  // Precision scaled by a positive factor c (covariance divided by c).
  PrecisionView scaled(double factor) const;

  // Materialize as dense (tests and small-n oracles).
  Eigen::MatrixXd to_dense() const;

  const SpMat& sparse_matrix() const { return sp_; }
  const Eigen::MatrixXd& dense_matrix() const { return dn_; }

private:
  bool sparse_storage_ = true;
  SpMat sp_;
  Eigen::MatrixXd dn_;
  double logdet_sigma_ = 0.0;
  int n_ = 0;
};

// Sigma^-1 = sigma^-2 A^T A with A unit-diagonal lower bidiagonal, subdiagonal -rho.
// logdet_sigma = 2 n log(sigma). Rejects rho outside [0,1) and sigma <= 0.
PrecisionView build_ar_precision(double rho, double sigma, int n);

struct SpatialCovariance {
  Eigen::MatrixXd sigma;      // K + tau2 I
  PrecisionView precision;
};

// Dense K + tau2 I for a spatial model at the given locations (no inversion).
Eigen::MatrixXd build_spatial_sigma(const CovarianceModel& model,
                                    const Eigen::MatrixXd& locations);

// Dense spatial covariance and its inverse via SPD factorization.
SpatialCovariance build_spatial_covariance(const CovarianceModel& model,
                                           const Eigen::MatrixXd& locations);

// Precision for any model kind; spatial kinds require model.locations (n x 2).
PrecisionView make_precision(const CovarianceModel& model, int n);

// sum over omega_i x omega_j of precision entries; indices are 0-based and checked.
double blockwise_precision_sum(const PrecisionView& view,
                               const std::vector<int>& omega_i,
                               const std::vector<int>& omega_j);

// Kernel value at distance d. nu <= 0 selects the plain exponential kernel
// sigma2 exp(-d/phi); Matern nu in {1/2, 3/2, 5/2} uses the closed forms with
// the sqrt(2 nu) d / phi argument, so nu = 1/2 coincides with the exponential.
double spatial_kernel(double d, double sigma2, double phi, double nu);

struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double logdet = 0.0;     // log determinant of the factorized matrix
  double jitter = 0.0;     // total diagonal jitter added
};

// Cholesky with escalating diagonal jitter: 1e-10 * mean(diag) growing x10 up
// to 1e-4 * mean(diag); throws NumericError listing the attempted sequence.
SpdFactor spd_factorize(const Eigen::MatrixXd& m);

}  // namespace cbartgp
