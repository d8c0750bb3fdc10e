#pragma once

// Reference implementations used only by tests. These deliberately take the
// naive dense route so they stay independent of the library's computation
// paths.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cbartgp/cbart.hpp"
#include "cbartgp/covariance.hpp"
#include "cbartgp/rng.hpp"
#include "cbartgp/tree.hpp"

namespace oracle {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline Eigen::MatrixXd dense_dummy(const cbartgp::DummyDesign& d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d.n, d.b);
  for (int i = 0; i < d.n; ++i) m(i, d.assignment[i]) = 1.0;
  return m;
}

// Covariance recovered by dense inversion of the precision.
inline Eigen::MatrixXd sigma_from_precision(const cbartgp::PrecisionView& v) {
  return v.to_dense().inverse();
}

inline double mvn_logpdf_zero_mean(const Eigen::VectorXd& r, const Eigen::MatrixXd& sigma) {
  const int n = static_cast<int>(r.size());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  return -0.5 * (n * kLog2Pi + logdet + r.dot(llt.solve(r)));
}

// Gaussian marginalization of the leaf means: log N(R; 0, Sigma + tau^2 D D').
inline double log_marginal_oracle(const Eigen::VectorXd& r, const cbartgp::DummyDesign& d,
                                  const cbartgp::PrecisionView& prec, double tau) {
  const Eigen::MatrixXd dd = dense_dummy(d);
  return mvn_logpdf_zero_mean(
      r, sigma_from_precision(prec) + tau * tau * dd * dd.transpose());
}

// Classical iid-BART leaf contribution to the log marginal, dropping terms
// that cancel in birth/death ratios.
inline double iid_leaf_lil(double n, double sum_r, double sigma2, double tau2) {
  const double t = 1.0 + n * tau2 / sigma2;
  return -0.5 * std::log(t) + 0.5 * tau2 * sum_r * sum_r / (sigma2 * sigma2 * t);
}

inline double iid_birth_log_ratio(const cbartgp::DummyDesign& d, const cbartgp::Proposal& p,
                                  const Eigen::VectorXd& r, double sigma2, double tau) {
  const double tau2 = tau * tau;
  double s_left = 0.0, s_right = 0.0;
  for (int i : p.omega_left) s_left += r(i);
  for (int i : p.omega_right) s_right += r(i);
  const double nl = static_cast<double>(p.omega_left.size());
  const double nr = static_cast<double>(p.omega_right.size());
  return iid_leaf_lil(nl, s_left, sigma2, tau2) + iid_leaf_lil(nr, s_right, sigma2, tau2) -
         iid_leaf_lil(nl + nr, s_left + s_right, sigma2, tau2);
}

// Dense AR(1) covariance sigma^2 A^-1 A^-T built by explicit inversion.
inline Eigen::MatrixXd ar1_sigma_dense(double rho, double sigma, int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i < n; ++i) a(i, i - 1) = -rho;
  const Eigen::MatrixXd ainv = a.inverse();
  return sigma * sigma * ainv * ainv.transpose();
}

// Grow a tree with k random accepted births.
inline void grow_random(cbartgp::Tree& tree, cbartgp::DummyDesign& design,
                        const Eigen::MatrixXd& x, const cbartgp::CutpointGrid& grid, int births,
                        cbartgp::Rng& rng) {
  cbartgp::ProposeConfig cfg;
  cfg.birth_prob = 1.0;
  cfg.min_leaf = 1;
  for (int i = 0; i < births; ++i) {
    cbartgp::Proposal p = cbartgp::propose(tree, design, x, grid, cfg, rng);
    if (p.valid) cbartgp::apply_proposal(tree, design, p);
  }
}

inline Eigen::MatrixXd random_matrix(int n, int p, cbartgp::Rng& rng, double lo = 0.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.uniform(lo, hi);
  }
  return x;
}

inline Eigen::VectorXd random_vector(int n, cbartgp::Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

struct PermutedInstance {
  cbartgp::DummyDesign design;
  Eigen::VectorXd r;
  cbartgp::PrecisionView precision;
  cbartgp::Proposal proposal;
};

// Apply a permutation (perm[k] = original index at position k) to the whole
// (design, R, precision, proposal) instance.
inline PermutedInstance permute_instance(const std::vector<int>& perm,
                                         const cbartgp::DummyDesign& design,
                                         const Eigen::VectorXd& r,
                                         const cbartgp::PrecisionView& precision,
                                         const cbartgp::Proposal& prop) {
  const int n = design.n;
  std::vector<int> inv(n);
  for (int k = 0; k < n; ++k) inv[perm[k]] = k;

  PermutedInstance out;
  out.design.n = n;
  out.design.b = design.b;
  out.design.assignment.resize(n);
  out.design.omega.assign(design.b, {});
  for (int k = 0; k < n; ++k) {
    const int leaf = design.assignment[perm[k]];
    out.design.assignment[k] = leaf;
    out.design.omega[leaf].push_back(k);
  }

  out.r.resize(n);
  for (int k = 0; k < n; ++k) out.r(k) = r(perm[k]);

  const Eigen::MatrixXd q = precision.to_dense();
  Eigen::MatrixXd qp(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) qp(k, l) = q(perm[k], perm[l]);
  }
  out.precision = cbartgp::PrecisionView::from_dense(qp, precision.logdet_sigma());

  out.proposal = prop;
  out.proposal.omega_left.clear();
  out.proposal.omega_right.clear();
  for (int i : prop.omega_left) out.proposal.omega_left.push_back(inv[i]);
  for (int i : prop.omega_right) out.proposal.omega_right.push_back(inv[i]);
  std::sort(out.proposal.omega_left.begin(), out.proposal.omega_left.end());
  std::sort(out.proposal.omega_right.begin(), out.proposal.omega_right.end());
  return out;
}

inline double lag1_autocorr(const Eigen::VectorXd& e) {
  const int n = static_cast<int>(e.size());
  const double mean = e.mean();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = e(i) - mean;
    den += d * d;
    if (i + 1 < n) num += d * (e(i + 1) - mean);
  }
  return num / den;
}

}  // namespace oracle
