#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cbartgp/covariance.hpp"
#include "cbartgp/rng.hpp"
#include "cbartgp/tree.hpp"

namespace cbartgp {

struct CbartConfig {
  int m = 50;           // trees
  int n_iter = 1000;    // kept draws
  int burn_in = 500;
  double alpha = 0.95;  // tree depth prior
  double beta = 2.0;
  double tau_k = 2.0;       // leaf prior scale: tau = range / (2 k sqrt(m))
  double tau_override = 0;  // > 0 overrides the calibration (standardized scale)
  double birth_prob = 0.5;
  int retry_cap = 20;
  bool estimate_sigma = false;  // iid-only sigma^2 Gibbs updates
  int sigma_nu = 3;
  double sigma_quant = 0.90;
  std::uint64_t rng_seed = 0;
  bool store_ensemble = true;    // keep per-draw tree snapshots for prediction
  bool check_invariants = false; // verify backfitting bookkeeping each update
};

struct CbartFit {
  Eigen::MatrixXd f_draws;           // kept x n, original scale
  Eigen::VectorXd posterior_mean_f;  // n
  std::vector<std::vector<Tree>> ensemble;  // kept x m, empty unless stored
  Eigen::VectorXd sigma_draws;       // kept, only when estimate_sigma
  long births_proposed = 0, births_accepted = 0;
  long deaths_proposed = 0, deaths_accepted = 0;
  double y_mid = 0.0, y_range = 1.0;

  double birth_accept_rate() const {
    return births_proposed ? double(births_accepted) / double(births_proposed) : 0.0;
  }
  double death_accept_rate() const {
    return deaths_proposed ? double(deaths_accepted) / double(deaths_proposed) : 0.0;
  }
};

// log p(R | D) marginalized over leaf means with prior N(0, tau^2 I).
// Reference evaluation; the sampler uses log_marginal_ratio instead.
double log_marginal(const Eigen::VectorXd& r, const DummyDesign& design,
                    const PrecisionView& precision, double tau);

// log of p(R | D_new) / p(R | D_cur) for a birth/death proposal, computed
// incrementally from blockwise precision sums over the affected leaves.
double log_marginal_ratio(const Eigen::VectorXd& r, const PrecisionView& precision,
                          const DummyDesign& design, const Proposal& prop, double tau);

double marginal_likelihood_ratio(const Eigen::VectorXd& r, const PrecisionView& precision,
                                 const DummyDesign& design, const Proposal& prop, double tau);

// Draw from N((Q + D'S D)^-1 D'S R, (Q + D'S D)^-1), S = Sigma^-1, Q = tau^-2 I.
Eigen::VectorXd draw_leaf_means(const Eigen::VectorXd& r, const DummyDesign& design,
                                const PrecisionView& precision, double tau, Rng& rng);

// Backfitting MCMC over m trees conditioned on the supplied precision.
CbartFit run_cbart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                   const PrecisionView& precision, const CbartConfig& config);

// Average sum-of-trees evaluation over the stored ensemble draws.
Eigen::VectorXd predict_f(const CbartFit& fit, const Eigen::MatrixXd& x_new);

namespace detail {

// D' Sigma^-1 D from the leaf assignment (no prior term).
Eigen::MatrixXd block_sums_raw(const PrecisionView& precision, const DummyDesign& design);

// Expanded raw sums after a birth/death, touching only the affected leaves.
Eigen::MatrixXd birth_a_raw(const PrecisionView& precision, const DummyDesign& design,
                            const Proposal& prop, const Eigen::MatrixXd& a_raw);
Eigen::MatrixXd death_a_raw(const Proposal& prop, const Eigen::MatrixXd& a_raw);

// Ratio given precomputed pieces; a_new_raw must match the proposal kind.
double log_ratio_from_parts(const Proposal& prop, double tau, const Eigen::MatrixXd& a_cur_raw,
                            const Eigen::MatrixXd& a_new_raw, const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& leaf_omega_sums);

}  // namespace detail

}  // namespace cbartgp
