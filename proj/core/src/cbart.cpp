#include "cbartgp/cbart.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

namespace cbartgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct SmallSpd {
  Eigen::MatrixXd inv;
  double logdet = 0.0;
};

// Factor A = raw + tau^-2 I; A is SPD for any tau > 0.
SmallSpd factor_a(const Eigen::MatrixXd& a_raw, double tau) {
  const int b = static_cast<int>(a_raw.rows());
  Eigen::MatrixXd a = a_raw;
  a.diagonal().array() += 1.0 / (tau * tau);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError("leaf-posterior matrix A failed to factorize");
  SmallSpd out;
  out.inv = llt.solve(Eigen::MatrixXd::Identity(b, b));
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < b; ++i) out.logdet += 2.0 * std::log(l(i, i));
  return out;
}

Eigen::VectorXd leaf_sums_of(const Eigen::VectorXd& v, const DummyDesign& design) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(design.b);
  for (int i = 0; i < design.n; ++i) s(design.assignment[i]) += v(i);
  return s;
}

}  // namespace

namespace detail {

Eigen::MatrixXd block_sums_raw(const PrecisionView& precision, const DummyDesign& design) {
  return precision.group_sums(design.assignment, design.b);
}

Eigen::MatrixXd birth_a_raw(const PrecisionView& precision, const DummyDesign& design,
                            const Proposal& prop, const Eigen::MatrixXd& a_raw) {
  const int b = design.b;
  const int j = prop.leaf_pos;
  // Sums over the left child's rows, grouped by the current leaves; entry j
  // holds a_LL + a_LR.
  const Eigen::VectorXd a_left = precision.row_group_sums(prop.omega_left, design.assignment, b);
  const double a_ll = precision.pair_sum(prop.omega_left, prop.omega_left);
  const double a_lr = a_left(j) - a_ll;
  const double a_rr = a_raw(j, j) - a_ll - 2.0 * a_lr;

  Eigen::MatrixXd out(b + 1, b + 1);
  auto new_index = [j](int k) { return k < j ? k : k + 1; };  // old leaf -> new position
  for (int k1 = 0; k1 < b; ++k1) {
    if (k1 == j) continue;
    for (int k2 = 0; k2 < b; ++k2) {
      if (k2 == j) continue;
      out(new_index(k1), new_index(k2)) = a_raw(k1, k2);
    }
  }
  for (int k = 0; k < b; ++k) {
    if (k == j) continue;
    const int nk = new_index(k);
    out(j, nk) = a_left(k);
    out(nk, j) = a_left(k);
    out(j + 1, nk) = a_raw(j, k) - a_left(k);
    out(nk, j + 1) = out(j + 1, nk);
  }
  out(j, j) = a_ll;
  out(j, j + 1) = a_lr;
  out(j + 1, j) = a_lr;
  out(j + 1, j + 1) = a_rr;
  return out;
}

Eigen::MatrixXd death_a_raw(const Proposal& prop, const Eigen::MatrixXd& a_raw) {
  const int b = static_cast<int>(a_raw.rows());
  const int j = prop.leaf_pos;
  auto merged = [j](int k) { return k <= j ? std::min(k, j) : (k == j + 1 ? j : k - 1); };
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b - 1, b - 1);
  for (int k1 = 0; k1 < b; ++k1) {
    for (int k2 = 0; k2 < b; ++k2) {
      out(merged(k1), merged(k2)) += a_raw(k1, k2);
    }
  }
  return out;
}

double log_ratio_from_parts(const Proposal& prop, double tau, const Eigen::MatrixXd& a_cur_raw,
                            const Eigen::MatrixXd& a_new_raw, const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& leaf_omega_sums) {
  const int j = prop.leaf_pos;
  const SmallSpd cur = factor_a(a_cur_raw, tau);
  const SmallSpd nxt = factor_a(a_new_raw, tau);

  // Per-block sums of omega = Sigma^-1 R over the finer of the two partitions.
  // coarse_of maps a finer position to its block in the coarser partition.
  const int b_fine =
      prop.kind == MoveKind::Birth ? static_cast<int>(a_new_raw.rows()) : static_cast<int>(a_cur_raw.rows());
  Eigen::VectorXd w(b_fine);
  auto coarse_of = [j](int r) { return r <= j + 1 ? std::min(r, j) : r - 1; };
  if (prop.kind == MoveKind::Birth) {
    double w_left = 0.0;
    for (int i : prop.omega_left) w_left += omega(i);
    for (int r = 0; r < b_fine; ++r) {
      if (r == j) {
        w(r) = w_left;
      } else if (r == j + 1) {
        w(r) = leaf_omega_sums(j) - w_left;
      } else {
        w(r) = leaf_omega_sums(coarse_of(r));
      }
    }
  } else {
    w = leaf_omega_sums;
  }

  // u = w' [inv(A_fine-side) - expanded inv(A_coarse-side)] w, expansion by
  // duplicating the split/merged block's rows and columns.
  double u = 0.0;
  if (prop.kind == MoveKind::Birth) {
    for (int r = 0; r < b_fine; ++r) {
      for (int c = 0; c < b_fine; ++c) {
        u += w(r) * w(c) * (nxt.inv(r, c) - cur.inv(coarse_of(r), coarse_of(c)));
      }
    }
  } else {
    for (int r = 0; r < b_fine; ++r) {
      for (int c = 0; c < b_fine; ++c) {
        u += w(r) * w(c) * (nxt.inv(coarse_of(r), coarse_of(c)) - cur.inv(r, c));
      }
    }
  }

  const double log_tau_factor = prop.kind == MoveKind::Birth ? -std::log(tau) : std::log(tau);
  return log_tau_factor + 0.5 * (cur.logdet - nxt.logdet) + 0.5 * u;
}

}  // namespace detail

double log_marginal(const Eigen::VectorXd& r, const DummyDesign& design,
                    const PrecisionView& precision, double tau) {
  if (tau <= 0.0) throw ConfigError("log_marginal requires tau > 0");
  if (static_cast<int>(r.size()) != design.n || design.n != precision.n())
    throw ConfigError("log_marginal: dimension mismatch");
  const int n = design.n;
  const int b = design.b;
  const Eigen::VectorXd omega = precision.apply(r);
  const Eigen::VectorXd s = leaf_sums_of(omega, design);
  const SmallSpd a = factor_a(detail::block_sums_raw(precision, design), tau);
  return -0.5 * n * kLog2Pi - 0.5 * precision.logdet_sigma() - b * std::log(tau) -
         0.5 * a.logdet + 0.5 * (s.dot(a.inv * s) - r.dot(omega));
}

double log_marginal_ratio(const Eigen::VectorXd& r, const PrecisionView& precision,
                          const DummyDesign& design, const Proposal& prop, double tau) {
  if (tau <= 0.0) throw ConfigError("log_marginal_ratio requires tau > 0");
  if (!prop.valid) throw ConfigError("log_marginal_ratio: invalid proposal");
  if (static_cast<int>(r.size()) != design.n || design.n != precision.n())
    throw ConfigError("log_marginal_ratio: dimension mismatch");
  const Eigen::VectorXd omega = precision.apply(r);
  const Eigen::VectorXd leaf_sums = leaf_sums_of(omega, design);
  const Eigen::MatrixXd a_cur = detail::block_sums_raw(precision, design);
  const Eigen::MatrixXd a_new = prop.kind == MoveKind::Birth
                                    ? detail::birth_a_raw(precision, design, prop, a_cur)
                                    : detail::death_a_raw(prop, a_cur);
  return detail::log_ratio_from_parts(prop, tau, a_cur, a_new, omega, leaf_sums);
}

double marginal_likelihood_ratio(const Eigen::VectorXd& r, const PrecisionView& precision,
                                 const DummyDesign& design, const Proposal& prop, double tau) {
  return std::exp(log_marginal_ratio(r, precision, design, prop, tau));
}

Eigen::VectorXd draw_leaf_means(const Eigen::VectorXd& r, const DummyDesign& design,
                                const PrecisionView& precision, double tau, Rng& rng) {
  if (tau <= 0.0) throw ConfigError("draw_leaf_means requires tau > 0");
  const int b = design.b;
  Eigen::MatrixXd a = detail::block_sums_raw(precision, design);
  a.diagonal().array() += 1.0 / (tau * tau);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError("draw_leaf_means: A failed to factorize");
  const Eigen::VectorXd s = leaf_sums_of(precision.apply(r), design);
  Eigen::VectorXd z(b);
  for (int i = 0; i < b; ++i) z(i) = rng.normal();
  // mean + U^-1 z gives covariance (U' U)^-1 = A^-1
  return llt.solve(s) + llt.matrixU().solve(z);
}

namespace {

struct TreeState {
  Tree tree;
  DummyDesign design;
  Eigen::VectorXd g;  // fitted values at training rows
};

double sd_of(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / std::max<int>(1, v.size() - 1));
}

}  // namespace

CbartFit run_cbart(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                   const PrecisionView& precision, const CbartConfig& config) {
  const int n = static_cast<int>(y.size());
  if (x.rows() != n) throw ConfigError("run_cbart: X rows must match Y length");
  if (precision.n() != n) throw ConfigError("run_cbart: precision size must match Y length");
  if (config.m < 1 || config.n_iter < 1 || config.burn_in < 0)
    throw ConfigError("run_cbart: m >= 1, n_iter >= 1, burn_in >= 0 required");
  if (config.tau_k <= 0.0 && config.tau_override <= 0.0)
    throw ConfigError("run_cbart: tau_k must be > 0");

  // Standardize Y to [-0.5, 0.5]; all sampling happens on that scale.
  const double y_min = y.minCoeff();
  const double y_max = y.maxCoeff();
  const double range = (y_max > y_min) ? (y_max - y_min) : 1.0;
  const double mid = 0.5 * (y_max + y_min);
  const Eigen::VectorXd ys = (y.array() - mid) / range;

  const double tau = config.tau_override > 0.0
                         ? config.tau_override
                         : 1.0 / (2.0 * config.tau_k * std::sqrt(static_cast<double>(config.m)));

  // Fixed-Sigma mode rescales the supplied precision; iid estimate mode runs
  // its own sigma^2 chain on the standardized data.
  PrecisionView prec = precision.scaled(range * range);
  double sig2 = 0.0, sigma_lambda = 0.0;
  if (config.estimate_sigma) {
    if (!precision.is_sparse())
      throw ConfigError("run_cbart: estimate_sigma requires an iid precision");
    const auto& q = precision.sparse_matrix();
    const double q0 = q.coeff(0, 0);
    bool iid = q.nonZeros() == n && q0 > 0.0;
    for (int h = 0; iid && h < n; ++h) {
      PrecisionView::SpMat::InnerIterator it(q, h);
      iid = it && it.col() == h && it.value() == q0 && !(++it);
    }
    if (!iid)
      throw ConfigError("run_cbart: estimate_sigma requires an iid (sigma^2 I) precision");
    // prior anchor: residual sd of a least-squares fit of y on x, falling
    // back to sd(y) when the regression is degenerate
    double shat = sd_of(ys);
    const int p = static_cast<int>(x.cols());
    if (n > p + 2) {
      Eigen::MatrixXd design(n, p + 1);
      design.col(0).setOnes();
      design.rightCols(p) = x;
      const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(ys);
      const double rss = (ys - design * beta).squaredNorm();
      const double s = std::sqrt(rss / static_cast<double>(n - p - 1));
      if (std::isfinite(s) && s > 0.0) shat = s;
    }
    sig2 = shat * shat;
    boost::math::chi_squared chi(config.sigma_nu);
    sigma_lambda = sig2 * boost::math::quantile(chi, 1.0 - config.sigma_quant) /
                   static_cast<double>(config.sigma_nu);
    prec = make_precision(CovarianceModel::iid(sig2), n);
  }

  const CutpointGrid grid = CutpointGrid::from_data(x);
  ProposeConfig pcfg;
  pcfg.alpha = config.alpha;
  pcfg.beta = config.beta;
  pcfg.birth_prob = config.birth_prob;
  pcfg.retry_cap = config.retry_cap;

  Rng rng = Rng::substream(config.rng_seed, 0);

  std::vector<TreeState> trees(config.m);
  for (auto& t : trees) {
    t.design = build_dummy(t.tree, x);
    t.g = Eigen::VectorXd::Zero(n);
  }

  const int total = config.burn_in + config.n_iter;
  CbartFit fit;
  fit.y_mid = mid;
  fit.y_range = range;
  fit.f_draws.resize(config.n_iter, n);
  if (config.estimate_sigma) fit.sigma_draws.resize(config.n_iter);
  if (config.store_ensemble) fit.ensemble.reserve(config.n_iter);

  Eigen::VectorXd partial(n), r(n);
  for (int it = 0; it < total; ++it) {
    for (int j = 0; j < config.m; ++j) {
      TreeState& st = trees[j];
      partial.setZero();
      for (int k = 0; k < config.m; ++k) {
        if (k != j) partial += trees[k].g;
      }
      r = ys - partial;

      const Eigen::VectorXd omega = prec.apply(r);
      Eigen::VectorXd leaf_sums = leaf_sums_of(omega, st.design);
      Eigen::MatrixXd a_raw = detail::block_sums_raw(prec, st.design);

      Proposal prop = propose(st.tree, st.design, x, grid, pcfg, rng);
      if (prop.valid) {
        (prop.kind == MoveKind::Birth ? fit.births_proposed : fit.deaths_proposed)++;
        Eigen::MatrixXd a_new = prop.kind == MoveKind::Birth
                                    ? detail::birth_a_raw(prec, st.design, prop, a_raw)
                                    : detail::death_a_raw(prop, a_raw);
        const double log_mr =
            detail::log_ratio_from_parts(prop, tau, a_raw, a_new, omega, leaf_sums);
        const double log_alpha = prop.log_kernel_ratio + prop.log_prior_ratio + log_mr;
        if (std::log(rng.uniform()) < log_alpha) {
          (prop.kind == MoveKind::Birth ? fit.births_accepted : fit.deaths_accepted)++;
          apply_proposal(st.tree, st.design, prop);
          a_raw = std::move(a_new);
          leaf_sums = leaf_sums_of(omega, st.design);
        }
      } else if (prop.kind == MoveKind::Birth) {
        fit.births_proposed++;
      } else {
        fit.deaths_proposed++;
      }

      // mu | T, R, Sigma
      Eigen::MatrixXd a = a_raw;
      a.diagonal().array() += 1.0 / (tau * tau);
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success)
        throw NumericError("run_cbart: A failed to factorize");
      Eigen::VectorXd z(st.design.b);
      for (int q = 0; q < st.design.b; ++q) z(q) = rng.normal();
      Eigen::VectorXd mu = llt.solve(leaf_sums) + llt.matrixU().solve(z);
      st.tree.leaf_means().assign(mu.data(), mu.data() + mu.size());
      for (int i = 0; i < n; ++i) st.g(i) = mu(st.design.assignment[i]);

      if (config.check_invariants) {
        // residual bookkeeping: r was formed from the other trees only, which
        // have not changed, so recomputing the partial sum must reproduce it
        Eigen::VectorXd fresh = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < config.m; ++k) {
          if (k != j) fresh += trees[k].g;
        }
        for (int i = 0; i < n; ++i) {
          if (ys(i) - fresh(i) != r(i))
            throw NumericError("run_cbart: backfitting residual identity violated");
          if (st.g(i) != st.tree.leaf_means()[st.design.assignment[i]])
            throw NumericError("run_cbart: fitted-value cache out of sync");
        }
      }
    }

    if (config.estimate_sigma) {
      Eigen::VectorXd resid = ys;
      for (const auto& t : trees) resid -= t.g;
      const double ss = resid.squaredNorm();
      sig2 = (config.sigma_nu * sigma_lambda + ss) / rng.chi_squared(config.sigma_nu + n);
      prec = make_precision(CovarianceModel::iid(sig2), n);
    }

    if (it >= config.burn_in) {
      const int kept = it - config.burn_in;
      Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
      for (const auto& t : trees) f += t.g;
      fit.f_draws.row(kept) = (f.array() * range + mid).matrix().transpose();
      if (config.estimate_sigma) fit.sigma_draws(kept) = std::sqrt(sig2) * range;
      if (config.store_ensemble) {
        std::vector<Tree> snap;
        snap.reserve(config.m);
        for (const auto& t : trees) snap.push_back(t.tree);
        fit.ensemble.push_back(std::move(snap));
      }
    }
  }

  fit.posterior_mean_f = fit.f_draws.colwise().mean();
  return fit;
}

Eigen::VectorXd predict_f(const CbartFit& fit, const Eigen::MatrixXd& x_new) {
  if (fit.ensemble.empty())
    throw ConfigError("predict_f: fit has no stored tree snapshots");
  const int n_new = static_cast<int>(x_new.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_new);
  for (const auto& snap : fit.ensemble) {
    for (const auto& tree : snap) {
      for (int i = 0; i < n_new; ++i) acc(i) += tree.eval(x_new, i);
    }
  }
  const double scale = fit.y_range / static_cast<double>(fit.ensemble.size());
  return (acc.array() * scale + fit.y_mid).matrix();
}

}  // namespace cbartgp
