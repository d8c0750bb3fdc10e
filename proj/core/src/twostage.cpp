#include "cbartgp/twostage.hpp"

#include <cmath>

namespace cbartgp {

Eigen::VectorXd weighted_residuals(const Eigen::VectorXd& y, const Eigen::VectorXd& f_iid,
                                   double w) {
  if (w < 0.0 || w > 1.0) throw ConfigError("weighted_residuals requires 0 <= w <= 1");
  if (y.size() != f_iid.size()) throw ConfigError("weighted_residuals: size mismatch");
  const double ybar = y.mean();
  return w * (y.array() - ybar).matrix() + (1.0 - w) * (y - f_iid);
}

std::vector<double> default_weights() { return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}; }

TwoStageResult run_two_stage(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& locations, CovKind gp_kind,
                             const std::vector<double>& weights, const CbartConfig& config,
                             bool keep_all_ensembles) {
  const int n = static_cast<int>(y.size());
  if (weights.empty()) throw ConfigError("run_two_stage: weights must be nonempty");
  for (double w : weights) {
    if (w < 0.0 || w > 1.0) throw ConfigError("run_two_stage: weights must lie in [0, 1]");
  }

  TwoStageResult res;
  res.y = y;
  res.x = x;
  res.locations = locations;
  res.gp_kind = gp_kind;

  // f_iid: CBART in iid mode with sigma^2 updates, i.e. plain BART.
  {
    CbartConfig iid_cfg = config;
    iid_cfg.estimate_sigma = true;
    iid_cfg.store_ensemble = false;
    const double var_y = (y.array() - y.mean()).square().sum() / std::max(1, n - 1);
    res.iid_fit = run_cbart(y, x, make_precision(CovarianceModel::iid(std::max(var_y, 1e-12)), n),
                            iid_cfg);
  }
  res.e0 = (y.array() - y.mean()).matrix();
  res.e_iid = y - res.iid_fit.posterior_mean_f;

  res.records.reserve(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    WeightRecord rec;
    rec.w = weights[k];
    const Eigen::VectorXd e_w = weighted_residuals(y, res.iid_fit.posterior_mean_f, rec.w);
    rec.gp = fit_gp_mle(e_w, gp_kind, locations);
    rec.ss_eta_w = rec.gp.fitted_struct.squaredNorm();

    const PrecisionView prec = make_precision(rec.gp.model, n);
    // one shared stage-two seed: records with equal weights stay identical
    CbartConfig cfg_k = config;
    cfg_k.estimate_sigma = false;
    cfg_k.rng_seed = splitmix64(config.rng_seed ^ 0xC0B51AD5ull);
    rec.cbart = run_cbart(y, x, prec, cfg_k);
    rec.ss_eta_cbart = (y - rec.cbart.posterior_mean_f).squaredNorm();
    rec.ss_delta = std::abs(rec.ss_eta_w - rec.ss_eta_cbart);
    res.records.push_back(std::move(rec));
  }

  // argmin of ss_delta among converged GP fits when any converged; ties keep
  // the smaller index
  bool any_converged = false;
  for (const auto& r : res.records) any_converged = any_converged || r.gp.converged;
  for (std::size_t k = 0; k < res.records.size(); ++k) {
    if (any_converged && !res.records[k].gp.converged) continue;
    if (res.selected < 0 || res.records[k].ss_delta < res.records[res.selected].ss_delta) {
      res.selected = static_cast<int>(k);
    }
  }

  if (!keep_all_ensembles) {
    for (std::size_t k = 0; k < res.records.size(); ++k) {
      if (static_cast<int>(k) != res.selected) {
        res.records[k].cbart.ensemble.clear();
        res.records[k].cbart.ensemble.shrink_to_fit();
      }
    }
  }
  return res;
}

Prediction predict_y(const TwoStageResult& result, const Eigen::MatrixXd& x_new,
                     const Eigen::MatrixXd& s_new) {
  if (result.selected < 0) throw ConfigError("predict_y: no selected record");
  const WeightRecord& rec = result.selected_record();

  Prediction pred;
  pred.fhat = predict_f(rec.cbart, x_new);
  const Eigen::VectorXd resid = result.y - rec.cbart.posterior_mean_f;

  if (rec.gp.model.spatial()) {
    if (s_new.cols() != 2) throw ConfigError("predict_y: spatial prediction needs n x 2 locations");
    pred.zhat = krige(rec.gp, resid, result.locations, s_new);
  } else if (rec.gp.model.kind == CovKind::AR1) {
    // AR(1) forecast: rho^h times the last residual, h steps past the end.
    const double rho = rec.gp.model.params(0);
    const int n = static_cast<int>(resid.size());
    pred.zhat.resize(s_new.rows());
    for (int i = 0; i < s_new.rows(); ++i) {
      const double h = s_new(i, 0) - static_cast<double>(n);
      if (h < 1.0)
        throw ConfigError("predict_y: AR1 prediction is supported only beyond the training range");
      pred.zhat(i) = std::pow(rho, h) * resid(n - 1);
    }
  } else {
    throw ConfigError("predict_y: unsupported label type for the selected GP");
  }

  pred.yhat = pred.fhat + pred.zhat;
  return pred;
}

}  // namespace cbartgp
