#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cbartgp/cbart.hpp"
#include "cbartgp/gp.hpp"

namespace cbartgp {

struct WeightRecord {
  double w = 0.0;
  GpFit gp;
  double ss_eta_w = 0.0;      // sum of squared fitted structured components
  double ss_eta_cbart = 0.0;  // sum of squared CBART residuals
  double ss_delta = 0.0;      // |ss_eta_w - ss_eta_cbart|
  CbartFit cbart;
};

struct TwoStageResult {
  std::vector<WeightRecord> records;
  int selected = -1;
  Eigen::VectorXd e0;     // y - mean(y)
  Eigen::VectorXd e_iid;  // y - f_iid
  CbartFit iid_fit;
  // training inputs retained for prediction
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd locations;
  CovKind gp_kind = CovKind::AR1;

  const WeightRecord& selected_record() const { return records.at(selected); }
};

// w (y - mean(y)) + (1 - w) (y - f_iid)
Eigen::VectorXd weighted_residuals(const Eigen::VectorXd& y, const Eigen::VectorXd& f_iid,
                                   double w);

std::vector<double> default_weights();  // {0, 0.2, 0.4, 0.6, 0.8, 1}

// Stage 1: fit the GP to each weighted residual vector; stage 2: fit CBART
// under each fitted covariance and keep the weight minimizing the variance
// mismatch |ss_eta_w - ss_eta_cbart|. Non-converged GP fits are skipped in
// the selection whenever a converged candidate exists; ties break to the
// smaller weight index. keep_all_ensembles=false drops the non-selected
// records' tree snapshots to bound memory.
TwoStageResult run_two_stage(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& locations, CovKind gp_kind,
                             const std::vector<double>& weights, const CbartConfig& config,
                             bool keep_all_ensembles = false);

struct Prediction {
  Eigen::VectorXd fhat;
  Eigen::VectorXd zhat;
  Eigen::VectorXd yhat;
};

// f_CBART(x*) + z(s*): sum-of-trees prediction plus the GP structured
// component. Spatial kinds krige on y - f_CBART; AR1 supports only
// forecasting at integer indices beyond the training range.
Prediction predict_y(const TwoStageResult& result, const Eigen::MatrixXd& x_new,
                     const Eigen::MatrixXd& s_new);

}  // namespace cbartgp
