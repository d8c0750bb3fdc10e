#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "cbartgp/cbart.hpp"
#include "cbartgp/covariance.hpp"
#include "cbartgp/simgen.hpp"
#include "cbartgp/twostage.hpp"

namespace cbartgp::cli {

using nlohmann::json;

// Every output directory gets exactly one manifest describing the resolved
// run; rerunning with the same manifest reproduces the same numbers.
void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    std::uint64_t seed, double wall_seconds,
                    const std::vector<std::string>& outputs);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

struct LoadedData {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd locations;  // n x 1 index column or n x 2 coordinates
  bool spatial = false;
};

// Accepts the two dataset schemas: (idx, x, y) and (s1, s2, x, y).
LoadedData load_data_csv(const std::string& path);

// train.csv / test.csv / truth.csv under dir.
void write_dataset(const std::string& dir, const SimDataset& d);

json covariance_to_json(const CovarianceModel& m);
CovarianceModel covariance_from_json(const json& j);

json ensemble_to_json(const std::vector<std::vector<Tree>>& ensemble);
std::vector<std::vector<Tree>> ensemble_from_json(const json& j);

// Everything cmd_predict needs from a finished fit.
struct SavedModel {
  std::string type;  // "cbart" or "twostage"
  bool spatial = false;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd locations;
  CbartFit fit;               // selected fit (ensemble + scaling + posterior mean)
  bool has_gp = false;
  CovarianceModel gp_model;
  CbartFit iid_fit;           // baseline, present for two-stage models
  bool has_iid = false;
};

void save_model(const std::string& path, const SavedModel& m);
SavedModel load_model(const std::string& path);

}  // namespace cbartgp::cli
