#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbartgp/cbart.hpp"

namespace cbartgp::cli {

struct McmcOpts {
  int m = 50;
  int n_iter = 1000;
  int burn_in = 500;
  double tau_k = 2.0;
};

CbartConfig to_config(const McmcOpts& opts, std::uint64_t seed);

struct SimulateArgs {
  std::string design;  // "ar1" | "spatial"
  int n = 200;
  double rho = 0.8;
  double sigma = 0.1;
  int scenario = 3;
  int n_train = 200;
  int n_test = 100;
  double sigma2 = 3.0;
  double phi = 6.0;
  double tau2 = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};
int cmd_simulate(const SimulateArgs& args);

struct FitArgs {
  std::string mode;  // "cbart" | "twostage"
  std::string data;
  std::string sigma_from;       // "" or "truth"
  std::string gp_kind = "ar1";  // ar1 | exp | matern
  std::vector<double> weights;  // empty selects the default grid
  McmcOpts mcmc;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};
int cmd_fit(const FitArgs& args);

struct PredictArgs {
  std::string fit_dir;
  std::string new_data;
  std::string out_dir = "out";
};
int cmd_predict(const PredictArgs& args);

struct ReplicateArgs {
  std::string experiment;  // fig2 | sec32 | sim1d | spatial
  int seeds = 20;
  std::uint64_t seed = 1;
  int scenario = 3;
  McmcOpts mcmc;
  std::string out_dir = "out";
};
int cmd_replicate(const ReplicateArgs& args);

// Per-seed experiment pipelines; the replicate command and the acceptance
// suite share these.
struct Fig2Seed {
  double mse_cbart = 0.0;  // f fitted under the true covariance
  double mse_bart = 0.0;   // iid fit
};
Fig2Seed run_fig2_seed(std::uint64_t seed, const McmcOpts& opts);

struct Sec32Seed {
  double w = 0.0;
  double rho_hat = 0.0;
  double sigma_hat = 0.0;
  std::vector<double> weights;
  std::vector<double> ss_delta;
};
Sec32Seed run_sec32_seed(std::uint64_t seed, const McmcOpts& opts);

struct Sim1dSeed {
  double mse_twostage = 0.0;
  double mse_bart = 0.0;
};
Sim1dSeed run_sim1d_seed(std::uint64_t seed, const McmcOpts& opts);

struct SpatialSeed {
  double mse_f_cbart = 0.0;   // estimation on the training split
  double mse_f_bart = 0.0;
  double mse_y_cbartgp = 0.0;  // prediction on the test split
  double mse_y_bart = 0.0;     // bart fit on (x, s1, s2)
};
SpatialSeed run_spatial_seed(int scenario, std::uint64_t seed, const McmcOpts& opts);

// Worker count: CBARTGP_THREADS caps it, hardware concurrency is the default.
int thread_cap(int njobs);
void parallel_seeds(int count, const std::function<void(int)>& body);

}  // namespace cbartgp::cli
