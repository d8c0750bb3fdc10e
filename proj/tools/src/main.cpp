#include <CLI11.hpp>
#include <iostream>

#include "cbartgp/errors.hpp"
#include "cbartgp/version.hpp"
#include "commands.hpp"

using namespace cbartgp;
using namespace cbartgp::cli;

namespace {

void add_mcmc_options(CLI::App* app, McmcOpts& opts, std::uint64_t& seed) {
  app->add_option("--m-trees", opts.m, "Number of trees")->check(CLI::PositiveNumber);
  app->add_option("--n-iter", opts.n_iter, "Kept MCMC draws")->check(CLI::PositiveNumber);
  app->add_option("--burn-in", opts.burn_in, "Discarded MCMC draws")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--tau-k", opts.tau_k, "Leaf prior calibration factor k")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", seed, "RNG seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CBART-GP: correlated BART with a Gaussian process"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // simulate
  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->require_subcommand(1);
  CLI::App* sim_ar1 = simulate->add_subcommand("ar1", "Cubic trend with AR(1) errors");
  sim_ar1->add_option("--n", sim.n)->check(CLI::PositiveNumber);
  sim_ar1->add_option("--rho", sim.rho)->check(CLI::Range(0.0, 0.999));
  sim_ar1->add_option("--sigma", sim.sigma)->check(CLI::PositiveNumber);
  sim_ar1->add_option("--seed", sim.seed);
  sim_ar1->add_option("--out-dir", sim.out_dir);
  CLI::App* sim_sp = simulate->add_subcommand("spatial", "Cubic trend plus a spatial field");
  sim_sp->add_option("--scenario", sim.scenario)->check(CLI::Range(1, 3));
  sim_sp->add_option("--n-train", sim.n_train)->check(CLI::PositiveNumber);
  sim_sp->add_option("--n-test", sim.n_test)->check(CLI::NonNegativeNumber);
  sim_sp->add_option("--sigma2", sim.sigma2)->check(CLI::NonNegativeNumber);
  sim_sp->add_option("--phi", sim.phi)->check(CLI::PositiveNumber);
  sim_sp->add_option("--tau2", sim.tau2)->check(CLI::NonNegativeNumber);
  sim_sp->add_option("--seed", sim.seed);
  sim_sp->add_option("--out-dir", sim.out_dir);

  // fit
  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model to a dataset");
  fit_cmd->require_subcommand(1);
  CLI::App* fit_cbart = fit_cmd->add_subcommand("cbart", "CBART under iid or a fixed covariance");
  fit_cbart->add_option("--data", fit.data, "Path to a train.csv")->required();
  fit_cbart->add_option("--sigma-inv-from", fit.sigma_from,
                        "'truth' conditions on the dataset's generative covariance");
  fit_cbart->add_option("--out-dir", fit.out_dir);
  add_mcmc_options(fit_cbart, fit.mcmc, fit.seed);
  CLI::App* fit_ts = fit_cmd->add_subcommand("twostage", "Two-stage CBART-GP");
  fit_ts->add_option("--data", fit.data, "Path to a train.csv")->required();
  fit_ts->add_option("--gp-kind", fit.gp_kind, "ar1, exp or matern");
  fit_ts->add_option("--weights", fit.weights, "Residual weight grid")->delimiter(',');
  fit_ts->add_option("--out-dir", fit.out_dir);
  add_mcmc_options(fit_ts, fit.mcmc, fit.seed);

  // predict
  PredictArgs pred;
  CLI::App* predict = app.add_subcommand("predict", "Predict at new points from a saved fit");
  predict->add_option("--fit-dir", pred.fit_dir, "Directory holding model.json")->required();
  predict->add_option("--new-data", pred.new_data, "CSV of new points")->required();
  predict->add_option("--out-dir", pred.out_dir);

  // replicate
  ReplicateArgs rep;
  CLI::App* replicate = app.add_subcommand("replicate", "Run a seeded replication experiment");
  replicate->add_option("experiment", rep.experiment, "fig2, sec32, sim1d or spatial")
      ->required();
  replicate->add_option("--seeds", rep.seeds, "Number of replicates")->check(CLI::Range(1, 100));
  replicate->add_option("--scenario", rep.scenario)->check(CLI::Range(1, 3));
  replicate->add_option("--out-dir", rep.out_dir);
  add_mcmc_options(replicate, rep.mcmc, rep.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) {
      sim.design = sim_ar1->parsed() ? "ar1" : "spatial";
      return cmd_simulate(sim);
    }
    if (fit_cmd->parsed()) {
      fit.mode = fit_cbart->parsed() ? "cbart" : "twostage";
      return cmd_fit(fit);
    }
    if (predict->parsed()) return cmd_predict(pred);
    if (replicate->parsed()) return cmd_replicate(rep);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
