#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <thread>

#include "cbartgp/simgen.hpp"
#include "cbartgp/twostage.hpp"
#include "artifacts.hpp"
#include "csv.hpp"

namespace cbartgp::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

CovKind gp_kind_from_string(const std::string& s) {
  if (s == "ar1") return CovKind::AR1;
  if (s == "exp") return CovKind::SpatialExp;
  if (s == "matern") return CovKind::SpatialMatern;
  throw ConfigError("unknown --gp-kind '" + s + "' (expected ar1, exp or matern)");
}

PrecisionView truth_precision(const json& truth, const LoadedData& d) {
  const CovarianceModel m0 = covariance_from_json(truth);
  if (m0.kind == CovKind::AR1) {
    return build_ar_precision(m0.params(0), m0.params(1), static_cast<int>(d.y.size()));
  }
  if (m0.spatial()) {
    if (!d.spatial) throw ConfigError("truth covariance is spatial but the data is not");
    return build_spatial_covariance(m0, d.locations).precision;
  }
  if (m0.kind == CovKind::IID) {
    return make_precision(m0, static_cast<int>(d.y.size()));
  }
  throw ConfigError("unsupported truth covariance kind for --sigma-inv-from");
}

void write_fhat_csv(const std::string& path, const LoadedData& d, const Eigen::VectorXd& fhat,
                    const Eigen::VectorXd* f_true) {
  std::vector<std::string> header;
  if (d.spatial) {
    header = {"s1", "s2", "x", "fhat"};
  } else {
    header = {"idx", "x", "fhat"};
  }
  if (f_true) header.push_back("f_true");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < d.y.size(); ++i) {
    std::vector<double> row;
    if (d.spatial) {
      row = {d.locations(i, 0), d.locations(i, 1), d.x(i, 0), fhat(i)};
    } else {
      row = {d.locations(i, 0), d.x(i, 0), fhat(i)};
    }
    if (f_true) row.push_back((*f_true)(i));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

json mcmc_to_json(const McmcOpts& o, std::uint64_t seed) {
  return json{{"m_trees", o.m}, {"n_iter", o.n_iter}, {"burn_in", o.burn_in},
              {"tau_k", o.tau_k}, {"seed", seed}};
}

}  // namespace

CbartConfig to_config(const McmcOpts& opts, std::uint64_t seed) {
  CbartConfig cfg;
  cfg.m = opts.m;
  cfg.n_iter = opts.n_iter;
  cfg.burn_in = opts.burn_in;
  cfg.tau_k = opts.tau_k;
  cfg.rng_seed = seed;
  return cfg;
}

int thread_cap(int njobs) {
  int t = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CBARTGP_THREADS")) {
    t = std::atoi(env);
  }
  return std::max(1, std::min(t, njobs));
}

void parallel_seeds(int count, const std::function<void(int)>& body) {
  const int workers = thread_cap(count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int cmd_simulate(const SimulateArgs& args) {
  const auto t0 = Clock::now();
  fs::create_directories(args.out_dir);

  SimDataset d;
  json config;
  if (args.design == "ar1") {
    d = gen_ar1_cubic(args.n, args.rho, args.sigma, args.seed);
    config = {{"design", "ar1"}, {"n", args.n}, {"rho", args.rho}, {"sigma", args.sigma}};
  } else if (args.design == "spatial") {
    d = gen_spatial(args.scenario, args.n_train, args.n_test,
                    Eigen::Vector3d(args.sigma2, args.phi, args.tau2), args.seed);
    config = {{"design", "spatial"}, {"scenario", args.scenario}, {"n_train", args.n_train},
              {"n_test", args.n_test}, {"sigma2", args.sigma2}, {"phi", args.phi},
              {"tau2", args.tau2}};
  } else {
    throw ConfigError("unknown simulate design '" + args.design + "'");
  }
  config["truth"] = covariance_to_json(d.truth);

  write_dataset(args.out_dir, d);
  write_manifest(args.out_dir, "simulate", config, args.seed, seconds_since(t0),
                 {"train.csv", "test.csv", "truth.csv"});
  std::cout << "wrote " << d.n_train << " train and " << d.n_test << " test rows to "
            << args.out_dir << "\n";
  return 0;
}

int cmd_fit(const FitArgs& args) {
  const auto t0 = Clock::now();
  fs::create_directories(args.out_dir);
  const LoadedData d = load_data_csv(args.data);
  const int n = static_cast<int>(d.y.size());

  // truth column for fhat.csv when the sibling truth.csv is available
  Eigen::VectorXd f_true;
  bool have_truth_col = false;
  const fs::path truth_path = fs::path(args.data).parent_path() / "truth.csv";
  if (fs::exists(truth_path)) {
    const CsvTable t = read_csv(truth_path.string());
    if (t.has_col("f_true") && t.n_rows() >= n) {
      f_true.resize(n);
      const int c = t.col("f_true");
      for (int i = 0; i < n; ++i) f_true(i) = t.rows[i][c];
      have_truth_col = true;
    }
  }

  json fit_json;
  fit_json["mode"] = args.mode;
  fit_json["data"] = args.data;
  fit_json["config"] = {{"mcmc", mcmc_to_json(args.mcmc, args.seed)}};
  std::vector<std::string> outputs{"fit.json", "fhat.csv", "model.json"};
  json warnings = json::array();

  if (args.mode == "cbart") {
    CbartConfig cfg = to_config(args.mcmc, args.seed);
    PrecisionView prec;
    if (args.sigma_from.empty()) {
      cfg.estimate_sigma = true;
      const double var_y = (d.y.array() - d.y.mean()).square().sum() / std::max(1, n - 1);
      prec = make_precision(CovarianceModel::iid(std::max(var_y, 1e-12)), n);
      fit_json["config"]["sigma"] = "estimated";
    } else if (args.sigma_from == "truth") {
      const fs::path manifest = fs::path(args.data).parent_path() / "manifest.json";
      if (!fs::exists(manifest))
        throw ConfigError("--sigma-inv-from truth needs manifest.json next to the data file");
      const json m = read_json_file(manifest.string());
      fit_json["config"]["sigma"] = m.at("config").at("truth");
      prec = truth_precision(m.at("config").at("truth"), d);
    } else {
      throw ConfigError("--sigma-inv-from supports only 'truth'");
    }

    const CbartFit fit = run_cbart(d.y, d.x, prec, cfg);
    fit_json["acceptance"] = {{"birth", fit.birth_accept_rate()},
                              {"death", fit.death_accept_rate()}};
    if (cfg.estimate_sigma) fit_json["sigma_posterior_mean"] = fit.sigma_draws.mean();

    write_fhat_csv((fs::path(args.out_dir) / "fhat.csv").string(), d, fit.posterior_mean_f,
                   have_truth_col ? &f_true : nullptr);
    SavedModel model;
    model.type = "cbart";
    model.spatial = d.spatial;
    model.y = d.y;
    model.x = d.x;
    model.locations = d.locations;
    model.fit = fit;
    save_model((fs::path(args.out_dir) / "model.json").string(), model);
  } else if (args.mode == "twostage") {
    const CovKind kind = gp_kind_from_string(args.gp_kind);
    if ((kind == CovKind::SpatialExp || kind == CovKind::SpatialMatern) && !d.spatial)
      throw ConfigError("spatial gp kinds need the (s1, s2, x, y) data schema");
    const std::vector<double> weights = args.weights.empty() ? default_weights() : args.weights;
    CbartConfig cfg = to_config(args.mcmc, args.seed);
    const TwoStageResult res = run_two_stage(d.y, d.x, d.locations, kind, weights, cfg);

    json table = json::array();
    for (const auto& rec : res.records) {
      table.push_back({{"w", rec.w},
                       {"theta", std::vector<double>(rec.gp.model.params.data(),
                                                     rec.gp.model.params.data() +
                                                         rec.gp.model.params.size())},
                       {"ss_eta_w", rec.ss_eta_w},
                       {"ss_eta_cbart", rec.ss_eta_cbart},
                       {"ss_delta", rec.ss_delta},
                       {"gp_converged", rec.gp.converged},
                       {"birth_accept", rec.cbart.birth_accept_rate()},
                       {"death_accept", rec.cbart.death_accept_rate()}});
      if (!rec.gp.converged) {
        warnings.push_back("gp fit did not converge at w = " + std::to_string(rec.w));
      }
    }
    fit_json["config"]["gp_kind"] = args.gp_kind;
    fit_json["config"]["weights"] = weights;
    fit_json["weights"] = table;
    fit_json["selected_k"] = res.selected;
    fit_json["selected_w"] = res.records[res.selected].w;
    fit_json["selected_theta"] = std::vector<double>(
        res.selected_record().gp.model.params.data(),
        res.selected_record().gp.model.params.data() +
            res.selected_record().gp.model.params.size());
    fit_json["interior_minimum"] =
        res.selected > 0 && res.selected + 1 < static_cast<int>(res.records.size());

    // sstable.csv mirrors the weight row / ss-delta row layout
    {
      std::vector<std::string> header{"row"};
      for (std::size_t k = 0; k < weights.size(); ++k) header.push_back("k" + std::to_string(k + 1));
      std::vector<std::vector<double>> rows(2);
      rows[0].push_back(0);  // w_k row tag
      rows[1].push_back(1);  // ss_delta row tag
      for (std::size_t k = 0; k < weights.size(); ++k) {
        rows[0].push_back(res.records[k].w);
        rows[1].push_back(res.records[k].ss_delta);
      }
      write_csv((fs::path(args.out_dir) / "sstable.csv").string(), header, rows);
      outputs.push_back("sstable.csv");
    }

    write_fhat_csv((fs::path(args.out_dir) / "fhat.csv").string(), d,
                   res.selected_record().cbart.posterior_mean_f,
                   have_truth_col ? &f_true : nullptr);

    SavedModel model;
    model.type = "twostage";
    model.spatial = d.spatial;
    model.y = d.y;
    model.x = d.x;
    model.locations = d.locations;
    model.fit = res.selected_record().cbart;
    model.has_gp = true;
    model.gp_model = res.selected_record().gp.model;
    model.iid_fit = res.iid_fit;
    model.has_iid = !res.iid_fit.ensemble.empty();
    save_model((fs::path(args.out_dir) / "model.json").string(), model);
  } else {
    throw ConfigError("fit mode must be 'cbart' or 'twostage'");
  }

  fit_json["warnings"] = warnings;
  write_json_file((fs::path(args.out_dir) / "fit.json").string(), fit_json);
  write_manifest(args.out_dir, "fit " + args.mode, fit_json["config"], args.seed,
                 seconds_since(t0), outputs);
  std::cout << "fit written to " << args.out_dir << "\n";
  return 0;
}

int cmd_predict(const PredictArgs& args) {
  const auto t0 = Clock::now();
  fs::create_directories(args.out_dir);
  const SavedModel model = load_model((fs::path(args.fit_dir) / "model.json").string());
  const LoadedData nd = load_data_csv(args.new_data);
  if (nd.spatial != model.spatial)
    throw ConfigError("new data schema does not match the fitted model's schema");

  const Eigen::VectorXd fhat = predict_f(model.fit, nd.x);
  Eigen::VectorXd zhat = Eigen::VectorXd::Zero(nd.y.size());
  if (model.type == "twostage" && model.has_gp) {
    const Eigen::VectorXd resid = model.y - model.fit.posterior_mean_f;
    if (model.gp_model.spatial()) {
      GpFit gp;
      gp.model = model.gp_model;
      zhat = krige(gp, resid, model.locations, nd.locations);
    } else if (model.gp_model.kind == CovKind::AR1) {
      const double rho = model.gp_model.params(0);
      const int n = static_cast<int>(resid.size());
      for (int i = 0; i < nd.y.size(); ++i) {
        const double h = nd.locations(i, 0) - n;
        if (h >= 1.0) zhat(i) = std::pow(rho, h) * resid(n - 1);
      }
    }
  }
  const Eigen::VectorXd yhat = fhat + zhat;

  std::vector<std::string> header;
  if (nd.spatial) {
    header = {"s1", "s2", "x", "fhat", "zhat", "yhat"};
  } else {
    header = {"idx", "x", "fhat", "zhat", "yhat"};
  }
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < nd.y.size(); ++i) {
    std::vector<double> row;
    if (nd.spatial) {
      row = {nd.locations(i, 0), nd.locations(i, 1), nd.x(i, 0), fhat(i), zhat(i), yhat(i)};
    } else {
      row = {nd.locations(i, 0), nd.x(i, 0), fhat(i), zhat(i), yhat(i)};
    }
    rows.push_back(std::move(row));
  }
  write_csv((fs::path(args.out_dir) / "predictions.csv").string(), header, rows);

  json config{{"fit_dir", args.fit_dir}, {"new_data", args.new_data}};
  const double mse_y = mse(yhat, nd.y);
  std::cout << "MSE(yhat) = " << mse_y << "\n";
  config["mse_yhat"] = mse_y;
  if (model.has_iid) {
    const double mse_iid = mse(predict_f(model.iid_fit, nd.x), nd.y);
    std::cout << "MSE(yhat, iid-BART baseline) = " << mse_iid << "\n";
    config["mse_yhat_iid_baseline"] = mse_iid;
  }
  write_manifest(args.out_dir, "predict", config, 0, seconds_since(t0), {"predictions.csv"});
  return 0;
}

Fig2Seed run_fig2_seed(std::uint64_t seed, const McmcOpts& opts) {
  const SimDataset d = gen_ar1_cubic(200, 0.8, 0.1, seed);
  CbartConfig cfg = to_config(opts, seed);
  cfg.store_ensemble = false;

  const CbartFit cbart = run_cbart(d.y, d.x, build_ar_precision(0.8, 0.1, 200), cfg);
  CbartConfig iid_cfg = cfg;
  iid_cfg.estimate_sigma = true;
  const CbartFit bart =
      run_cbart(d.y, d.x, make_precision(CovarianceModel::iid(1.0), 200), iid_cfg);

  Fig2Seed out;
  out.mse_cbart = mse(cbart.posterior_mean_f, d.f_true);
  out.mse_bart = mse(bart.posterior_mean_f, d.f_true);
  return out;
}

Sec32Seed run_sec32_seed(std::uint64_t seed, const McmcOpts& opts) {
  const SimDataset d = gen_ar1_cubic(200, 0.8, 0.1, seed);
  CbartConfig cfg = to_config(opts, seed);
  cfg.store_ensemble = false;
  const TwoStageResult res =
      run_two_stage(d.y, d.x, d.locations, CovKind::AR1, default_weights(), cfg);

  Sec32Seed out;
  out.w = res.selected_record().w;
  out.rho_hat = res.selected_record().gp.model.params(0);
  out.sigma_hat = res.selected_record().gp.model.params(1);
  for (const auto& rec : res.records) {
    out.weights.push_back(rec.w);
    out.ss_delta.push_back(rec.ss_delta);
  }
  return out;
}

Sim1dSeed run_sim1d_seed(std::uint64_t seed, const McmcOpts& opts) {
  const SimDataset d = gen_ar1_cubic(200, 0.8, 0.1, seed);
  CbartConfig cfg = to_config(opts, seed);
  cfg.store_ensemble = false;
  const TwoStageResult res =
      run_two_stage(d.y, d.x, d.locations, CovKind::AR1, default_weights(), cfg);

  Sim1dSeed out;
  out.mse_twostage = mse(res.selected_record().cbart.posterior_mean_f, d.f_true);
  out.mse_bart = mse(res.iid_fit.posterior_mean_f, d.f_true);
  return out;
}

SpatialSeed run_spatial_seed(int scenario, std::uint64_t seed, const McmcOpts& opts) {
  const SimDataset d = gen_spatial(scenario, 200, 100, Eigen::Vector3d(3.0, 6.0, 1.0), seed);
  const Eigen::VectorXd y_train = d.y_train();
  const Eigen::MatrixXd x_train = d.x_train();
  const Eigen::MatrixXd loc_train = d.loc_train();

  CbartConfig cfg = to_config(opts, seed);
  cfg.store_ensemble = true;
  const TwoStageResult res =
      run_two_stage(y_train, x_train, loc_train, CovKind::SpatialExp, default_weights(), cfg);

  SpatialSeed out;
  const Eigen::VectorXd f_true_train = d.f_true.head(d.n_train);
  out.mse_f_cbart = mse(res.selected_record().cbart.posterior_mean_f, f_true_train);
  out.mse_f_bart = mse(res.iid_fit.posterior_mean_f, f_true_train);

  const Prediction pred = predict_y(res, d.x_test(), d.loc_test());
  out.mse_y_cbartgp = mse(pred.yhat, d.y_test());

  // prediction baseline: iid fit on (x, s1, s2) evaluated at the test points
  Eigen::MatrixXd xs_train(d.n_train, 3), xs_test(d.n_test, 3);
  xs_train << x_train, loc_train;
  xs_test << d.x_test(), d.loc_test();
  CbartConfig bart_cfg = to_config(opts, splitmix64(seed ^ 0xBA5EBA11ull));
  bart_cfg.estimate_sigma = true;
  bart_cfg.store_ensemble = true;
  const double var_y = (y_train.array() - y_train.mean()).square().sum() /
                       std::max<int>(1, d.n_train - 1);
  const CbartFit bart_xs = run_cbart(
      y_train, xs_train, make_precision(CovarianceModel::iid(std::max(var_y, 1e-12)), d.n_train),
      bart_cfg);
  out.mse_y_bart = mse(predict_f(bart_xs, xs_test), d.y_test());
  return out;
}

int cmd_replicate(const ReplicateArgs& args) {
  const auto t0 = Clock::now();
  fs::create_directories(args.out_dir);
  const int r = args.seeds;

  json report;
  report["experiment"] = args.experiment;
  report["seeds"] = r;
  report["base_seed"] = args.seed;
  std::vector<std::vector<double>> box_rows;
  std::vector<std::string> box_header{"seed", "metric", "value"};
  json per_seed = json::array();

  // metric ids in boxplot.csv: 0 mse_f model A, 1 mse_f model B, 2 mse_y A, 3 mse_y B
  if (args.experiment == "fig2") {
    std::vector<Fig2Seed> results(r);
    parallel_seeds(r, [&](int i) { results[i] = run_fig2_seed(args.seed + i, args.mcmc); });
    std::vector<double> mse_c, mse_b;
    for (int i = 0; i < r; ++i) {
      mse_c.push_back(results[i].mse_cbart);
      mse_b.push_back(results[i].mse_bart);
      per_seed.push_back({{"seed", args.seed + i}, {"mse_f_cbart", results[i].mse_cbart},
                          {"mse_f_bart", results[i].mse_bart}});
      box_rows.push_back({double(args.seed + i), 0, results[i].mse_cbart});
      box_rows.push_back({double(args.seed + i), 1, results[i].mse_bart});
    }
    report["models"] = {"cbart_true_sigma", "bart_iid"};
    report["mean_mse_f"] = {{"cbart_true_sigma", mean(mse_c)}, {"bart_iid", mean(mse_b)}};
    report["median_mse_f"] = {{"cbart_true_sigma", median(mse_c)}, {"bart_iid", median(mse_b)}};
    report["mse_ratio_cbart_over_bart"] = mean(mse_c) / mean(mse_b);
    std::cout << "fig2: mean MSE(f) cbart " << mean(mse_c) << " vs bart " << mean(mse_b)
              << " (ratio " << mean(mse_c) / mean(mse_b) << ")\n";
  } else if (args.experiment == "sec32") {
    std::vector<Sec32Seed> results(r);
    parallel_seeds(r, [&](int i) { results[i] = run_sec32_seed(args.seed + i, args.mcmc); });
    int within = 0;
    for (int i = 0; i < r; ++i) {
      const bool ok = std::abs(results[i].rho_hat - 0.8) <= 0.15 &&
                      std::abs(results[i].sigma_hat - 0.1) <= 0.05;
      within += ok;
      per_seed.push_back({{"seed", args.seed + i}, {"w", results[i].w},
                          {"rho_hat", results[i].rho_hat}, {"sigma_hat", results[i].sigma_hat},
                          {"ss_delta", results[i].ss_delta}, {"within_tolerance", ok}});
      for (std::size_t k = 0; k < results[i].ss_delta.size(); ++k) {
        box_rows.push_back({double(args.seed + i), results[i].weights[k],
                            results[i].ss_delta[k]});
      }
    }
    box_header = {"seed", "w", "ss_delta"};
    report["fraction_within_tolerance"] = double(within) / double(r);
    std::cout << "sec32: " << within << "/" << r << " seeds recover theta within tolerance\n";
    if (r == 1) {
      std::cout << "  w:       ";
      for (double w : results[0].weights) std::cout << w << " ";
      std::cout << "\n  ss_delta:";
      for (double s : results[0].ss_delta) std::cout << " " << s;
      std::cout << "\n  selected w = " << results[0].w << ", theta = {" << results[0].rho_hat
                << ", " << results[0].sigma_hat << "}\n";
    }
  } else if (args.experiment == "sim1d") {
    std::vector<Sim1dSeed> results(r);
    parallel_seeds(r, [&](int i) { results[i] = run_sim1d_seed(args.seed + i, args.mcmc); });
    std::vector<double> mse_t, mse_b;
    for (int i = 0; i < r; ++i) {
      mse_t.push_back(results[i].mse_twostage);
      mse_b.push_back(results[i].mse_bart);
      per_seed.push_back({{"seed", args.seed + i}, {"mse_f_cbartgp", results[i].mse_twostage},
                          {"mse_f_bart", results[i].mse_bart}});
      box_rows.push_back({double(args.seed + i), 0, results[i].mse_twostage});
      box_rows.push_back({double(args.seed + i), 1, results[i].mse_bart});
    }
    report["models"] = {"cbartgp_twostage", "bart_iid"};
    report["mean_mse_f"] = {{"cbartgp_twostage", mean(mse_t)}, {"bart_iid", mean(mse_b)}};
    report["median_mse_f"] = {{"cbartgp_twostage", median(mse_t)}, {"bart_iid", median(mse_b)}};
    std::cout << "sim1d: mean MSE(f) cbart-gp " << mean(mse_t) << " vs bart " << mean(mse_b)
              << "\n";
  } else if (args.experiment == "spatial") {
    std::vector<SpatialSeed> results(r);
    parallel_seeds(
        r, [&](int i) { results[i] = run_spatial_seed(args.scenario, args.seed + i, args.mcmc); });
    std::vector<double> est_red, pred_red;
    for (int i = 0; i < r; ++i) {
      const auto& s = results[i];
      est_red.push_back((s.mse_f_bart - s.mse_f_cbart) / s.mse_f_bart);
      pred_red.push_back((s.mse_y_bart - s.mse_y_cbartgp) / s.mse_y_bart);
      per_seed.push_back({{"seed", args.seed + i},
                          {"mse_f_cbart", s.mse_f_cbart},
                          {"mse_f_bart", s.mse_f_bart},
                          {"mse_y_cbartgp", s.mse_y_cbartgp},
                          {"mse_y_bart", s.mse_y_bart}});
      box_rows.push_back({double(args.seed + i), 0, s.mse_f_cbart});
      box_rows.push_back({double(args.seed + i), 1, s.mse_f_bart});
      box_rows.push_back({double(args.seed + i), 2, s.mse_y_cbartgp});
      box_rows.push_back({double(args.seed + i), 3, s.mse_y_bart});
    }
    report["scenario"] = args.scenario;
    report["median_estimation_mse_reduction"] = median(est_red);
    report["median_prediction_mse_reduction"] = median(pred_red);
    std::cout << "spatial scenario " << args.scenario << ": median estimation MSE reduction "
              << 100.0 * median(est_red) << "%, median prediction MSE reduction "
              << 100.0 * median(pred_red) << "%\n";
  } else {
    throw ConfigError("unknown experiment '" + args.experiment +
                      "' (expected fig2, sec32, sim1d or spatial)");
  }

  report["per_seed"] = per_seed;
  write_json_file((fs::path(args.out_dir) / "report.json").string(), report);
  write_csv((fs::path(args.out_dir) / "boxplot.csv").string(), box_header, box_rows);

  json config{{"experiment", args.experiment}, {"seeds", r}, {"scenario", args.scenario},
              {"mcmc", mcmc_to_json(args.mcmc, args.seed)}};
  write_manifest(args.out_dir, "replicate", config, args.seed, seconds_since(t0),
                 {"report.json", "boxplot.csv"});
  return 0;
}

}  // namespace cbartgp::cli
