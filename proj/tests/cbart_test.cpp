#include <doctest.h>

#include "cbartgp/cbart.hpp"
#include "cbartgp/simgen.hpp"
#include "oracles.hpp"

using namespace cbartgp;

namespace {

struct Instance {
  Eigen::MatrixXd x;
  Tree tree;
  DummyDesign design;
  Eigen::VectorXd r;
  PrecisionView precision;
  CutpointGrid grid;
};

Instance random_instance(int n, int max_births, Rng& rng, bool spatial_sigma = false) {
  Instance inst;
  inst.x = oracle::random_matrix(n, 2, rng);
  inst.grid = CutpointGrid::from_data(inst.x);
  inst.design = build_dummy(inst.tree, inst.x);
  oracle::grow_random(inst.tree, inst.design, inst.x, inst.grid, max_births, rng);
  inst.r = oracle::random_vector(n, rng);
  if (spatial_sigma) {
    const Eigen::MatrixXd locs = oracle::random_matrix(n, 2, rng);
    inst.precision = build_spatial_covariance(
                         CovarianceModel::spatial_exp(rng.uniform(0.5, 2.0),
                                                      rng.uniform(0.2, 1.0),
                                                      rng.uniform(0.1, 0.5)),
                         locs)
                         .precision;
  } else {
    inst.precision = build_ar_precision(rng.uniform(0.0, 0.9), rng.uniform(0.3, 1.5), n);
  }
  return inst;
}

}  // namespace

TEST_SUITE("cbart") {

TEST_CASE("log marginal of a single observation") {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  Tree t;
  const DummyDesign d = build_dummy(t, x);
  const PrecisionView prec = make_precision(CovarianceModel::iid(1.0), 1);
  Eigen::VectorXd r(1);
  r << 0.0;
  // N(0, Sigma + tau^2 D D') = N(0, 2) at zero
  CHECK(log_marginal(r, d, prec, 1.0) ==
        doctest::Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log marginal collapses to the error density as tau goes to zero") {
  Rng rng(31);
  Instance inst = random_instance(10, 3, rng);
  const double lm = log_marginal(inst.r, inst.design, inst.precision, 1e-8);
  const double direct =
      oracle::mvn_logpdf_zero_mean(inst.r, oracle::sigma_from_precision(inst.precision));
  CHECK(lm == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("log marginal matches the Gaussian marginalization oracle") {
  Rng rng(37);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 5 + rng.uniform_int(16);
    Instance inst = random_instance(n, rng.uniform_int(5), rng, rep % 3 == 2);
    const double tau = rng.uniform(0.2, 2.0);
    const double lm = log_marginal(inst.r, inst.design, inst.precision, tau);
    const double ref = oracle::log_marginal_oracle(inst.r, inst.design, inst.precision, tau);
    CHECK(lm == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("marginal ratio equals the marginal difference for births and deaths") {
  Rng rng(41);
  int births_checked = 0, deaths_checked = 0;
  while (births_checked < 25 || deaths_checked < 25) {
    Instance inst = random_instance(40, 4, rng);
    const double tau = rng.uniform(0.2, 1.5);
    ProposeConfig pcfg;
    pcfg.min_leaf = 1;
    const Proposal prop = propose(inst.tree, inst.design, inst.x, inst.grid, pcfg, rng);
    if (!prop.valid) continue;
    if (prop.kind == MoveKind::Birth) {
      ++births_checked;
    } else {
      ++deaths_checked;
    }

    const double ratio = marginal_likelihood_ratio(inst.r, inst.precision, inst.design, prop, tau);
    const double lm_old = log_marginal(inst.r, inst.design, inst.precision, tau);
    Tree t2 = inst.tree;
    DummyDesign d2 = inst.design;
    apply_proposal(t2, d2, prop);
    const double lm_new = log_marginal(inst.r, d2, inst.precision, tau);
    CHECK(ratio == doctest::Approx(std::exp(lm_new - lm_old)).epsilon(1e-8));
  }
}

TEST_CASE("degenerate round trips have ratio one") {
  Rng rng(43);
  Instance inst = random_instance(30, 3, rng);
  const double tau = 0.7;
  CHECK(std::exp(log_marginal(inst.r, inst.design, inst.precision, tau) -
                 log_marginal(inst.r, inst.design, inst.precision, tau)) == 1.0);

  ProposeConfig birth_only;
  birth_only.birth_prob = 1.0;
  birth_only.min_leaf = 1;
  Proposal b;
  do {
    b = propose(inst.tree, inst.design, inst.x, inst.grid, birth_only, rng);
  } while (!b.valid);
  const double lr_birth = log_marginal_ratio(inst.r, inst.precision, inst.design, b, tau);
  Tree t2 = inst.tree;
  DummyDesign d2 = inst.design;
  apply_proposal(t2, d2, b);

  ProposeConfig death_only;
  death_only.birth_prob = 0.0;
  death_only.min_leaf = 1;
  Proposal dd;
  do {
    dd = propose(t2, d2, inst.x, inst.grid, death_only, rng);
  } while (dd.node != b.node);
  const double lr_death = log_marginal_ratio(inst.r, inst.precision, d2, dd, tau);
  CHECK(lr_birth + lr_death == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("iid errors reduce the ratio to the classical formula") {
  Rng rng(47);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 20 + rng.uniform_int(20);
    Instance inst = random_instance(n, 3, rng);
    const double sigma2 = rng.uniform(0.3, 2.0);
    const PrecisionView prec = make_precision(CovarianceModel::iid(sigma2), n);
    const double tau = rng.uniform(0.2, 1.0);

    ProposeConfig birth_only;
    birth_only.birth_prob = 1.0;
    birth_only.min_leaf = 1;
    Proposal b;
    do {
      b = propose(inst.tree, inst.design, inst.x, inst.grid, birth_only, rng);
    } while (!b.valid);

    const double log_ratio = log_marginal_ratio(inst.r, prec, inst.design, b, tau);
    const double classical = oracle::iid_birth_log_ratio(inst.design, b, inst.r, sigma2, tau);
    CHECK(log_ratio == doctest::Approx(classical).epsilon(1e-10));
  }
}

TEST_CASE("the ratio is invariant under reordering") {
  Rng rng(53);
  for (int rep = 0; rep < 10; ++rep) {
    Instance inst = random_instance(25, 3, rng);
    const double tau = 0.6;
    ProposeConfig pcfg;
    pcfg.min_leaf = 1;
    const Proposal prop = propose(inst.tree, inst.design, inst.x, inst.grid, pcfg, rng);
    if (!prop.valid) continue;
    const double base = log_marginal_ratio(inst.r, inst.precision, inst.design, prop, tau);

    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 24; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    const auto permuted = oracle::permute_instance(perm, inst.design, inst.r, inst.precision, prop);
    const double after = log_marginal_ratio(permuted.r, permuted.precision, permuted.design,
                                            permuted.proposal, tau);
    CHECK(std::abs(after - base) < 1e-10);
  }
}

TEST_CASE("leaf mean draw for the equal-precision conjugate case") {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  Tree t;
  const DummyDesign d = build_dummy(t, x);
  const PrecisionView prec = make_precision(CovarianceModel::iid(1.0), 1);
  Eigen::VectorXd r(1);
  r << 1.8;

  Rng rng(59);
  const int reps = 40000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < reps; ++k) {
    const double mu = draw_leaf_means(r, d, prec, 1.0, rng)(0);
    sum += mu;
    sum2 += mu * mu;
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  CHECK(mean == doctest::Approx(0.9).epsilon(0.02));   // r/2
  CHECK(var == doctest::Approx(0.5).epsilon(0.05));    // 1/2
}

TEST_CASE("a flat leaf prior recovers per-leaf sample means") {
  Rng rng(61);
  Instance inst = random_instance(30, 3, rng);
  const PrecisionView prec = make_precision(CovarianceModel::iid(1.0), 30);
  const int reps = 60000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(inst.design.b);
  for (int k = 0; k < reps; ++k) acc += draw_leaf_means(inst.r, inst.design, prec, 1e6, rng);
  acc /= reps;
  for (int j = 0; j < inst.design.b; ++j) {
    double leaf_mean = 0.0;
    for (int i : inst.design.omega[j]) leaf_mean += inst.r(i);
    leaf_mean /= static_cast<double>(inst.design.omega[j].size());
    const double mc_sd = 1.0 / std::sqrt(double(inst.design.omega[j].size()) * reps);
    CHECK(std::abs(acc(j) - leaf_mean) < 4.0 * mc_sd);
  }
}

TEST_CASE("leaf mean draws match the closed-form posterior moments") {
  Rng rng(67);
  Instance inst = random_instance(20, 3, rng);
  const double tau = 0.8;
  const int b = inst.design.b;

  // closed form: mean A^-1 D'S R, covariance A^-1
  const Eigen::MatrixXd dd = oracle::dense_dummy(inst.design);
  const Eigen::MatrixXd s = inst.precision.to_dense();
  Eigen::MatrixXd a = dd.transpose() * s * dd;
  a.diagonal().array() += 1.0 / (tau * tau);
  const Eigen::MatrixXd cov = a.inverse();
  const Eigen::VectorXd mean = cov * dd.transpose() * s * inst.r;

  const int reps = 100000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(b);
  Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(b, b);
  for (int k = 0; k < reps; ++k) {
    const Eigen::VectorXd mu = draw_leaf_means(inst.r, inst.design, inst.precision, tau, rng);
    acc += mu;
    acc2 += mu * mu.transpose();
  }
  acc /= reps;
  acc2 = acc2 / reps - acc * acc.transpose();

  for (int j = 0; j < b; ++j) {
    CHECK(std::abs(acc(j) - mean(j)) < 3.0 * std::sqrt(cov(j, j) / reps));
    for (int k = 0; k <= j; ++k) {
      const double se = std::sqrt((cov(j, j) * cov(k, k) + cov(j, k) * cov(j, k)) / reps);
      CHECK(std::abs(acc2(j, k) - cov(j, k)) < 3.5 * se);
    }
  }
}

TEST_CASE("rho-zero ar precision reproduces iid draws bit for bit") {
  const SimDataset data = gen_ar1_cubic(60, 0.0, 0.3, 7);
  CbartConfig cfg;
  cfg.m = 10;
  cfg.n_iter = 50;
  cfg.burn_in = 50;
  cfg.rng_seed = 11;
  cfg.store_ensemble = false;

  const double sigma = 0.3;
  const PrecisionView ar = build_ar_precision(0.0, sigma, 60);
  const PrecisionView iid = make_precision(CovarianceModel::iid(sigma * sigma), 60);
  const CbartFit fit_ar = run_cbart(data.y, data.x, ar, cfg);
  const CbartFit fit_iid = run_cbart(data.y, data.x, iid, cfg);
  CHECK(fit_ar.f_draws == fit_iid.f_draws);
}

TEST_CASE("a frozen root tree recovers the GLS intercept") {
  const int n = 80;
  Rng gen(71);
  Eigen::VectorXd y(n);
  double eta = 0.0;
  for (int i = 0; i < n; ++i) {
    eta = 0.6 * eta + gen.normal(0.0, 0.5);
    y(i) = 3.0 + eta;
  }
  Eigen::MatrixXd x = oracle::random_matrix(n, 1, gen);

  const PrecisionView prec = build_ar_precision(0.6, 0.5, n);
  CbartConfig cfg;
  cfg.m = 1;
  cfg.alpha = 0.0;  // splits carry zero prior mass: the tree stays a root
  cfg.tau_override = 1e5;
  cfg.n_iter = 2000;
  cfg.burn_in = 100;
  cfg.rng_seed = 5;
  cfg.store_ensemble = false;
  const CbartFit fit = run_cbart(y, x, prec, cfg);

  const Eigen::MatrixXd q = prec.to_dense();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double gls = ones.dot(q * y) / ones.dot(q * ones);
  const double post_sd = 1.0 / std::sqrt(ones.dot(q * ones));
  for (int i = 0; i < n; ++i) CHECK(fit.posterior_mean_f(i) == fit.posterior_mean_f(0));
  CHECK(std::abs(fit.posterior_mean_f(0) - gls) < 4.0 * post_sd / std::sqrt(2000.0));
}

TEST_CASE("backfitting invariants hold along a short chain") {
  const SimDataset data = gen_ar1_cubic(50, 0.5, 0.2, 3);
  CbartConfig cfg;
  cfg.m = 8;
  cfg.n_iter = 30;
  cfg.burn_in = 10;
  cfg.rng_seed = 2;
  cfg.check_invariants = true;
  cfg.store_ensemble = false;
  CHECK_NOTHROW(run_cbart(data.y, data.x, build_ar_precision(0.5, 0.2, 50), cfg));
}

TEST_CASE("estimate_sigma rejects non-iid precisions") {
  const SimDataset data = gen_ar1_cubic(30, 0.5, 0.2, 3);
  CbartConfig cfg;
  cfg.estimate_sigma = true;
  cfg.n_iter = 5;
  cfg.burn_in = 0;
  CHECK_THROWS_AS(run_cbart(data.y, data.x, build_ar_precision(0.5, 0.2, 30), cfg), ConfigError);
}

TEST_CASE("prediction at the training points matches the posterior mean") {
  const SimDataset data = gen_ar1_cubic(40, 0.0, 0.3, 13);
  CbartConfig cfg;
  cfg.m = 10;
  cfg.n_iter = 40;
  cfg.burn_in = 20;
  cfg.rng_seed = 3;
  cfg.estimate_sigma = true;
  const CbartFit fit =
      run_cbart(data.y, data.x, make_precision(CovarianceModel::iid(0.09), 40), cfg);
  const Eigen::VectorXd pred = predict_f(fit, data.x);
  CHECK(pred.isApprox(fit.posterior_mean_f, 1e-10));
}

TEST_CASE("a constant ensemble predicts a constant") {
  const SimDataset data = gen_ar1_cubic(30, 0.0, 0.3, 17);
  CbartConfig cfg;
  cfg.m = 1;
  cfg.alpha = 0.0;
  cfg.n_iter = 20;
  cfg.burn_in = 5;
  cfg.rng_seed = 23;
  const CbartFit fit = run_cbart(data.y, data.x, build_ar_precision(0.0, 0.3, 30), cfg);
  Eigen::MatrixXd x_new(4, 1);
  x_new << -0.9, -0.1, 0.4, 2.5;
  const Eigen::VectorXd pred = predict_f(fit, x_new);
  for (int i = 1; i < 4; ++i) CHECK(pred(i) == pred(0));
}

TEST_CASE("prediction matches a direct re-evaluation of the stored ensemble") {
  const SimDataset data = gen_ar1_cubic(50, 0.4, 0.2, 19);
  CbartConfig cfg;
  cfg.m = 6;
  cfg.n_iter = 25;
  cfg.burn_in = 15;
  cfg.rng_seed = 29;
  const CbartFit fit = run_cbart(data.y, data.x, build_ar_precision(0.4, 0.2, 50), cfg);

  Rng rng(97);
  const Eigen::MatrixXd x_new = oracle::random_matrix(10, 1, rng, -1.0, 1.0);
  const Eigen::VectorXd pred = predict_f(fit, x_new);
  REQUIRE_FALSE(fit.ensemble.empty());
  for (int i = 0; i < 10; ++i) {
    double acc = 0.0;
    for (const auto& snap : fit.ensemble) {
      for (const auto& tree : snap) {
        int id = tree.root();
        while (!tree.node(id).is_leaf()) {
          id = x_new(i, tree.node(id).var) < tree.node(id).cut ? tree.node(id).left
                                                               : tree.node(id).right;
        }
        acc += tree.leaf_means()[tree.leaf_position(id)];
      }
    }
    const double manual = acc / fit.ensemble.size() * fit.y_range + fit.y_mid;
    CHECK(pred(i) == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("conditioning on the true covariance curbs overfitting") {
  const SimDataset data = gen_ar1_cubic(200, 0.8, 0.1, 107);
  CbartConfig cfg;
  cfg.m = 30;
  cfg.n_iter = 300;
  cfg.burn_in = 300;
  cfg.rng_seed = 107;
  cfg.store_ensemble = false;

  const CbartFit cbart = run_cbart(data.y, data.x, build_ar_precision(0.8, 0.1, 200), cfg);
  CbartConfig iid_cfg = cfg;
  iid_cfg.estimate_sigma = true;
  const CbartFit bart =
      run_cbart(data.y, data.x, make_precision(CovarianceModel::iid(1.0), 200), iid_cfg);

  const double mse_cbart = (cbart.posterior_mean_f - data.f_true).squaredNorm() / 200.0;
  const double mse_bart = (bart.posterior_mean_f - data.f_true).squaredNorm() / 200.0;
  CHECK(mse_cbart < mse_bart);
}

}  // TEST_SUITE
