#include "artifacts.hpp"

#include <filesystem>
#include <fstream>

#include "cbartgp/version.hpp"
#include "csv.hpp"

namespace cbartgp::cli {

namespace fs = std::filesystem;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return {};
  const auto p = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

}  // namespace

void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    std::uint64_t seed, double wall_seconds,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["timings"] = {{"wall_seconds", wall_seconds}};
  m["outputs"] = outputs;
  m["library_version"] = kVersion;
  m["schema_version"] = 1;
  write_json_file((fs::path(dir) / "manifest.json").string(), m);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad json in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

LoadedData load_data_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  LoadedData d;
  d.spatial = t.has_col("s1");
  if (d.spatial) {
    const int s1 = t.col("s1"), s2 = t.col("s2"), xc = t.col("x"), yc = t.col("y");
    const int n = t.n_rows();
    if (n == 0) throw ConfigError("dataset has no rows: " + path);
    d.locations.resize(n, 2);
    d.x.resize(n, 1);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
      d.locations(i, 0) = t.rows[i][s1];
      d.locations(i, 1) = t.rows[i][s2];
      d.x(i, 0) = t.rows[i][xc];
      d.y(i) = t.rows[i][yc];
    }
  } else {
    const int idx = t.col("idx"), xc = t.col("x"), yc = t.col("y");
    const int n = t.n_rows();
    if (n == 0) throw ConfigError("dataset has no rows: " + path);
    d.locations.resize(n, 1);
    d.x.resize(n, 1);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
      d.locations(i, 0) = t.rows[i][idx];
      d.x(i, 0) = t.rows[i][xc];
      d.y(i) = t.rows[i][yc];
    }
  }
  return d;
}

void write_dataset(const std::string& dir, const SimDataset& d) {
  const bool spatial = d.locations.cols() == 2;
  std::vector<std::string> header =
      spatial ? std::vector<std::string>{"s1", "s2", "x", "y"}
              : std::vector<std::string>{"idx", "x", "y"};
  std::vector<std::string> truth_header =
      spatial ? std::vector<std::string>{"s1", "s2", "x", "f_true"}
              : std::vector<std::string>{"idx", "x", "f_true"};

  auto row_of = [&](int i, double last) {
    std::vector<double> row;
    if (spatial) {
      row = {d.locations(i, 0), d.locations(i, 1), d.x(i, 0), last};
    } else {
      row = {d.locations(i, 0), d.x(i, 0), last};
    }
    return row;
  };

  std::vector<std::vector<double>> train, test, truth;
  const int n = static_cast<int>(d.y.size());
  for (int i = 0; i < n; ++i) {
    (i < d.n_train ? train : test).push_back(row_of(i, d.y(i)));
    truth.push_back(row_of(i, d.f_true(i)));
  }
  write_csv((fs::path(dir) / "train.csv").string(), header, train);
  write_csv((fs::path(dir) / "test.csv").string(), header, test);
  write_csv((fs::path(dir) / "truth.csv").string(), truth_header, truth);
}

json covariance_to_json(const CovarianceModel& m) {
  json j;
  switch (m.kind) {
    case CovKind::IID: j["kind"] = "iid"; break;
    case CovKind::AR1: j["kind"] = "ar1"; break;
    case CovKind::ARp: j["kind"] = "arp"; break;
    case CovKind::SpatialExp: j["kind"] = "exp"; break;
    case CovKind::SpatialMatern: j["kind"] = "matern"; break;
  }
  j["params"] = to_std(m.params);
  return j;
}

CovarianceModel covariance_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::vector<double> p = j.at("params").get<std::vector<double>>();
  if (kind == "iid") return CovarianceModel::iid(p.at(0));
  if (kind == "ar1") return CovarianceModel::ar1(p.at(0), p.at(1));
  if (kind == "arp") {
    Eigen::VectorXd coeffs = to_eigen(p);
    return CovarianceModel::arp(coeffs.head(coeffs.size() - 1), p.back());
  }
  if (kind == "exp") return CovarianceModel::spatial_exp(p.at(0), p.at(1), p.at(2));
  if (kind == "matern") return CovarianceModel::spatial_matern(p.at(0), p.at(1), p.at(2), p.at(3));
  throw ConfigError("unknown covariance kind: " + kind);
}

json ensemble_to_json(const std::vector<std::vector<Tree>>& ensemble) {
  json draws = json::array();
  for (const auto& snap : ensemble) {
    json trees = json::array();
    for (const auto& t : snap) {
      json nodes = json::array();
      for (const TreeNode& nd : t.compact_nodes()) {
        nodes.push_back({nd.var, nd.cut, nd.left, nd.right});
      }
      trees.push_back({{"n", std::move(nodes)}, {"m", t.leaf_means()}});
    }
    draws.push_back(std::move(trees));
  }
  return draws;
}

std::vector<std::vector<Tree>> ensemble_from_json(const json& j) {
  std::vector<std::vector<Tree>> out;
  out.reserve(j.size());
  for (const auto& snap : j) {
    std::vector<Tree> trees;
    trees.reserve(snap.size());
    for (const auto& tj : snap) {
      std::vector<TreeNode> nodes;
      for (const auto& nj : tj.at("n")) {
        TreeNode nd;
        nd.var = nj.at(0).get<int>();
        nd.cut = nj.at(1).get<double>();
        nd.left = nj.at(2).get<int>();
        nd.right = nj.at(3).get<int>();
        nodes.push_back(nd);
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].left >= 0) nodes[nodes[i].left].parent = static_cast<int>(i);
        if (nodes[i].right >= 0) nodes[nodes[i].right].parent = static_cast<int>(i);
      }
      trees.push_back(Tree::from_nodes(std::move(nodes),
                                       tj.at("m").get<std::vector<double>>()));
    }
    out.push_back(std::move(trees));
  }
  return out;
}

namespace {

json fit_core_to_json(const CbartFit& fit) {
  json j;
  j["y_mid"] = fit.y_mid;
  j["y_range"] = fit.y_range;
  j["posterior_mean_f"] = to_std(fit.posterior_mean_f);
  j["ensemble"] = ensemble_to_json(fit.ensemble);
  return j;
}

CbartFit fit_core_from_json(const json& j) {
  CbartFit fit;
  fit.y_mid = j.at("y_mid").get<double>();
  fit.y_range = j.at("y_range").get<double>();
  fit.posterior_mean_f = to_eigen(j.at("posterior_mean_f").get<std::vector<double>>());
  fit.ensemble = ensemble_from_json(j.at("ensemble"));
  return fit;
}

}  // namespace

void save_model(const std::string& path, const SavedModel& m) {
  json j;
  j["type"] = m.type;
  j["spatial"] = m.spatial;
  j["y"] = to_std(m.y);
  j["x"] = matrix_to_json(m.x);
  j["locations"] = matrix_to_json(m.locations);
  j["fit"] = fit_core_to_json(m.fit);
  if (m.has_gp) j["gp"] = covariance_to_json(m.gp_model);
  if (m.has_iid) j["iid_fit"] = fit_core_to_json(m.iid_fit);
  write_json_file(path, j);
}

SavedModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  SavedModel m;
  m.type = j.at("type").get<std::string>();
  m.spatial = j.at("spatial").get<bool>();
  m.y = to_eigen(j.at("y").get<std::vector<double>>());
  m.x = matrix_from_json(j.at("x"));
  m.locations = matrix_from_json(j.at("locations"));
  m.fit = fit_core_from_json(j.at("fit"));
  if (j.contains("gp")) {
    m.has_gp = true;
    m.gp_model = covariance_from_json(j.at("gp"));
  }
  if (j.contains("iid_fit")) {
    m.has_iid = true;
    m.iid_fit = fit_core_from_json(j.at("iid_fit"));
  }
  return m;
}

}  // namespace cbartgp::cli
