#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bo4io/common.hpp"

namespace bo4io::app {

/// One experiment: data generation, the BO run and the profile analysis.
struct ExperimentConfig {
  // experiment
  std::string name = "experiment";
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "out";

  // data
  std::string network = "toy10";
  int d = 2;
  int n_train = 20;
  int n_test = 20;
  double sigma = 0.01;
  int max_redraws = 100;

  // solver
  double delta_p = 0.0;         ///< pooling quality grid step; 0 = default grid
  double oracle_timeout = 60.0;

  // loss
  double penalty = 1e6;
  std::string weight = "identity";  ///< identity | inverse_noise

  // bo
  int T = 100;
  int n0 = 0;
  double beta = 4.0;
  int refit_every = 1;
  int acq_restarts = 5;
  int scatter_per_dim = 512;
  int fit_restarts = 8;
  std::string matern = "2.5";

  // profile
  double rho = 3.84;
  double alpha = 0.05;
  int df = 1;
  double delta = 0.01;
  std::vector<int> parameters;            ///< 1-based; empty = all
  std::vector<int> width_checkpoints;     ///< iterations at which OA widths are recorded

  void validate() const {
    auto need = [](bool ok, const std::string& key, const std::string& what) {
      if (!ok) throw ConfigError("config: " + key + " " + what);
    };
    need(workers >= 1, "experiment.workers", "must be >= 1");
    need(!out_dir.empty(), "experiment.out_dir", "must not be empty");
    need(!network.empty(), "data.network", "must not be empty");
    need(d >= 1, "data.d", "must be >= 1");
    need(n_train >= 1, "data.n_train", "must be >= 1");
    need(n_test >= 0, "data.n_test", "must be >= 0");
    need(sigma >= 0.0, "data.sigma", "must be >= 0");
    need(max_redraws >= 0, "data.max_redraws", "must be >= 0");
    need(delta_p >= 0.0, "solver.delta_p", "must be >= 0");
    need(oracle_timeout > 0.0, "solver.oracle_timeout", "must be positive");
    need(penalty > 0.0, "loss.penalty", "must be positive");
    need(weight == "identity" || weight == "inverse_noise", "loss.weight", "must be identity or inverse_noise");
    need(weight != "inverse_noise" || sigma > 0.0, "loss.weight", "inverse_noise needs data.sigma > 0");
    need(T >= 0, "bo.T", "must be >= 0");
    need(n0 == 0 || n0 >= 2, "bo.n0", "must be 0 (auto) or >= 2");
    need(beta > 0.0, "bo.beta", "must be positive");
    need(refit_every >= 1, "bo.refit_every", "must be >= 1");
    need(acq_restarts >= 1, "bo.acq_restarts", "must be >= 1");
    need(scatter_per_dim >= 1, "bo.scatter_per_dim", "must be >= 1");
    need(fit_restarts >= 1, "bo.fit_restarts", "must be >= 1");
    const std::set<std::string> nus = {"0.5", "1.5", "2.5", "1/2", "3/2", "5/2"};
    need(nus.count(matern) > 0, "bo.matern", "must be 0.5, 1.5 or 2.5");
    need(rho > 0.0, "profile.rho", "must be positive");
    need(alpha > 0.0 && alpha < 1.0, "profile.alpha", "must be in (0, 1)");
    need(df >= 1, "profile.df", "must be >= 1");
    need(delta > 0.0, "profile.delta", "must be positive");
    for (int k : parameters) need(k >= 1 && k <= d, "profile.parameters", "entries must be in 1..d");
    for (int t : width_checkpoints) need(t >= 0 && t <= T, "profile.width_checkpoints", "entries must be in 0..T");
  }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

template <typename T>
T read_scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: bad value for " + key);
  }
}

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("config: " + key + " must be a list");
  std::vector<T> out;
  for (const auto& n : node) out.push_back(read_scalar<T>(n, key));
  return out;
}

}  // namespace detail

/// Parses a config document. Unknown sections or keys are errors that name the key.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping");

  auto section = [&](const std::string& name, const std::set<std::string>& keys, auto&& assign) {
    const YAML::Node s = root[name];
    if (!s) return;
    if (!s.IsMap()) throw ConfigError("config: " + name + " must be a mapping");
    for (const auto& kv : s) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) throw ConfigError("config: unknown key " + name + "." + key);
      assign(key, kv.second, name + "." + key);
    }
  };
  const std::set<std::string> sections = {"experiment", "data", "solver", "loss", "bo", "profile"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!sections.count(key)) throw ConfigError("config: unknown section " + key);
  }
  using detail::read_list;
  using detail::read_scalar;

  section("experiment", {"name", "seed", "workers", "out_dir"}, [&](const std::string& k, const YAML::Node& v, const std::string& key) {
    if (k == "name") c.name = read_scalar<std::string>(v, key);
    if (k == "seed") c.seed = read_scalar<std::uint64_t>(v, key);
    if (k == "workers") c.workers = read_scalar<int>(v, key);
    if (k == "out_dir") c.out_dir = read_scalar<std::string>(v, key);
  });
  section("data", {"network", "d", "n_train", "n_test", "sigma", "max_redraws"},
          [&](const std::string& k, const YAML::Node& v, const std::string& key) {
            if (k == "network") c.network = read_scalar<std::string>(v, key);
            if (k == "d") c.d = read_scalar<int>(v, key);
            if (k == "n_train") c.n_train = read_scalar<int>(v, key);
            if (k == "n_test") c.n_test = read_scalar<int>(v, key);
            if (k == "sigma") c.sigma = read_scalar<double>(v, key);
            if (k == "max_redraws") c.max_redraws = read_scalar<int>(v, key);
          });
  section("solver", {"delta_p", "oracle_timeout"}, [&](const std::string& k, const YAML::Node& v, const std::string& key) {
    if (k == "delta_p") c.delta_p = read_scalar<double>(v, key);
    if (k == "oracle_timeout") c.oracle_timeout = read_scalar<double>(v, key);
  });
  section("loss", {"penalty", "weight"}, [&](const std::string& k, const YAML::Node& v, const std::string& key) {
    if (k == "penalty") c.penalty = read_scalar<double>(v, key);
    if (k == "weight") c.weight = read_scalar<std::string>(v, key);
  });
  section("bo", {"T", "n0", "beta", "refit_every", "acq_restarts", "scatter_per_dim", "fit_restarts", "matern"},
          [&](const std::string& k, const YAML::Node& v, const std::string& key) {
            if (k == "T") c.T = read_scalar<int>(v, key);
            if (k == "n0") c.n0 = read_scalar<int>(v, key);
            if (k == "beta") c.beta = read_scalar<double>(v, key);
            if (k == "refit_every") c.refit_every = read_scalar<int>(v, key);
            if (k == "acq_restarts") c.acq_restarts = read_scalar<int>(v, key);
            if (k == "scatter_per_dim") c.scatter_per_dim = read_scalar<int>(v, key);
            if (k == "fit_restarts") c.fit_restarts = read_scalar<int>(v, key);
            if (k == "matern") c.matern = read_scalar<std::string>(v, key);
          });
  section("profile", {"rho", "alpha", "df", "delta", "parameters", "width_checkpoints"},
          [&](const std::string& k, const YAML::Node& v, const std::string& key) {
            if (k == "rho") c.rho = read_scalar<double>(v, key);
            if (k == "alpha") c.alpha = read_scalar<double>(v, key);
            if (k == "df") c.df = read_scalar<int>(v, key);
            if (k == "delta") c.delta = read_scalar<double>(v, key);
            if (k == "parameters") c.parameters = read_list<int>(v, key);
            if (k == "width_checkpoints") c.width_checkpoints = read_list<int>(v, key);
          });
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Serializes every setting; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  auto flow = [&](const std::vector<int>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (int x : v) e << x;
    e << YAML::EndSeq;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "workers" << YAML::Value << c.workers << YAML::Key << "out_dir" << YAML::Value << c.out_dir;
  e << YAML::EndMap;
  e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "network" << YAML::Value << c.network << YAML::Key << "d" << YAML::Value << c.d;
  e << YAML::Key << "n_train" << YAML::Value << c.n_train << YAML::Key << "n_test" << YAML::Value << c.n_test;
  e << YAML::Key << "sigma" << YAML::Value << c.sigma << YAML::Key << "max_redraws" << YAML::Value << c.max_redraws;
  e << YAML::EndMap;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "delta_p" << YAML::Value << c.delta_p << YAML::Key << "oracle_timeout" << YAML::Value
    << c.oracle_timeout;
  e << YAML::EndMap;
  e << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "penalty" << YAML::Value << c.penalty << YAML::Key << "weight" << YAML::Value << c.weight;
  e << YAML::EndMap;
  e << YAML::Key << "bo" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "T" << YAML::Value << c.T << YAML::Key << "n0" << YAML::Value << c.n0;
  e << YAML::Key << "beta" << YAML::Value << c.beta << YAML::Key << "refit_every" << YAML::Value << c.refit_every;
  e << YAML::Key << "acq_restarts" << YAML::Value << c.acq_restarts << YAML::Key << "scatter_per_dim" << YAML::Value
    << c.scatter_per_dim;
  e << YAML::Key << "fit_restarts" << YAML::Value << c.fit_restarts;
  e << YAML::Key << "matern" << YAML::Value << YAML::DoubleQuoted << c.matern;
  e << YAML::EndMap;
  e << YAML::Key << "profile" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "rho" << YAML::Value << c.rho << YAML::Key << "alpha" << YAML::Value << c.alpha;
  e << YAML::Key << "df" << YAML::Value << c.df << YAML::Key << "delta" << YAML::Value << c.delta;
  e << YAML::Key << "parameters" << YAML::Value;
  flow(c.parameters);
  e << YAML::Key << "width_checkpoints" << YAML::Value;
  flow(c.width_checkpoints);
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace bo4io::app
