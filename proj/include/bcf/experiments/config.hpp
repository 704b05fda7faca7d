#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bcf/errors.hpp"
#include "bcf/learners.hpp"
#include "bcf/pipeline.hpp"
#include "bcf/rankreg.hpp"
#include "bcf/simdg.hpp"

namespace bcf::experiments {

using json = nlohmann::json;

struct TabularSettings {
  std::string csv_path;
  std::string target;
  std::vector<std::string> exogenous;
  std::vector<std::string> predictors;  // empty: every other column
  std::string train_region;             // predicate selecting training rows
  double subsample = 0.8;
};

struct ExperimentConfig {
  std::string experiment = "exp1";

  // SIMDG
  Index p = 10;
  Index r = 5;
  Index q = 5;
  Index p_eff = 3;
  int depth = 3;
  double theta_sd = 1.5;
  SplitRange split_range{};
  double c = 2.0;
  double sd = 0.1;
  double tau = 1.0;

  Index n_train = 1000;
  Index n_test = 1000;
  std::vector<double> k_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int repetitions = 10;

  // exp2 grid
  std::vector<double> tau_values{0.5, 1.0, 2.0, 4.0};
  std::vector<Index> n_values{100, 500, 2000};
  std::vector<std::pair<Index, Index>> dims{{10, 10}};
  bool noiseless = false;

  LearnerConfig learner_f = LearnerConfig::forest();
  LearnerConfig learner_gamma = LearnerConfig::ols();
  LearnerConfig learner_delta = LearnerConfig::forest();
  LearnerConfig learner_ls = LearnerConfig::forest();
  TwicingOptions twicing;
  RankRegConfig rankreg;

  TabularSettings tabular;

  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "results.csv";
  std::string format = "csv";
};

inline LearnerConfig learner_from_json(const json &j) {
  if (!j.is_object() || !j.contains("kind")) throw config_error("learner config needs a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  LearnerConfig out;
  out.seed = j.value("seed", std::uint64_t{0});
  if (kind == "constant") {
    out.params = ConstantParams{};
  } else if (kind == "ols") {
    out.params = OlsParams{};
  } else if (kind == "ridge") {
    out.params = RidgeParams{j.value("alpha", 1.0)};
  } else if (kind == "tree") {
    TreeParams p;
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    out.params = p;
  } else if (kind == "forest") {
    ForestParams p;
    p.n_trees = j.value("n_trees", p.n_trees);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    p.mtry_fraction = j.value("mtry_fraction", p.mtry_fraction);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    p.max_depth = j.value("max_depth", p.max_depth);
    out.params = p;
  } else if (kind == "boost") {
    BoostParams p;
    p.n_rounds = j.value("n_rounds", p.n_rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    out.params = p;
  } else {
    throw config_error("unknown learner kind '" + kind + "'");
  }
  validate(out);
  return out;
}

inline json learner_to_json(const LearnerConfig &config) {
  json j = std::visit(
      [](const auto &p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RidgeParams>) {
          return {{"alpha", p.alpha}};
        } else if constexpr (std::is_same_v<T, TreeParams>) {
          return {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}};
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          return {{"n_trees", p.n_trees}, {"min_leaf", p.min_leaf}, {"mtry_fraction", p.mtry_fraction},
                  {"bootstrap", p.bootstrap}, {"max_depth", p.max_depth}};
        } else if constexpr (std::is_same_v<T, BoostParams>) {
          return {{"n_rounds", p.n_rounds}, {"learning_rate", p.learning_rate},
                  {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}};
        } else {
          return json::object();
        }
      },
      config.params);
  j["kind"] = config.kind();
  return j;
}

template <typename T>
void read_if(const json &j, const char *key, T &target) {
  if (j.contains(key)) {
    try {
      target = j.at(key).get<T>();
    } catch (const json::exception &e) {
      throw config_error(std::string("config field '") + key + "': " + e.what());
    }
  }
}

inline void validate(const ExperimentConfig &c) {
  auto require = [](bool ok, const std::string &msg) {
    if (!ok) throw config_error(msg);
  };
  require(c.experiment == "exp1" || c.experiment == "exp2" || c.experiment == "tabular",
          "experiment must be exp1, exp2 or tabular");
  require(c.repetitions >= 1, "repetitions must be positive");
  require(c.workers >= 1, "workers must be positive");
  require(c.format == "csv" || c.format == "json", "format must be csv or json");
  require(c.twicing.iterations >= 1, "twicing.iterations must be positive");
  require(c.rankreg.folds >= 2, "rankreg.folds must be at least 2");
  require(c.rankreg.grid_size >= 1, "rankreg.grid_size must be positive");
  for (double l : c.rankreg.lambda_grid) require(l > 0.0, "rankreg.grid values must be positive");
  for (const auto *l : {&c.learner_f, &c.learner_gamma, &c.learner_delta, &c.learner_ls}) validate(*l);

  if (c.experiment == "exp1") {
    require(c.p >= 1 && c.r >= 1 && c.q >= 0, "p, r must be positive and q non-negative");
    require(c.q <= std::min(c.p, c.r), "q must not exceed min(p, r)");
    require(c.p_eff >= 1 && c.p_eff <= c.p, "p_eff must lie in [1, p]");
    require(c.depth >= 1, "depth must be positive");
    require(c.theta_sd >= 0.0 && c.c >= 0.0 && c.sd >= 0.0, "theta_sd, c and sd must be non-negative");
    require(c.split_range.lo < c.split_range.hi, "split_range must be a non-empty interval");
    require(c.tau > 0.0, "tau must be positive");
    require(c.n_train >= 2 && c.n_test >= 1, "sample sizes must be positive");
    require(!c.k_values.empty(), "k_values must not be empty");
    for (double k : c.k_values) require(k >= 1.0, "k values must be >= 1");
  } else if (c.experiment == "exp2") {
    require(!c.tau_values.empty() && !c.n_values.empty() && !c.dims.empty(), "exp2 grids must not be empty");
    for (double t : c.tau_values) require(t >= 0.0, "tau values must be non-negative");
    for (Index n : c.n_values) require(n >= 2, "n values must be at least 2");
    for (const auto &[p, r] : c.dims) {
      require(p >= 1 && r >= 1, "dims must be positive");
      require(c.q >= 0 && c.q <= std::min(p, r), "q must not exceed min(p, r) for every dims pair");
    }
  } else {
    const auto &t = c.tabular;
    require(!t.csv_path.empty(), "tabular.csv is required");
    require(!t.target.empty(), "tabular.target is required");
    require(!t.exogenous.empty(), "tabular.exogenous must name at least one column");
    require(!t.train_region.empty(), "tabular.train_region predicate is required");
    require(t.subsample > 0.0 && t.subsample <= 1.0, "tabular.subsample must lie in (0, 1]");
  }
}

inline ExperimentConfig config_from_json(const json &j, ExperimentConfig c = {}) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  read_if(j, "experiment", c.experiment);
  read_if(j, "p", c.p);
  read_if(j, "r", c.r);
  read_if(j, "q", c.q);
  read_if(j, "p_eff", c.p_eff);
  read_if(j, "depth", c.depth);
  read_if(j, "theta_sd", c.theta_sd);
  if (j.contains("split_range")) {
    const auto range = j.at("split_range").get<std::vector<double>>();
    if (range.size() != 2) throw config_error("split_range must be [lo, hi]");
    c.split_range = {range[0], range[1]};
  }
  read_if(j, "c", c.c);
  read_if(j, "sd", c.sd);
  read_if(j, "tau", c.tau);
  read_if(j, "n_train", c.n_train);
  read_if(j, "n_test", c.n_test);
  read_if(j, "k_values", c.k_values);
  read_if(j, "repetitions", c.repetitions);
  read_if(j, "tau_values", c.tau_values);
  read_if(j, "n_values", c.n_values);
  read_if(j, "noiseless", c.noiseless);
  if (j.contains("dims")) {
    c.dims.clear();
    for (const auto &pair : j.at("dims")) {
      if (!pair.is_array() || pair.size() != 2) throw config_error("dims entries must be [p, r]");
      c.dims.emplace_back(pair[0].get<Index>(), pair[1].get<Index>());
    }
  }
  if (j.contains("learners")) {
    const auto &l = j.at("learners");
    if (l.contains("f")) c.learner_f = learner_from_json(l.at("f"));
    if (l.contains("gamma")) c.learner_gamma = learner_from_json(l.at("gamma"));
    if (l.contains("delta")) c.learner_delta = learner_from_json(l.at("delta"));
    if (l.contains("ls")) c.learner_ls = learner_from_json(l.at("ls"));
  }
  if (j.contains("twicing")) {
    const auto &t = j.at("twicing");
    read_if(t, "iterations", c.twicing.iterations);
    read_if(t, "tol", c.twicing.tol);
    if (t.contains("order")) {
      const auto order = t.at("order").get<std::string>();
      if (order == "control_first") {
        c.twicing.order = TwicingOrder::control_first;
      } else if (order == "structural_first") {
        c.twicing.order = TwicingOrder::structural_first;
      } else {
        throw config_error("twicing.order must be control_first or structural_first");
      }
    }
  }
  if (j.contains("rankreg")) {
    const auto &rr = j.at("rankreg");
    read_if(rr, "grid", c.rankreg.lambda_grid);
    read_if(rr, "grid_size", c.rankreg.grid_size);
    read_if(rr, "folds", c.rankreg.folds);
  }
  if (j.contains("tabular")) {
    const auto &t = j.at("tabular");
    read_if(t, "csv", c.tabular.csv_path);
    read_if(t, "target", c.tabular.target);
    read_if(t, "exogenous", c.tabular.exogenous);
    read_if(t, "predictors", c.tabular.predictors);
    read_if(t, "train_region", c.tabular.train_region);
    read_if(t, "subsample", c.tabular.subsample);
  }
  read_if(j, "seed", c.seed);
  read_if(j, "workers", c.workers);
  read_if(j, "output", c.output);
  read_if(j, "format", c.format);
  return c;
}

inline ExperimentConfig load_config(const std::string &path, ExperimentConfig defaults = {}) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw config_error("config '" + path + "': " + e.what());
  }
  try {
    return config_from_json(j, std::move(defaults));
  } catch (const json::exception &e) {
    throw config_error("config '" + path + "': " + e.what());
  }
}

}  // namespace bcf::experiments
