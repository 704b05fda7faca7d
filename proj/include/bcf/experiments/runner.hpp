#pragma once

// Seeded, parallel experiment repetitions. Each repetition draws everything
// from its own stream seeded by derive_seed(master, rep), and rows are sorted
// before emission, so output does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bcf/csv.hpp"
#include "bcf/experiments/config.hpp"
#include "bcf/experiments/predicate.hpp"
#include "bcf/experiments/results.hpp"
#include "bcf/learners.hpp"
#include "bcf/oracle.hpp"
#include "bcf/pipeline.hpp"
#include "bcf/rankreg.hpp"
#include "bcf/simdg.hpp"

namespace bcf::experiments {

struct RunReport {
  std::vector<ResultRow> rows;  // sorted
  int excluded_repetitions = 0;
  std::vector<std::string> warnings;
};

using RepetitionFn = std::function<std::vector<ResultRow>(int rep, std::uint64_t seed)>;

/// Runs `reps` repetitions on up to `workers` threads. A repetition that
/// throws a bcf::error is dropped and counted; other exceptions propagate.
inline RunReport run_repetitions(int reps, int workers, std::uint64_t master_seed, const RepetitionFn &body) {
  std::vector<std::optional<std::vector<ResultRow>>> slots(static_cast<std::size_t>(reps));
  std::vector<std::string> failures(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};

  auto work = [&] {
    for (int rep = next++; rep < reps; rep = next++) {
      const auto idx = static_cast<std::size_t>(rep);
      try {
        slots[idx] = body(rep, derive_seed(master_seed, static_cast<std::uint64_t>(rep)));
      } catch (const error &e) {
        failures[idx] = e.what();
      } catch (...) {
        fatal[idx] = std::current_exception();
      }
    }
  };

  const int n_threads = std::max(1, std::min(workers, reps));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto &th : pool) th.join();
  }
  for (const auto &e : fatal) {
    if (e) std::rethrow_exception(e);
  }

  RunReport report;
  for (int rep = 0; rep < reps; ++rep) {
    const auto idx = static_cast<std::size_t>(rep);
    if (slots[idx]) {
      report.rows.insert(report.rows.end(), slots[idx]->begin(), slots[idx]->end());
    } else {
      ++report.excluded_repetitions;
      report.warnings.push_back("repetition " + std::to_string(rep) + " excluded: " + failures[idx]);
    }
  }
  sort_rows(report.rows);
  return report;
}

inline BcfConfig bcf_config_for_rep(const ExperimentConfig &config, std::uint64_t rep_seed) {
  BcfConfig out;
  out.rankreg = config.rankreg;
  out.rankreg.seed = derive_seed(rep_seed, 1);
  out.learner_f = config.learner_f;
  out.learner_f.seed = derive_seed(rep_seed ^ config.learner_f.seed, 2);
  out.learner_gamma = config.learner_gamma;
  out.learner_gamma.seed = derive_seed(rep_seed ^ config.learner_gamma.seed, 3);
  out.learner_delta = config.learner_delta;
  out.learner_delta.seed = derive_seed(rep_seed ^ config.learner_delta.seed, 4);
  out.twicing = config.twicing;
  return out;
}

inline LearnerConfig ls_config_for_rep(const ExperimentConfig &config, std::uint64_t rep_seed) {
  LearnerConfig out = config.learner_ls;
  out.seed = derive_seed(rep_seed ^ config.learner_ls.seed, 5);
  return out;
}

/// MSE of predicting Y by its mean under the evaluation distribution.
inline double constant_reference_mse(const Vector &y) {
  return mean_squared_error(y, ConstantModel(y.mean()).predict(Matrix(y.size(), 0)));
}

inline SimdgSpec sample_experiment1_spec(const ExperimentConfig &config, Rng &rng) {
  SimdgSpec spec;
  spec.f0 = sample_tree_function(config.p, config.p_eff, config.depth, config.theta_sd, config.split_range, rng);
  spec.m0 = sample_m0(config.p, config.r, config.q, config.tau, rng);
  spec.rank_q = config.q;
  spec.noise = sample_noise_spec(config.p, config.c, rng, config.sd);
  return spec;
}

/// Training at k = 1, test MSE over the shift grid for BCF, LS, the constant
/// reference, the structural function and the IMP oracle.
inline std::vector<ResultRow> experiment1_repetition(const ExperimentConfig &config, int rep,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  const SimdgSpec spec = sample_experiment1_spec(config, rng);
  const Dataset train = generate(spec, 1.0, config.n_train, rng);

  const BcfModel bcf_model = fit_bcf(train, bcf_config_for_rep(config, seed));
  const FittedModel ls = fit_ls(train, ls_config_for_rep(config, seed));
  const ImpOracle oracle = make_imp_oracle(spec);

  std::vector<ResultRow> rows;
  for (double k : config.k_values) {
    const Dataset test = generate(spec, k, config.n_test, rng);
    auto add = [&](const char *method, double mse) { rows.push_back({rep, method, "k", k, "mse", mse}); };
    add("bcf", mean_squared_error(test.y, bcf_model.predict(test.x)));
    add("ls", mean_squared_error(test.y, ls.predict(test.x)));
    add("constant", constant_reference_mse(test.y));
    add("structural", mean_squared_error(test.y, structural_oracle(spec, test.x)));
    add("imp", mean_squared_error(test.y, imp_oracle_predict(oracle, test.x)));
  }
  return rows;
}

inline RunReport run_experiment1(const ExperimentConfig &config) {
  validate(config);
  return run_repetitions(config.repetitions, config.workers, config.seed,
                         [&](int rep, std::uint64_t seed) { return experiment1_repetition(config, rep, seed); });
}

inline std::string experiment2_method(Index p, Index r, double tau) {
  return "rrr:p=" + std::to_string(p) + ":r=" + std::to_string(r) + ":tau=" + format_double(tau);
}

/// Subspace recovery of M0 = τ·A·Bᵀ from X = M0·Z + V for every (dims, τ, n) cell.
inline std::vector<ResultRow> experiment2_repetition(const ExperimentConfig &config, int rep,
                                                     std::uint64_t seed) {
  std::vector<ResultRow> rows;
  std::uint64_t cell = 0;
  for (const auto &[p, r] : config.dims) {
    for (double tau : config.tau_values) {
      for (Index n : config.n_values) {
        Rng rng(derive_seed(seed, cell++));
        const Matrix m0 = sample_m0(p, r, config.q, tau, rng);
        Rng z_stream(rng());
        Rng v_stream(rng());
        const Matrix z = standard_normal(n, r, z_stream);
        Matrix x = z * m0.transpose();
        if (!config.noiseless) x += standard_normal(n, p, v_stream);

        RankRegConfig rr = config.rankreg;
        rr.seed = rng();
        const RankRegFit fit = fit_rankreg(x, z, rr);
        const std::string method = experiment2_method(p, r, tau);
        const auto nv = static_cast<double>(n);
        rows.push_back({rep, method, "n", nv, "subspace_distance", subspace_distance(fit.m_hat, m0)});
        rows.push_back({rep, method, "n", nv, "q_hat", static_cast<double>(fit.q_hat)});
      }
    }
  }
  return rows;
}

inline RunReport run_experiment2(const ExperimentConfig &config) {
  validate(config);
  return run_repetitions(config.repetitions, config.workers, config.seed,
                         [&](int rep, std::uint64_t seed) { return experiment2_repetition(config, rep, seed); });
}

struct TabularData {
  Matrix x;
  Vector y;
  Matrix z;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

inline TabularData prepare_tabular(const ExperimentConfig &config) {
  const auto &t = config.tabular;
  const CsvTable table = read_csv_table(t.csv_path);
  std::vector<std::string> predictors = t.predictors;
  if (predictors.empty()) {
    for (const auto &name : table.names) {
      const bool exogenous = std::find(t.exogenous.begin(), t.exogenous.end(), name) != t.exogenous.end();
      if (name != t.target && !exogenous) predictors.push_back(name);
    }
  }
  if (predictors.empty()) throw config_error("tabular: no predictor columns");

  TabularData data;
  data.x = table.columns(predictors);
  data.y = table.data.col(table.column(t.target));
  data.z = table.columns(t.exogenous);

  const auto mask = Predicate::parse(t.train_region).evaluate(table);
  for (Index i = 0; i < table.data.rows(); ++i) {
    (mask[static_cast<std::size_t>(i)] ? data.train_rows : data.test_rows).push_back(i);
  }
  if (data.train_rows.empty() || data.test_rows.empty()) {
    throw config_error("empty split: predicate '" + t.train_region + "' selects " +
                       std::to_string(data.train_rows.size()) + " training and " +
                       std::to_string(data.test_rows.size()) + " test rows");
  }
  return data;
}

/// One random subsample of the training region: fit on `subsample` of it,
/// evaluate on the held-out remainder and on the whole test region.
inline std::vector<ResultRow> tabular_repetition(const ExperimentConfig &config, const TabularData &data, int rep,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> rows = data.train_rows;
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_fit = std::max<Index>(
      1, static_cast<Index>(std::llround(config.tabular.subsample * static_cast<double>(rows.size()))));
  const std::vector<Index> fit_rows(rows.begin(), rows.begin() + n_fit);
  const std::vector<Index> held_rows(rows.begin() + n_fit, rows.end());

  const Matrix x_fit = data.x(fit_rows, Eigen::all);
  const Vector y_fit = data.y(fit_rows);
  const Matrix z_fit = data.z(fit_rows, Eigen::all);
  const BcfModel bcf_model = fit_bcf(x_fit, y_fit, z_fit, bcf_config_for_rep(config, seed));
  const FittedModel ls = fit(ls_config_for_rep(config, seed), x_fit, y_fit);

  const double fraction = config.tabular.subsample;
  std::vector<ResultRow> out;
  auto evaluate = [&](const std::vector<Index> &eval_rows, const char *metric) {
    if (eval_rows.empty()) return;
    const Matrix x = data.x(eval_rows, Eigen::all);
    const Vector y = data.y(eval_rows);
    out.push_back({rep, "bcf", "subsample", fraction, metric, mean_squared_error(y, bcf_model.predict(x))});
    out.push_back({rep, "ls", "subsample", fraction, metric, mean_squared_error(y, ls.predict(x))});
    out.push_back({rep, "constant", "subsample", fraction, metric, constant_reference_mse(y)});
  };
  evaluate(held_rows, "mse_heldout");
  evaluate(data.test_rows, "mse_test");
  return out;
}

inline RunReport run_tabular(const ExperimentConfig &config) {
  validate(config);
  const TabularData data = prepare_tabular(config);
  return run_repetitions(config.repetitions, config.workers, config.seed, [&](int rep, std::uint64_t seed) {
    return tabular_repetition(config, data, rep, seed);
  });
}

inline RunReport run_experiment(const ExperimentConfig &config) {
  if (config.experiment == "exp1") return run_experiment1(config);
  if (config.experiment == "exp2") return run_experiment2(config);
  if (config.experiment == "tabular") return run_tabular(config);
  throw config_error("unknown experiment '" + config.experiment + "'");
}

}  // namespace bcf::experiments
