#pragma once

// The boosted-control-function estimator:
//
//   1. reduced-rank regression of X on Z gives M̂, V̂ = X − Z·M̂ᵀ and R̂;
//   2. ControlTwicing fits the additive model Y ≈ f̂(X) + γ̂(V̂);
//   3. δ̂ regresses γ̂(V̂) on the shift-invariant coordinates X·R̂;
//   4. f̂⋆(x) = f̂(x) + δ̂(R̂ᵀx).

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bcf/errors.hpp"
#include "bcf/learners.hpp"
#include "bcf/linalg.hpp"
#include "bcf/rankreg.hpp"
#include "bcf/simdg.hpp"

namespace bcf {

enum class TwicingOrder {
  control_first,     // γ̂ then f̂ in every round
  structural_first,  // f̂ then γ̂
};

struct TwicingOptions {
  int iterations = 10;
  double tol = 1e-6;
  TwicingOrder order = TwicingOrder::control_first;
};

struct TwicingResult {
  FittedModel f_hat;
  FittedModel gamma_hat;
  int rounds = 0;
  std::vector<double> training_mse;  // MSE of f̂(X) + γ̂(V̂) after each round
};

/// Alternating (backfitting) estimate of E[Y | X, V̂] = f(X) + γ(V̂).
inline TwicingResult control_twicing(const Matrix &x, const Vector &y, const Matrix &v_hat,
                                     const LearnerConfig &learner_f,
                                     const LearnerConfig &learner_gamma,
                                     const TwicingOptions &options = {}) {
  if (x.rows() != y.size() || v_hat.rows() != y.size()) {
    throw dimension_error("control_twicing: X, Y and V_hat row counts differ");
  }
  if (options.iterations < 1) throw invalid_input_error("control_twicing: need at least one iteration");

  const Vector yc = y.array() - y.mean();
  Vector partial = yc;
  std::optional<FittedModel> f_hat;
  std::optional<FittedModel> gamma_hat;
  Vector f_values;
  Vector gamma_values;
  std::vector<double> mse_path;

  const bool control_first = options.order == TwicingOrder::control_first;
  for (int round = 0; round < options.iterations; ++round) {
    for (int step = 0; step < 2; ++step) {
      const bool fit_control = (step == 0) == control_first;
      if (fit_control) {
        gamma_hat = fit(learner_gamma, v_hat, partial);
        gamma_values = gamma_hat->predict(v_hat);
        partial = yc - gamma_values;
      } else {
        f_hat = fit(learner_f, x, partial);
        f_values = f_hat->predict(x);
        partial = yc - f_values;
      }
    }
    mse_path.push_back(mean_squared_error(yc, f_values + gamma_values));
    if (mse_path.size() >= 2 &&
        std::abs(mse_path[mse_path.size() - 1] - mse_path[mse_path.size() - 2]) < options.tol) {
      break;
    }
  }
  return {std::move(*f_hat), std::move(*gamma_hat), static_cast<int>(mse_path.size()), std::move(mse_path)};
}

/// δ̂: a regression on X·R̂, or the mean of γ̂(V̂) when R̂ is the zero map.
class DeltaModel {
 public:
  DeltaModel(NullBasis basis, std::optional<FittedModel> model, double constant)
      : basis_(std::move(basis)), model_(std::move(model)), constant_(constant) {}

  /// δ̂(R̂ᵀx) for every row of X.
  Vector predict(const Matrix &x) const {
    if (x.cols() != ambient_dim(basis_)) {
      throw dimension_error("delta predict: expected " + std::to_string(ambient_dim(basis_)) +
                            " columns, got " + std::to_string(x.cols()));
    }
    if (!model_) return Vector::Constant(x.rows(), constant_);
    return model_->predict(invariant_coordinates(x));
  }

  Matrix invariant_coordinates(const Matrix &x) const {
    if (is_zero_map(basis_)) return Matrix(x.rows(), 0);
    return x * std::get<OrthonormalBasis>(basis_).matrix();
  }

  const NullBasis &basis() const { return basis_; }
  bool is_constant() const { return !model_.has_value(); }
  const FittedModel *model() const { return model_ ? &*model_ : nullptr; }

 private:
  NullBasis basis_;
  std::optional<FittedModel> model_;
  double constant_;
};

inline DeltaModel fit_delta(const Vector &gamma_values, const Matrix &x, const NullBasis &r_hat,
                            const LearnerConfig &learner_delta) {
  if (gamma_values.size() != x.rows()) throw dimension_error("fit_delta: row mismatch");
  if (ambient_dim(r_hat) != x.cols()) throw dimension_error("fit_delta: basis dimension mismatch");
  if (gamma_values.size() == 0) throw invalid_input_error("fit_delta: empty input");
  if (is_zero_map(r_hat)) return DeltaModel(r_hat, std::nullopt, gamma_values.mean());
  const Matrix features = x * std::get<OrthonormalBasis>(r_hat).matrix();
  return DeltaModel(r_hat, fit(learner_delta, features, gamma_values), 0.0);
}

struct BcfConfig {
  RankRegConfig rankreg;
  LearnerConfig learner_f = LearnerConfig::forest();
  LearnerConfig learner_gamma = LearnerConfig::ols();
  LearnerConfig learner_delta = LearnerConfig::forest();
  TwicingOptions twicing;
};

struct Centering {
  Eigen::RowVectorXd mean_x;
  Eigen::RowVectorXd mean_z;
  double mean_y = 0.0;
};

/// Fitted f̂⋆. Holds no exogenous data: prediction is a function of X only.
class BcfModel {
 public:
  BcfModel(FittedModel f_hat, FittedModel gamma_hat, DeltaModel delta, RankRegFit rank_fit,
           Centering centering, int twicing_rounds)
      : f_hat_(std::move(f_hat)),
        gamma_hat_(std::move(gamma_hat)),
        delta_(std::move(delta)),
        rank_fit_(std::move(rank_fit)),
        centering_(std::move(centering)),
        twicing_rounds_(twicing_rounds) {}

  Vector predict(const Matrix &x) const {
    const Matrix xc = center(x);
    return (f_hat_.predict(xc) + delta_.predict(xc)).array() + centering_.mean_y;
  }

  /// f̂(x − x̄)
  Vector structural_component(const Matrix &x) const { return f_hat_.predict(center(x)); }

  /// δ̂(R̂ᵀ(x − x̄))
  Vector invariant_component(const Matrix &x) const { return delta_.predict(center(x)); }

  const FittedModel &f_hat() const { return f_hat_; }
  const FittedModel &gamma_hat() const { return gamma_hat_; }
  const DeltaModel &delta() const { return delta_; }
  const RankRegFit &rank_fit() const { return rank_fit_; }
  const Centering &centering() const { return centering_; }
  Index q_hat() const { return rank_fit_.q_hat; }
  int twicing_rounds() const { return twicing_rounds_; }

 private:
  Matrix center(const Matrix &x) const {
    if (x.cols() != centering_.mean_x.size()) {
      throw dimension_error("BCF predict: model has " + std::to_string(centering_.mean_x.size()) +
                            " predictors, got " + std::to_string(x.cols()));
    }
    return x.rowwise() - centering_.mean_x;
  }

  FittedModel f_hat_;
  FittedModel gamma_hat_;
  DeltaModel delta_;
  RankRegFit rank_fit_;
  Centering centering_;
  int twicing_rounds_;
};

inline BcfModel fit_bcf(const Matrix &x, const Vector &y, const Matrix &z, const BcfConfig &config) {
  if (x.rows() != y.size() || z.rows() != y.size()) {
    throw dimension_error("fit_bcf: X, Y and Z row counts differ");
  }
  if (x.rows() <= x.cols() + z.cols()) {
    std::clog << "warning: fit_bcf with n=" << x.rows() << " <= p + r = " << x.cols() + z.cols() << '\n';
  }
  RankRegConfig rank_config = config.rankreg;
  rank_config.center = true;
  RankRegFit rank_fit = fit_rankreg(x, z, rank_config);

  Centering centering{rank_fit.mean_x, rank_fit.mean_z, y.mean()};
  const Matrix xc = x.rowwise() - centering.mean_x;
  const Vector yc = y.array() - centering.mean_y;

  TwicingResult twicing =
      control_twicing(xc, yc, rank_fit.v_hat, config.learner_f, config.learner_gamma, config.twicing);
  const Vector gamma_values = twicing.gamma_hat.predict(rank_fit.v_hat);
  DeltaModel delta = fit_delta(gamma_values, xc, rank_fit.r_hat, config.learner_delta);
  return BcfModel(std::move(twicing.f_hat), std::move(twicing.gamma_hat), std::move(delta),
                  std::move(rank_fit), std::move(centering), twicing.rounds);
}

inline BcfModel fit_bcf(const Dataset &data, const BcfConfig &config) {
  return fit_bcf(data.x, data.y, data.z, config);
}

// Baselines ------------------------------------------------------------------

/// Least squares in the learner's function class: regress Y on X, ignore Z.
inline FittedModel fit_ls(const Dataset &data, const LearnerConfig &learner) {
  return fit(learner, data.x, data.y);
}

inline FittedModel fit_constant_baseline(const Dataset &data) {
  return fit_constant(data.y, data.p());
}

/// Predicts f0(x) exactly.
inline Vector structural_oracle(const SimdgSpec &spec, const Matrix &x) { return spec.f0(x); }

}  // namespace bcf
