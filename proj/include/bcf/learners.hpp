#pragma once

// Regression learners shared by every stage of the pipeline. Each learner is
// described by a LearnerConfig and produces an immutable FittedModel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bcf/errors.hpp"
#include "bcf/linalg.hpp"
#include "bcf/random.hpp"

namespace bcf {

inline constexpr int kUnlimitedDepth = -1;

struct ConstantParams {};
struct OlsParams {};
struct RidgeParams {
  double alpha = 1.0;
};
struct TreeParams {
  int max_depth = kUnlimitedDepth;
  Index min_leaf = 1;
};
struct ForestParams {
  int n_trees = 100;
  Index min_leaf = 1;
  double mtry_fraction = 1.0 / 3.0;
  bool bootstrap = true;
  int max_depth = kUnlimitedDepth;
};
struct BoostParams {
  int n_rounds = 500;
  double learning_rate = 0.1;
  int max_depth = 6;
  Index min_leaf = 1;
};

using LearnerParams =
    std::variant<ConstantParams, OlsParams, RidgeParams, TreeParams, ForestParams, BoostParams>;

struct LearnerConfig {
  LearnerParams params = OlsParams{};
  std::uint64_t seed = 0;

  static LearnerConfig constant() { return {ConstantParams{}}; }
  static LearnerConfig ols() { return {OlsParams{}}; }
  static LearnerConfig ridge(double alpha) { return {RidgeParams{alpha}}; }
  static LearnerConfig tree(int max_depth = kUnlimitedDepth, Index min_leaf = 1) {
    return {TreeParams{max_depth, min_leaf}};
  }
  static LearnerConfig forest(ForestParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }
  static LearnerConfig boost(BoostParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }

  std::string kind() const {
    constexpr const char *names[] = {"constant", "ols", "ridge", "tree", "forest", "boost"};
    return names[params.index()];
  }
};

inline void validate(const LearnerConfig &config) {
  std::visit(
      [](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RidgeParams>) {
          if (!(p.alpha > 0.0)) throw config_error("ridge: alpha must be positive");
        } else if constexpr (std::is_same_v<T, TreeParams>) {
          if (p.min_leaf < 1) throw config_error("tree: min_leaf must be >= 1");
          if (p.max_depth < 0 && p.max_depth != kUnlimitedDepth) throw config_error("tree: bad max_depth");
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          if (p.n_trees < 1) throw config_error("forest: n_trees must be >= 1");
          if (p.min_leaf < 1) throw config_error("forest: min_leaf must be >= 1");
          if (!(p.mtry_fraction > 0.0 && p.mtry_fraction <= 1.0)) {
            throw config_error("forest: mtry_fraction must lie in (0, 1]");
          }
        } else if constexpr (std::is_same_v<T, BoostParams>) {
          if (p.n_rounds < 1) throw config_error("boost: n_rounds must be >= 1");
          if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) {
            throw config_error("boost: learning_rate must lie in (0, 1]");
          }
          if (p.min_leaf < 1) throw config_error("boost: min_leaf must be >= 1");
        }
      },
      config.params);
}

// ---------------------------------------------------------------------------
// Models

class ConstantModel {
 public:
  explicit ConstantModel(double value, Index n_features = 0)
      : value_(value), n_features_(n_features) {}
  Vector predict(const Matrix &x) const { return Vector::Constant(x.rows(), value_); }
  double value() const { return value_; }
  Index n_features() const { return n_features_; }

 private:
  double value_;
  Index n_features_;
};

class LinearModel {
 public:
  LinearModel(Vector coefficients, double intercept)
      : coefficients_(std::move(coefficients)), intercept_(intercept) {}
  Vector predict(const Matrix &x) const {
    return (x * coefficients_).array() + intercept_;
  }
  const Vector &coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }
  Index n_features() const { return coefficients_.size(); }

 private:
  Vector coefficients_;
  double intercept_;
};

class RegressionTree {
 public:
  struct Node {
    Index feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  RegressionTree() = default;
  RegressionTree(std::vector<Node> nodes, Index n_features)
      : nodes_(std::move(nodes)), n_features_(n_features) {}

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd> &x) const {
    int id = 0;
    while (nodes_[id].feature >= 0) {
      const Node &node = nodes_[id];
      id = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[id].value;
  }

  Vector predict(const Matrix &x) const {
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
    return out;
  }

  const std::vector<Node> &nodes() const { return nodes_; }
  Index n_features() const { return n_features_; }

  Index n_leaves() const {
    return std::count_if(nodes_.begin(), nodes_.end(), [](const Node &n) { return n.feature < 0; });
  }

  int depth() const { return depth_from(0); }

 private:
  int depth_from(int id) const {
    const Node &n = nodes_[id];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  std::vector<Node> nodes_;
  Index n_features_ = 0;
};

class RegressionForest {
 public:
  RegressionForest(std::vector<RegressionTree> trees, Index n_features)
      : trees_(std::move(trees)), n_features_(n_features) {}

  Vector predict(const Matrix &x) const {
    Vector sum = Vector::Zero(x.rows());
    for (const auto &tree : trees_) sum += tree.predict(x);
    return sum / static_cast<double>(trees_.size());
  }

  const std::vector<RegressionTree> &trees() const { return trees_; }
  Index n_features() const { return n_features_; }

 private:
  std::vector<RegressionTree> trees_;
  Index n_features_;
};

class BoostedTrees {
 public:
  BoostedTrees(double base, double learning_rate, std::vector<RegressionTree> trees,
               std::vector<double> training_mse, Index n_features)
      : base_(base),
        learning_rate_(learning_rate),
        trees_(std::move(trees)),
        training_mse_(std::move(training_mse)),
        n_features_(n_features) {}

  Vector predict(const Matrix &x) const {
    Vector out = Vector::Constant(x.rows(), base_);
    for (const auto &tree : trees_) out += learning_rate_ * tree.predict(x);
    return out;
  }

  /// Training MSE after 0, 1, ..., n_rounds stages.
  const std::vector<double> &training_mse() const { return training_mse_; }
  const std::vector<RegressionTree> &trees() const { return trees_; }
  double base() const { return base_; }
  Index n_features() const { return n_features_; }

 private:
  double base_;
  double learning_rate_;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_mse_;
  Index n_features_;
};

class FittedModel {
 public:
  using Impl = std::variant<ConstantModel, LinearModel, RegressionTree, RegressionForest, BoostedTrees>;

  template <typename Model>
    requires std::is_constructible_v<Impl, Model>
  FittedModel(Model model) : impl_(std::move(model)) {}

  Vector predict(const Matrix &x) const {
    const Index d = n_features();
    if (!std::holds_alternative<ConstantModel>(impl_) && x.cols() != d) {
      throw dimension_error("predict: model fitted on " + std::to_string(d) +
                            " features, got " + std::to_string(x.cols()));
    }
    return std::visit([&](const auto &m) { return m.predict(x); }, impl_);
  }

  Index n_features() const {
    return std::visit([](const auto &m) { return m.n_features(); }, impl_);
  }

  template <typename T>
  const T *get_if() const {
    return std::get_if<T>(&impl_);
  }

 private:
  Impl impl_;
};

// ---------------------------------------------------------------------------
// Fitting

namespace detail {

inline void check_training_data(const Matrix &x, const Vector &y) {
  if (x.rows() != y.size()) {
    throw dimension_error("fit: X has " + std::to_string(x.rows()) + " rows but y has " +
                          std::to_string(y.size()) + " entries");
  }
  if (y.size() == 0) throw invalid_input_error("fit: empty training set");
  require_finite(x, "fit features");
  require_finite(y, "fit targets");
}

struct GrowParams {
  int max_depth = kUnlimitedDepth;
  Index min_leaf = 1;
  Index mtry = 0;  // 0 = every feature at every split
};

// Greedy CART growth on a list of (possibly repeated) row indices.
class TreeGrower {
 public:
  TreeGrower(const Matrix &x, const Vector &y, GrowParams params, Rng *rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), Index{0});
  }

  RegressionTree grow(std::vector<Index> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    build(0, rows_.size(), 0);
    return RegressionTree(std::move(nodes_), x_.cols());
  }

 private:
  struct Split {
    Index feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  int build(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto count = static_cast<Index>(end - begin);

    double sum = 0.0;
    double sum_sq = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = begin; k < end; ++k) {
      const double v = y_(rows_[k]);
      sum += v;
      sum_sq += v * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    nodes_[id].value = sum / static_cast<double>(count);

    const bool depth_exhausted = params_.max_depth != kUnlimitedDepth && depth >= params_.max_depth;
    if (depth_exhausted || count < 2 * params_.min_leaf || lo == hi) return id;

    const Split best = find_split(begin, end);
    const double parent_score = sum * sum / static_cast<double>(count);
    if (best.feature < 0 || best.score - parent_score <= 1e-12 * std::max(sum_sq, 1e-300)) {
      return id;
    }

    const auto mid = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin), rows_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](Index row) { return x_(row, best.feature) <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int left = build(begin, split_at, depth + 1);
    const int right = build(split_at, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  Split find_split(std::size_t begin, std::size_t end) {
    const auto count = static_cast<Index>(end - begin);
    const Index d = x_.cols();
    const Index mtry = (params_.mtry <= 0 || params_.mtry >= d) ? d : params_.mtry;
    if (mtry < d) {
      // Partial Fisher-Yates, then canonical order so equal gains resolve the
      // same way as the full search would.
      std::iota(features_.begin(), features_.end(), Index{0});
      for (Index k = 0; k < mtry; ++k) {
        std::uniform_int_distribution<Index> pick(k, d - 1);
        std::swap(features_[static_cast<std::size_t>(k)], features_[static_cast<std::size_t>(pick(*rng_))]);
      }
      std::sort(features_.begin(), features_.begin() + mtry);
    }

    Split best;
    pairs_.resize(static_cast<std::size_t>(count));
    for (Index f = 0; f < mtry; ++f) {
      const Index feature = features_[static_cast<std::size_t>(f)];
      for (std::size_t k = begin; k < end; ++k) {
        pairs_[k - begin] = {x_(rows_[k], feature), y_(rows_[k])};
      }
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto &a, const auto &b) { return a.first < b.first; });
      double total = 0.0;
      for (const auto &pr : pairs_) total += pr.second;

      double left_sum = 0.0;
      for (Index i = 0; i + 1 < count; ++i) {
        left_sum += pairs_[static_cast<std::size_t>(i)].second;
        const Index n_left = i + 1;
        const Index n_right = count - n_left;
        if (n_left < params_.min_leaf) continue;
        if (n_right < params_.min_leaf) break;
        const double here = pairs_[static_cast<std::size_t>(i)].first;
        const double next = pairs_[static_cast<std::size_t>(i + 1)].first;
        if (!(here < next)) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(n_right);
        if (score > best.score) {
          double threshold = 0.5 * (here + next);
          if (!(threshold < next)) threshold = here;
          best = {feature, threshold, score};
        }
      }
    }
    return best;
  }

  const Matrix &x_;
  const Vector &y_;
  GrowParams params_;
  Rng *rng_;
  std::vector<Index> rows_;
  std::vector<Index> features_;
  std::vector<std::pair<double, double>> pairs_;
  std::vector<RegressionTree::Node> nodes_;
};

inline std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

}  // namespace detail

inline FittedModel fit_constant(const Vector &y, Index n_features = 0) {
  if (y.size() == 0) throw invalid_input_error("fit_constant: empty input");
  require_finite(y, "fit_constant");
  return ConstantModel(y.mean(), n_features);
}

/// Least squares with intercept; minimum-norm coefficients when the
/// centered design is rank deficient.
inline FittedModel fit_ols(const Matrix &x, const Vector &y) {
  detail::check_training_data(x, y);
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;
  Vector beta = Vector::Zero(x.cols());
  if (x.cols() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xc.rows(), xc.cols());
    cod.setThreshold(1e-12 * static_cast<double>(std::max(xc.rows(), xc.cols())));
    cod.compute(xc);
    if (xc.cwiseAbs().maxCoeff() > 0.0) beta = cod.solve(yc);
  }
  const double intercept = y_mean - x_mean.dot(beta);
  return LinearModel(std::move(beta), intercept);
}

/// Ridge with unpenalized intercept.
inline FittedModel fit_ridge(const Matrix &x, const Vector &y, double alpha) {
  detail::check_training_data(x, y);
  if (!(alpha > 0.0)) throw invalid_input_error("fit_ridge: alpha must be positive");
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;
  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += alpha;
  Vector beta = gram.ldlt().solve(xc.transpose() * yc);
  const double intercept = y_mean - x_mean.dot(beta);
  return LinearModel(std::move(beta), intercept);
}

inline FittedModel fit_tree(const Matrix &x, const Vector &y, int max_depth = kUnlimitedDepth,
                            Index min_leaf = 1) {
  detail::check_training_data(x, y);
  if (min_leaf < 1) throw invalid_input_error("fit_tree: min_leaf must be >= 1");
  detail::TreeGrower grower(x, y, {max_depth, min_leaf, 0}, nullptr);
  return grower.grow(detail::all_rows(x.rows()));
}

inline FittedModel fit_forest(const Matrix &x, const Vector &y, const ForestParams &params,
                              std::uint64_t seed) {
  detail::check_training_data(x, y);
  validate(LearnerConfig{params, seed});
  const Index n = x.rows();
  const Index d = x.cols();
  const Index mtry = std::max<Index>(1, static_cast<Index>(std::floor(params.mtry_fraction * static_cast<double>(d))));

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<Index> rows;
    if (params.bootstrap) {
      std::uniform_int_distribution<Index> draw(0, n - 1);
      rows.resize(static_cast<std::size_t>(n));
      for (auto &row : rows) row = draw(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = detail::all_rows(n);
    }
    detail::TreeGrower grower(x, y, {params.max_depth, params.min_leaf, mtry}, &rng);
    trees.push_back(grower.grow(std::move(rows)));
  }
  return RegressionForest(std::move(trees), d);
}

/// Stagewise least-squares boosting: F_0 = mean(y), F_t = F_{t−1} + lr·tree_t
/// where tree_t is fitted to the current residuals.
inline FittedModel fit_boost(const Matrix &x, const Vector &y, const BoostParams &params) {
  detail::check_training_data(x, y);
  validate(LearnerConfig{params});
  const double base = y.mean();
  Vector fitted = Vector::Constant(y.size(), base);
  std::vector<RegressionTree> trees;
  std::vector<double> mse;
  trees.reserve(static_cast<std::size_t>(params.n_rounds));
  mse.reserve(static_cast<std::size_t>(params.n_rounds) + 1);
  mse.push_back((y - fitted).squaredNorm() / static_cast<double>(y.size()));
  for (int t = 0; t < params.n_rounds; ++t) {
    const Vector residual = y - fitted;
    detail::TreeGrower grower(x, residual, {params.max_depth, params.min_leaf, 0}, nullptr);
    RegressionTree tree = grower.grow(detail::all_rows(x.rows()));
    fitted += params.learning_rate * tree.predict(x);
    mse.push_back((y - fitted).squaredNorm() / static_cast<double>(y.size()));
    trees.push_back(std::move(tree));
  }
  return BoostedTrees(base, params.learning_rate, std::move(trees), std::move(mse), x.cols());
}

inline FittedModel fit(const LearnerConfig &config, const Matrix &x, const Vector &y) {
  validate(config);
  return std::visit(
      [&](const auto &p) -> FittedModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantParams>) {
          detail::check_training_data(x, y);
          return fit_constant(y, x.cols());
        } else if constexpr (std::is_same_v<T, OlsParams>) {
          return fit_ols(x, y);
        } else if constexpr (std::is_same_v<T, RidgeParams>) {
          return fit_ridge(x, y, p.alpha);
        } else if constexpr (std::is_same_v<T, TreeParams>) {
          return fit_tree(x, y, p.max_depth, p.min_leaf);
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          return fit_forest(x, y, p, config.seed);
        } else {
          return fit_boost(x, y, p);
        }
      },
      config.params);
}

inline double mean_squared_error(const Vector &truth, const Vector &prediction) {
  if (truth.size() != prediction.size()) throw dimension_error("mse: length mismatch");
  if (truth.size() == 0) throw invalid_input_error("mse: empty input");
  return (truth - prediction).squaredNorm() / static_cast<double>(truth.size());
}

}  // namespace bcf
