#pragma once

// Simultaneous-equation data generators:
//
//   X = M0·Z + V,   Y = f0(X) + U,   (U, V) ~ Λ0 independent of Z ~ N(0, k²·I_r)
//
// with f0 a random axis-aligned regression tree and Λ0 a Gaussian whose
// control function E[U | V] = c·ηᵀV is linear.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bcf/errors.hpp"
#include "bcf/linalg.hpp"
#include "bcf/random.hpp"

namespace bcf {

struct TreeSplit {
  Index feature = 0;  // zero-based
  double threshold = 0.0;
};

/// Complete binary tree of depth d stored in heap order: node i has children
/// 2i+1 (x_j ≤ s_j) and 2i+2 (x_j > s_j). Leaves are numbered left to right.
struct TreeFunction {
  Index dim = 0;
  Index effective_dims = 0;
  int depth = 0;
  std::vector<TreeSplit> splits;  // 2^d − 1 internal nodes
  std::vector<double> leaf_values;  // 2^d leaves

  double evaluate(const Eigen::Ref<const Eigen::RowVectorXd> &x) const {
    std::size_t node = 0;
    for (int level = 0; level < depth; ++level) {
      const TreeSplit &s = splits[node];
      node = x(s.feature) <= s.threshold ? 2 * node + 1 : 2 * node + 2;
    }
    return leaf_values[node - splits.size()];
  }
};

inline void validate(const TreeFunction &f) {
  if (f.depth < 1) throw invalid_input_error("tree depth must be >= 1");
  const std::size_t internal = (std::size_t{1} << f.depth) - 1;
  if (f.splits.size() != internal || f.leaf_values.size() != internal + 1) {
    throw invalid_input_error("tree of depth " + std::to_string(f.depth) +
                              " needs " + std::to_string(internal) + " splits and " +
                              std::to_string(internal + 1) + " leaves");
  }
  for (const auto &s : f.splits) {
    if (s.feature < 0 || s.feature >= f.effective_dims || f.effective_dims > f.dim) {
      throw dimension_error("tree split on feature " + std::to_string(s.feature) +
                            " outside the effective dimensions");
    }
  }
}

inline Vector evaluate_tree(const TreeFunction &f, const Matrix &x) {
  if (x.cols() != f.dim) {
    throw dimension_error("evaluate_tree: tree domain is " + std::to_string(f.dim) +
                          " but X has " + std::to_string(x.cols()) + " columns");
  }
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = f.evaluate(x.row(i));
  return out;
}

struct SplitRange {
  double lo = -2.0;
  double hi = 2.0;
};

/// Random tree on the first `p_eff` coordinates of Rᵖ. Splits are drawn in
/// heap order, then leaf values θ_h ~ N(0, theta_sd²).
inline TreeFunction sample_tree_function(Index p, Index p_eff, int depth,
                                         double theta_sd, SplitRange range,
                                         Rng &rng) {
  if (p_eff < 1 || p_eff > p) {
    throw dimension_error("sample_tree_function: need 1 <= p_eff <= p, got p_eff=" +
                          std::to_string(p_eff) + ", p=" + std::to_string(p));
  }
  if (depth < 1) throw invalid_input_error("sample_tree_function: depth must be >= 1");
  if (!(range.lo < range.hi)) throw invalid_input_error("sample_tree_function: empty split range");

  TreeFunction f;
  f.dim = p;
  f.effective_dims = p_eff;
  f.depth = depth;
  const std::size_t internal = (std::size_t{1} << depth) - 1;
  std::uniform_int_distribution<Index> pick_feature(0, p_eff - 1);
  std::uniform_real_distribution<double> pick_split(range.lo, range.hi);
  std::normal_distribution<double> leaf(0.0, theta_sd);
  f.splits.reserve(internal);
  for (std::size_t i = 0; i < internal; ++i) {
    const Index j = pick_feature(rng);
    f.splits.push_back({j, pick_split(rng)});
  }
  f.leaf_values.resize(internal + 1);
  for (auto &v : f.leaf_values) v = leaf(rng);
  return f;
}

/// x ↦ βᵀx + intercept.
struct LinearFunction {
  Vector coefficients;
  double intercept = 0.0;
};

/// The structural function f0: a sampled tree, a linear map, or any callable.
class StructuralFunction {
 public:
  using Callable = std::function<Vector(const Matrix &)>;

  StructuralFunction() = default;
  StructuralFunction(TreeFunction tree) : impl_(std::move(tree)) {}
  StructuralFunction(LinearFunction linear) : impl_(std::move(linear)) {}
  StructuralFunction(Index dim, Callable fn) : impl_(std::move(fn)), dim_(dim) {}

  Index dim() const {
    if (const auto *t = std::get_if<TreeFunction>(&impl_)) return t->dim;
    if (const auto *l = std::get_if<LinearFunction>(&impl_)) return l->coefficients.size();
    return dim_;
  }

  Vector operator()(const Matrix &x) const {
    if (x.cols() != dim()) {
      throw dimension_error("structural function expects " + std::to_string(dim()) +
                            " columns, got " + std::to_string(x.cols()));
    }
    if (const auto *t = std::get_if<TreeFunction>(&impl_)) return evaluate_tree(*t, x);
    if (const auto *l = std::get_if<LinearFunction>(&impl_)) {
      return (x * l->coefficients).array() + l->intercept;
    }
    return std::get<Callable>(impl_)(x);
  }

  const TreeFunction *tree() const { return std::get_if<TreeFunction>(&impl_); }
  const LinearFunction *linear() const { return std::get_if<LinearFunction>(&impl_); }

 private:
  std::variant<Callable, TreeFunction, LinearFunction> impl_;
  Index dim_ = 0;
};

/// Λ0: V ~ N(0, I_p) and U = c·ηᵀV + ε, ε ~ N(0, sd²), so that
/// E[VVᵀ] = I, E[U²] = c² + sd², E[VU] = c·η.
struct GaussianNoiseSpec {
  Index p = 0;
  double confounding_strength = 0.0;
  Vector eta;
  double baseline_sd = 0.1;

  Vector gamma0() const { return confounding_strength * eta; }

  double u_variance() const {
    return confounding_strength * confounding_strength + baseline_sd * baseline_sd;
  }

  /// Joint covariance of (U, V), U first.
  Matrix joint_covariance() const {
    Matrix cov = Matrix::Zero(p + 1, p + 1);
    cov(0, 0) = u_variance();
    cov.block(1, 0, p, 1) = gamma0();
    cov.block(0, 1, 1, p) = gamma0().transpose();
    cov.bottomRightCorner(p, p).setIdentity();
    return cov;
  }
};

inline void validate(const GaussianNoiseSpec &s) {
  if (s.eta.size() != s.p) throw dimension_error("noise spec: eta must have length p");
  if (std::abs(s.eta.norm() - 1.0) > 1e-10) throw invalid_input_error("noise spec: eta must be a unit vector");
  if (s.confounding_strength < 0.0 || s.baseline_sd < 0.0) {
    throw invalid_input_error("noise spec: c and sd must be non-negative");
  }
}

inline GaussianNoiseSpec sample_noise_spec(Index p, double c, Rng &rng,
                                           double baseline_sd = 0.1) {
  if (c < 0.0) throw invalid_input_error("sample_noise_spec: c must be >= 0");
  if (p < 1) throw dimension_error("sample_noise_spec: p must be >= 1");
  Vector eta = standard_normal(p, rng);
  while (eta.norm() == 0.0) eta = standard_normal(p, rng);
  eta /= eta.norm();
  return {p, c, std::move(eta), baseline_sd};
}

/// M0 = τ·A·Bᵀ with A (p×q), B (r×q) Haar; all nonzero singular values are τ.
inline Matrix sample_m0(Index p, Index r, Index q, double tau, Rng &rng) {
  if (q < 0 || q > std::min(p, r)) {
    throw dimension_error("sample_m0: rank " + std::to_string(q) +
                          " exceeds min(p, r) = " + std::to_string(std::min(p, r)));
  }
  if (!(tau >= 0.0)) throw invalid_input_error("sample_m0: tau must be >= 0");
  const OrthonormalBasis a = haar_orthonormal(p, q, rng);
  const OrthonormalBasis b = haar_orthonormal(r, q, rng);
  return tau * a.matrix() * b.matrix().transpose();
}

struct SimdgSpec {
  StructuralFunction f0;
  Matrix m0;  // p×r
  Index rank_q = 0;
  GaussianNoiseSpec noise;

  Index p() const { return m0.rows(); }
  Index r() const { return m0.cols(); }
};

inline void validate(const SimdgSpec &spec) {
  validate(spec.noise);
  if (spec.f0.dim() != spec.p() || spec.noise.p != spec.p()) {
    throw dimension_error("SIMDG: f0, M0 and noise dimensions disagree");
  }
  const Index rank = numerical_rank(spec.m0);
  if (rank != spec.rank_q) {
    throw invalid_input_error("SIMDG: rank(M0) = " + std::to_string(rank) +
                              " but rank_q = " + std::to_string(spec.rank_q));
  }
}

struct Dataset {
  Matrix x;  // n×p
  Vector y;  // n
  Matrix z;  // n×r
  std::optional<Vector> u;
  std::optional<Matrix> v;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
  Index r() const { return z.cols(); }
};

inline void validate(const Dataset &d) {
  if (d.y.size() != d.n() || d.z.rows() != d.n()) {
    throw dimension_error("dataset: X, Y, Z row counts disagree");
  }
  if (d.u && d.u->size() != d.n()) throw dimension_error("dataset: U has wrong length");
  if (d.v && (d.v->rows() != d.n() || d.v->cols() != d.p())) {
    throw dimension_error("dataset: V has wrong shape");
  }
  require_finite(d.x, "dataset X");
  require_finite(d.y, "dataset Y");
  require_finite(d.z, "dataset Z");
}

/// Draw n observations under the shifted exogenous law Z ~ N(0, k²I_r).
/// Z and (U, V) come from two child streams seeded off `rng`.
inline Dataset generate(const SimdgSpec &spec, double k, Index n, Rng &rng) {
  if (n < 1) throw invalid_input_error("generate: n must be >= 1");
  if (!(k > 0.0)) throw invalid_input_error("generate: k must be positive");
  Rng z_stream(rng());
  Rng noise_stream(rng());

  Dataset d;
  d.z = k * standard_normal(n, spec.r(), z_stream);
  Matrix v = standard_normal(n, spec.p(), noise_stream);
  const Vector eps = standard_normal(n, noise_stream);
  Vector u = v * spec.noise.gamma0() + spec.noise.baseline_sd * eps;
  d.x = d.z * spec.m0.transpose() + v;
  d.y = spec.f0(d.x) + u;
  d.u = std::move(u);
  d.v = std::move(v);
  return d;
}

/// One-hot style encoding with a zero-mean reference category: label j ≥ 1
/// maps to e_j, label 0 maps to −(π_1/π_0, …, π_r/π_0).
inline Matrix encode_categorical(const std::vector<int> &labels,
                                 const std::vector<double> &probabilities) {
  const auto r = static_cast<Index>(probabilities.size()) - 1;
  if (r < 1) throw invalid_input_error("encode_categorical: need at least two categories");
  double total = 0.0;
  for (double pi : probabilities) {
    if (!(pi > 0.0)) throw invalid_input_error("encode_categorical: probabilities must be positive");
    total += pi;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw invalid_input_error("encode_categorical: probabilities must sum to one");
  }
  Eigen::RowVectorXd reference(r);
  for (Index j = 0; j < r; ++j) reference(j) = -probabilities[j + 1] / probabilities[0];

  Matrix out = Matrix::Zero(static_cast<Index>(labels.size()), r);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label > r) {
      throw invalid_input_error("encode_categorical: label " + std::to_string(label) +
                                " outside {0, ..., " + std::to_string(r) + "}");
    }
    if (label == 0) {
      out.row(static_cast<Index>(i)) = reference;
    } else {
      out(static_cast<Index>(i), label - 1) = 1.0;
    }
  }
  return out;
}

/// Same encoding with π replaced by the empirical category frequencies.
inline Matrix encode_categorical_empirical(const std::vector<int> &labels, int num_categories) {
  if (num_categories < 2) throw invalid_input_error("encode_categorical: need at least two categories");
  std::vector<double> freq(static_cast<std::size_t>(num_categories), 0.0);
  for (int label : labels) {
    if (label < 0 || label >= num_categories) {
      throw invalid_input_error("encode_categorical: label " + std::to_string(label) +
                                " outside the category set");
    }
    freq[static_cast<std::size_t>(label)] += 1.0;
  }
  for (auto &f : freq) f /= static_cast<double>(labels.size());
  return encode_categorical(labels, freq);
}

}  // namespace bcf
