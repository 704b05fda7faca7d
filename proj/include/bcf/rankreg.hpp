#pragma once

// Reduced-rank regression of X on Z with the penalized rank criterion
//
//   q̂(λ) = argmin_k ‖X − Z·M̂_kᵀ‖_F² + λ·k,
//
// λ chosen by K-fold cross-validation, plus the control residuals
// V̂ = X − Z·M̂ᵀ and a basis R̂ of ker(M̂ᵀ).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bcf/errors.hpp"
#include "bcf/linalg.hpp"
#include "bcf/random.hpp"

namespace bcf {

/// All rank-k least-squares fits of X on Z, computed once from the OLS fit.
///
/// With B = (ZᵀZ)⁻¹ZᵀX and F = Z·B = U·S·Wᵀ, the rank-k minimizer is
/// M_kᵀ = B·W_k·W_kᵀ, and its residual is ‖X − F‖² + Σ_{i>k} s_i².
class ReducedRankPath {
 public:
  ReducedRankPath(const Matrix &x, const Matrix &z) {
    if (x.rows() != z.rows()) {
      throw dimension_error("reduced-rank regression: X has " + std::to_string(x.rows()) +
                            " rows but Z has " + std::to_string(z.rows()));
    }
    require_finite(x, "reduced-rank regression X");
    require_finite(z, "reduced-rank regression Z");
    const Index r = z.cols();
    if (r == 0 || z.rows() < r) {
      throw rank_deficient_design_error("reduced-rank regression: need n >= r > 0, got n=" +
                                        std::to_string(z.rows()) + ", r=" + std::to_string(r));
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    qr.setThreshold(1e-10);
    if (qr.rank() < r) {
      throw rank_deficient_design_error("reduced-rank regression: Z'Z is singular (rank " +
                                        std::to_string(qr.rank()) + " < " + std::to_string(r) + ")");
    }
    ols_t_ = qr.solve(x);  // r×p
    const Matrix fitted = z * ols_t_;
    ols_rss_ = (x - fitted).squaredNorm();
    Eigen::JacobiSVD<Matrix> solver(fitted, Eigen::ComputeThinV);
    singular_values_ = solver.singularValues();
    right_vectors_ = solver.matrixV();
    max_rank_ = std::min(x.cols(), r);

    tail_.assign(static_cast<std::size_t>(max_rank_) + 1, 0.0);
    for (Index k = std::min<Index>(max_rank_, singular_values_.size()) - 1; k >= 0; --k) {
      tail_[static_cast<std::size_t>(k)] =
          tail_[static_cast<std::size_t>(k) + 1] + singular_values_(k) * singular_values_(k);
    }
  }

  Index max_rank() const { return max_rank_; }
  const Vector &singular_values() const { return singular_values_; }

  /// p×r coefficient matrix of rank ≤ k.
  Matrix coefficients(Index k) const {
    check_rank(k);
    const Index p = ols_t_.cols();
    if (k == 0) return Matrix::Zero(p, ols_t_.rows());
    const Matrix w = right_vectors_.leftCols(k);
    return (ols_t_ * w * w.transpose()).transpose();
  }

  /// ‖X − Z·M_kᵀ‖_F² from the closed form; non-increasing in k.
  double residual(Index k) const {
    check_rank(k);
    return ols_rss_ + tail_[static_cast<std::size_t>(k)];
  }

  std::vector<double> criterion(double lambda) const {
    std::vector<double> values(static_cast<std::size_t>(max_rank_) + 1);
    for (Index k = 0; k <= max_rank_; ++k) {
      values[static_cast<std::size_t>(k)] = residual(k) + lambda * static_cast<double>(k);
    }
    return values;
  }

  /// Minimizing rank of the penalized criterion; smallest k on ties.
  Index select(double lambda) const {
    const auto values = criterion(lambda);
    return static_cast<Index>(std::min_element(values.begin(), values.end()) - values.begin());
  }

 private:
  void check_rank(Index k) const {
    if (k < 0 || k > max_rank_) {
      throw dimension_error("reduced-rank regression: rank " + std::to_string(k) +
                            " outside [0, " + std::to_string(max_rank_) + "]");
    }
  }

  Matrix ols_t_;
  double ols_rss_ = 0.0;
  Vector singular_values_;
  Matrix right_vectors_;
  Index max_rank_ = 0;
  std::vector<double> tail_;
};

inline Matrix fit_rank_k(const Matrix &x, const Matrix &z, Index k) {
  return ReducedRankPath(x, z).coefficients(k);
}

struct RankSelection {
  Index q_hat = 0;
  Matrix m_hat;
  std::vector<double> criterion_values;
};

inline RankSelection select_rank(const Matrix &x, const Matrix &z, double lambda) {
  if (!(lambda > 0.0)) throw invalid_input_error("select_rank: lambda must be positive");
  const ReducedRankPath path(x, z);
  const Index q = path.select(lambda);
  return {q, path.coefficients(q), path.criterion(lambda)};
}

/// 20-point log grid over [1e-3, 1e2]·‖X‖_F² / min(p, r) by default.
inline std::vector<double> default_lambda_grid(const Matrix &x, Index r, int size = 20,
                                               double lo = 1e-3, double hi = 1e2) {
  const double denom = static_cast<double>(std::max<Index>(1, std::min(x.cols(), r)));
  const double scale = std::max(x.squaredNorm() / denom, 1e-300);
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const double t = size == 1 ? 0.0 : static_cast<double>(i) / (size - 1);
    grid[static_cast<std::size_t>(i)] = scale * lo * std::pow(hi / lo, t);
  }
  return grid;
}

struct CrossValidation {
  double lambda_star = 0.0;
  std::vector<double> mean_errors;  // aligned with the grid
};

/// K-fold CV of the held-out error ‖X_val − Z_val·M̂(λ)ᵀ‖_F² / n_val.
/// Returns the minimizing λ, the smallest one on ties.
inline CrossValidation cross_validate_lambda_detailed(const Matrix &x, const Matrix &z,
                                                      const std::vector<double> &grid,
                                                      int folds, Rng &rng) {
  if (grid.empty()) throw invalid_input_error("cross_validate_lambda: empty grid");
  if (folds < 2) throw invalid_input_error("cross_validate_lambda: need at least 2 folds");
  for (double l : grid) {
    if (!(l > 0.0)) throw invalid_input_error("cross_validate_lambda: grid values must be positive");
  }
  if (x.rows() != z.rows()) throw dimension_error("cross_validate_lambda: row mismatch");
  const Index n = x.rows();
  if (n < folds) throw invalid_input_error("cross_validate_lambda: fewer rows than folds");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    fold_of[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  }

  std::vector<double> errors(grid.size(), 0.0);
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<Index> train;
    std::vector<Index> held;
    for (Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == fold ? held : train).push_back(i);
    const Matrix x_train = x(train, Eigen::all);
    const Matrix z_train = z(train, Eigen::all);
    const Matrix x_val = x(held, Eigen::all);
    const Matrix z_val = z(held, Eigen::all);

    const ReducedRankPath path(x_train, z_train);
    std::vector<std::optional<double>> by_rank(static_cast<std::size_t>(path.max_rank()) + 1);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto q = static_cast<std::size_t>(path.select(grid[g]));
      if (!by_rank[q]) {
        const Matrix m = path.coefficients(static_cast<Index>(q));
        by_rank[q] = (x_val - z_val * m.transpose()).squaredNorm() / static_cast<double>(held.size());
      }
      errors[g] += *by_rank[q] / folds;
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (errors[g] < errors[best] || (errors[g] == errors[best] && grid[g] < grid[best])) best = g;
  }
  return {grid[best], std::move(errors)};
}

inline double cross_validate_lambda(const Matrix &x, const Matrix &z,
                                    const std::vector<double> &grid, int folds, Rng &rng) {
  return cross_validate_lambda_detailed(x, z, grid, folds, rng).lambda_star;
}

struct RankRegConfig {
  std::vector<double> lambda_grid;  // empty: default_lambda_grid
  int grid_size = 20;
  int folds = 5;
  bool center = true;
  std::uint64_t seed = 0;
};

struct RankRegFit {
  Matrix m_hat;  // p×r
  Index q_hat = 0;
  NullBasis r_hat;
  Matrix v_hat;  // n×p, centered scale
  double lambda_star = 0.0;
  std::vector<double> criterion_values;
  Eigen::RowVectorXd mean_x;
  Eigen::RowVectorXd mean_z;
};

inline RankRegFit fit_rankreg(const Matrix &x, const Matrix &z, const RankRegConfig &config = {}) {
  if (x.rows() != z.rows()) throw dimension_error("rankreg fit: X and Z row counts differ");
  RankRegFit out;
  out.mean_x = config.center ? Eigen::RowVectorXd(x.colwise().mean()) : Eigen::RowVectorXd::Zero(x.cols());
  out.mean_z = config.center ? Eigen::RowVectorXd(z.colwise().mean()) : Eigen::RowVectorXd::Zero(z.cols());
  const Matrix xc = x.rowwise() - out.mean_x;
  const Matrix zc = z.rowwise() - out.mean_z;

  const std::vector<double> grid =
      config.lambda_grid.empty() ? default_lambda_grid(xc, z.cols(), config.grid_size) : config.lambda_grid;
  Rng rng(config.seed);
  out.lambda_star = grid.size() == 1 ? grid.front() : cross_validate_lambda(xc, zc, grid, config.folds, rng);

  const ReducedRankPath path(xc, zc);
  out.q_hat = path.select(out.lambda_star);
  out.criterion_values = path.criterion(out.lambda_star);
  out.m_hat = path.coefficients(out.q_hat);
  out.r_hat = null_space_basis(out.m_hat, out.q_hat);
  out.v_hat = xc - zc * out.m_hat.transpose();
  return out;
}

}  // namespace bcf
