#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "bcf/errors.hpp"
#include "bcf/random.hpp"

namespace bcf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative singular-value cut-off used whenever a column space has to be
/// read off a matrix whose rank is not supplied externally.
inline constexpr double kRankTolerance = 1e-10;

/// Maximum tolerated deviation of BᵀB from the identity.
inline constexpr double kOrthonormalTolerance = 1e-10;

inline void require_finite(const Matrix &a, const char *what) {
  if (!a.allFinite()) {
    throw invalid_input_error(std::string(what) + ": non-finite entries");
  }
}

inline std::string shape_string(const Matrix &a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

/// A d×m matrix with orthonormal columns (m ≤ d).
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;

  explicit OrthonormalBasis(Matrix columns) : columns_(std::move(columns)) {
    if (columns_.cols() > columns_.rows()) {
      throw dimension_error("orthonormal basis with more columns than rows: " +
                            shape_string(columns_));
    }
    require_finite(columns_, "orthonormal basis");
    if (columns_.cols() == 0) return;
    const Matrix gram = columns_.transpose() * columns_;
    const double dev =
        (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (dev > kOrthonormalTolerance) {
      throw invalid_input_error("columns are not orthonormal (max deviation " +
                                std::to_string(dev) + ")");
    }
  }

  const Matrix &matrix() const { return columns_; }
  Index dim() const { return columns_.rows(); }
  Index size() const { return columns_.cols(); }

 private:
  Matrix columns_;
};

/// Marker for the rank-p case, where ker(Mᵀ) = {0} and the null-space map
/// is the zero map on Rᵖ.
struct ZeroMap {
  Index dim = 0;
};

using NullBasis = std::variant<OrthonormalBasis, ZeroMap>;

inline bool is_zero_map(const NullBasis &b) {
  return std::holds_alternative<ZeroMap>(b);
}

inline Index ambient_dim(const NullBasis &b) {
  return std::visit(
      [](const auto &v) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ZeroMap>) {
          return v.dim;
        } else {
          return v.dim();
        }
      },
      b);
}

struct SvdResult {
  OrthonormalBasis u;
  Vector singular_values;  // descending
  OrthonormalBasis v;

  Matrix reconstruct() const {
    return u.matrix() * singular_values.asDiagonal() * v.matrix().transpose();
  }
};

/// Thin SVD: A = U diag(s) Vᵀ with s sorted descending.
inline SvdResult svd(const Matrix &a) {
  require_finite(a, "svd");
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {OrthonormalBasis(solver.matrixU()), solver.singularValues(),
          OrthonormalBasis(solver.matrixV())};
}

/// Numerical rank using a relative threshold on the singular values.
inline Index numerical_rank(const Matrix &a, double rel_tol = kRankTolerance) {
  if (a.size() == 0) return 0;
  require_finite(a, "numerical_rank");
  Eigen::JacobiSVD<Matrix> solver(a);
  const Vector &s = solver.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > rel_tol * s(0)).count();
}

/// Uniform (Haar) draw of a d×m orthonormal frame: QR of a Gaussian matrix
/// with the signs of diag(R) forced positive.
inline OrthonormalBasis haar_orthonormal(Index d, Index m, Rng &rng) {
  if (m > d || m < 0 || d < 0) {
    throw dimension_error("haar_orthonormal: need 0 <= m <= d, got d=" +
                          std::to_string(d) + ", m=" + std::to_string(m));
  }
  if (m == 0) return OrthonormalBasis(Matrix(d, 0));
  const Matrix g = standard_normal(d, m, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, m);
  const auto r_diag = qr.matrixQR().diagonal();
  for (Index j = 0; j < m; ++j) {
    if (r_diag(j) < 0.0) q.col(j) *= -1.0;
  }
  return OrthonormalBasis(std::move(q));
}

/// Orthonormal basis of ker(Mᵀ) for a p×r matrix M of rank q: the last p−q
/// left singular vectors. Returns ZeroMap when q = p.
inline NullBasis null_space_basis(const Matrix &m, Index q) {
  const Index p = m.rows();
  require_finite(m, "null_space_basis");
  if (q < 0 || q > p) {
    throw dimension_error("null_space_basis: rank " + std::to_string(q) +
                          " outside [0, " + std::to_string(p) + "]");
  }
  if (q == p) return ZeroMap{p};
  if (q > std::min(p, m.cols())) {
    throw dimension_error("null_space_basis: rank " + std::to_string(q) +
                          " exceeds min(p, r) for " + shape_string(m));
  }
  if (q == 0) return OrthonormalBasis(Matrix::Identity(p, p));
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeFullU);
  return OrthonormalBasis(solver.matrixU().rightCols(p - q));
}

inline Matrix projection_matrix(const OrthonormalBasis &b) {
  return b.matrix() * b.matrix().transpose();
}

inline Matrix projection_matrix(const NullBasis &b) {
  if (const auto *zero = std::get_if<ZeroMap>(&b)) {
    return Matrix::Zero(zero->dim, zero->dim);
  }
  return projection_matrix(std::get<OrthonormalBasis>(b));
}

/// Orthonormal basis of col(A), rank read with a relative threshold.
inline OrthonormalBasis column_space(const Matrix &a,
                                     double rel_tol = kRankTolerance) {
  require_finite(a, "column_space");
  if (a.cols() == 0) return OrthonormalBasis(Matrix(a.rows(), 0));
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU);
  const Vector &s = solver.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) rank = (s.array() > rel_tol * s(0)).count();
  return OrthonormalBasis(solver.matrixU().leftCols(rank));
}

/// ‖Π_col(A) − Π_col(B)‖_F²
inline double subspace_distance(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows()) {
    throw dimension_error("subspace_distance: row mismatch " + shape_string(a) +
                          " vs " + shape_string(b));
  }
  const Matrix diff =
      projection_matrix(column_space(a)) - projection_matrix(column_space(b));
  return diff.squaredNorm();
}

inline void require_spd(const Matrix &sigma, const char *what) {
  require_finite(sigma, what);
  if (sigma.rows() != sigma.cols()) {
    throw dimension_error(std::string(what) + ": not square " + shape_string(sigma));
  }
  if (sigma.size() == 0) return;
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw invalid_input_error(std::string(what) + ": not symmetric");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw invalid_input_error(std::string(what) + ": not positive definite");
  }
}

/// Inverse of B_k = k²·M0·M0ᵀ + Σ. As k grows this tends to
/// R(RᵀΣR)⁻¹Rᵀ with R a basis of ker(M0ᵀ).
inline Matrix regularized_inverse(const Matrix &m0, const Matrix &sigma, double k) {
  require_spd(sigma, "regularized_inverse");
  require_finite(m0, "regularized_inverse");
  if (m0.rows() != sigma.rows()) {
    throw dimension_error("regularized_inverse: M0 is " + shape_string(m0) +
                          " but Sigma is " + shape_string(sigma));
  }
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw invalid_input_error("regularized_inverse: k must be positive");
  }
  const Matrix bk = k * k * (m0 * m0.transpose()) + sigma;
  Eigen::LDLT<Matrix> ldlt(bk);
  if (ldlt.info() != Eigen::Success) {
    throw numerical_error("regularized_inverse: factorization failed");
  }
  Matrix inv = ldlt.solve(Matrix::Identity(bk.rows(), bk.cols()));
  return 0.5 * (inv + inv.transpose());
}

/// R(RᵀΣR)⁻¹Rᵀ; the zero matrix for ZeroMap.
inline Matrix invariant_precision(const NullBasis &r, const Matrix &sigma) {
  if (is_zero_map(r)) {
    const Index p = ambient_dim(r);
    return Matrix::Zero(p, p);
  }
  const Matrix &rm = std::get<OrthonormalBasis>(r).matrix();
  const Matrix inner = rm.transpose() * sigma * rm;
  return rm * inner.ldlt().solve(rm.transpose());
}

}  // namespace bcf
