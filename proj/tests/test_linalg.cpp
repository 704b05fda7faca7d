#include <cmath>

#include <gtest/gtest.h>

#include "bcf/linalg.hpp"

namespace bcf {
namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normal(rows, cols, rng);
}

Matrix random_rank(Index rows, Index cols, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normal(rows, rank, rng) * standard_normal(cols, rank, rng).transpose();
}

Matrix random_spd(Index p, std::uint64_t seed) {
  const Matrix a = random_matrix(p, p, seed);
  return a * a.transpose() + 0.5 * Matrix::Identity(p, p);
}

double orthonormality_error(const Matrix &b) {
  return (b.transpose() * b - Matrix::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
}

TEST(Svd, IdentityFactorsAreIdentity) {
  const auto result = svd(Matrix::Identity(3, 3));
  EXPECT_TRUE(result.singular_values.isApprox(Vector::Ones(3)));
  EXPECT_NEAR((result.u.matrix() * result.v.matrix().transpose() - Matrix::Identity(3, 3)).norm(), 0.0, 1e-14);
}

TEST(Svd, DiagonalWithZero) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  const auto result = svd(a);
  EXPECT_DOUBLE_EQ(result.singular_values(0), 2.0);
  EXPECT_DOUBLE_EQ(result.singular_values(1), 0.0);
}

TEST(Svd, ReconstructsRandomMatrices) {
  for (auto [rows, cols] : {std::pair<Index, Index>{5, 3}, {3, 5}, {40, 40}, {200, 200}}) {
    const Matrix a = random_matrix(rows, cols, static_cast<std::uint64_t>(rows * 1000 + cols));
    const auto result = svd(a);
    EXPECT_LE((a - result.reconstruct()).norm(), 1e-8 * a.norm()) << rows << "x" << cols;
    for (Index i = 1; i < result.singular_values.size(); ++i) {
      EXPECT_GE(result.singular_values(i - 1), result.singular_values(i));
    }
    EXPECT_LE(orthonormality_error(result.u.matrix()), kOrthonormalTolerance);
    EXPECT_LE(orthonormality_error(result.v.matrix()), kOrthonormalTolerance);
  }
}

TEST(Svd, RejectsNonFinite) {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 0) = std::nan("");
  EXPECT_THROW(svd(a), invalid_input_error);
}

TEST(HaarOrthonormal, OneDimensionalIsASign) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto b = haar_orthonormal(1, 1, rng);
    EXPECT_DOUBLE_EQ(std::abs(b.matrix()(0, 0)), 1.0);
  }
}

TEST(HaarOrthonormal, ColumnsAreOrthonormal) {
  Rng rng(3);
  const auto b = haar_orthonormal(5, 3, rng);
  EXPECT_EQ(b.dim(), 5);
  EXPECT_EQ(b.size(), 3);
  EXPECT_LE(orthonormality_error(b.matrix()), 1e-10);
}

TEST(HaarOrthonormal, SameSeedSameFrame) {
  Rng a(99);
  Rng b(99);
  EXPECT_EQ(haar_orthonormal(6, 4, a).matrix(), haar_orthonormal(6, 4, b).matrix());
}

TEST(HaarOrthonormal, RejectsTooManyColumns) {
  Rng rng(0);
  EXPECT_THROW(haar_orthonormal(2, 3, rng), dimension_error);
}

// Rotation invariance implies E[Q·Qᵀ] = (m/d)·I and, for any fixed orthogonal
// O, that O·Q has the same first moments as Q.
TEST(HaarOrthonormal, SecondMomentIsIsotropic) {
  const Index d = 4;
  const Index m = 2;
  const int draws = 20000;
  Rng rng(11);
  Matrix mean_proj = Matrix::Zero(d, d);
  Vector mean_abs_first = Vector::Zero(d);
  for (int t = 0; t < draws; ++t) {
    const Matrix q = haar_orthonormal(d, m, rng).matrix();
    mean_proj += q * q.transpose();
    mean_abs_first += q.col(0).cwiseAbs();
  }
  mean_proj /= draws;
  mean_abs_first /= draws;
  EXPECT_LE((mean_proj - (static_cast<double>(m) / d) * Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 0.02);
  // every coordinate of a uniform unit vector has the same |.| distribution
  EXPECT_LE(mean_abs_first.maxCoeff() - mean_abs_first.minCoeff(), 0.02);
}

TEST(NullSpaceBasis, ExampleFourDirection) {
  Matrix m(2, 1);
  m << 1.0, 1.0;
  const NullBasis r = null_space_basis(m, 1);
  ASSERT_FALSE(is_zero_map(r));
  const Matrix &b = std::get<OrthonormalBasis>(r).matrix();
  ASSERT_EQ(b.cols(), 1);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(b(0, 0)), s, 1e-12);
  EXPECT_NEAR(b(0, 0), -b(1, 0), 1e-12);
}

TEST(NullSpaceBasis, FullRankGivesZeroMap) {
  const Matrix m = random_matrix(4, 4, 5);
  const NullBasis r = null_space_basis(m, 4);
  ASSERT_TRUE(is_zero_map(r));
  EXPECT_EQ(ambient_dim(r), 4);
  EXPECT_EQ(projection_matrix(r), Matrix::Zero(4, 4));
}

TEST(NullSpaceBasis, AnnihilatesLowRankMatrix) {
  const Matrix m = random_rank(10, 5, 3, 8);
  const NullBasis r = null_space_basis(m, 3);
  const Matrix &b = std::get<OrthonormalBasis>(r).matrix();
  EXPECT_EQ(b.cols(), 7);
  EXPECT_LE((b.transpose() * m).norm(), 1e-8 * m.norm());
  // Π_R + Π_col(M) = I
  const Matrix total = projection_matrix(r) + projection_matrix(column_space(m));
  EXPECT_LE((total - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(NullSpaceBasis, RankAboveDimensionFails) {
  EXPECT_THROW(null_space_basis(Matrix::Identity(3, 2), 4), dimension_error);
  EXPECT_THROW(null_space_basis(Matrix::Identity(3, 2), -1), dimension_error);
}

TEST(ProjectionMatrix, Examples) {
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_EQ(projection_matrix(OrthonormalBasis(e1)), expected);
  EXPECT_EQ(projection_matrix(OrthonormalBasis(Matrix::Identity(3, 3))), Matrix::Identity(3, 3));

  Matrix diag(2, 1);
  diag << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  Matrix half(2, 2);
  half << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LE((projection_matrix(OrthonormalBasis(diag)) - half).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectionMatrix, IdempotentAndSymmetric) {
  Rng rng(4);
  const Matrix p = projection_matrix(haar_orthonormal(7, 3, rng));
  EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(OrthonormalBasis, RejectsNonOrthonormalColumns) {
  EXPECT_THROW(OrthonormalBasis(Matrix::Ones(3, 2)), invalid_input_error);
  EXPECT_THROW(OrthonormalBasis(Matrix::Identity(2, 3)), dimension_error);
}

TEST(SubspaceDistance, Examples) {
  const Matrix a = random_matrix(6, 2, 1);
  EXPECT_NEAR(subspace_distance(a, a), 0.0, 1e-20);

  Matrix e1 = Matrix::Zero(2, 1);
  Matrix e2 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  EXPECT_NEAR(subspace_distance(e1, e2), 2.0, 1e-15);

  // Same column space, different spanning set.
  const Matrix b = a * random_matrix(2, 3, 2);
  EXPECT_NEAR(subspace_distance(a, b), 0.0, 1e-12);
}

TEST(SubspaceDistance, SymmetricAndZeroOnlyOnEqualSpaces) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = random_matrix(5, 2, seed);
    const Matrix b = random_matrix(5, 3, seed + 100);
    EXPECT_NEAR(subspace_distance(a, b), subspace_distance(b, a), 1e-12);
    EXPECT_GT(subspace_distance(a, b), 1e-3);
    EXPECT_NEAR(subspace_distance(a, a * random_matrix(2, 2, seed + 200)), 0.0, 1e-10);
  }
  // A rank-zero matrix spans {0}.
  EXPECT_NEAR(subspace_distance(Matrix::Zero(4, 2), random_matrix(4, 2, 7)), 2.0, 1e-12);
}

TEST(SubspaceDistance, RowMismatchFails) {
  EXPECT_THROW(subspace_distance(Matrix::Ones(3, 1), Matrix::Ones(4, 1)), dimension_error);
}

TEST(RegularizedInverse, MatchesDiagonalHandComputation) {
  Matrix m0 = Matrix::Zero(2, 1);
  m0(0, 0) = 1.0;
  for (double k : {1.0, 10.0, 1e3}) {
    const Matrix inv = regularized_inverse(m0, Matrix::Identity(2, 2), k);
    EXPECT_NEAR(inv(0, 0), 1.0 / (k * k + 1.0), 1e-15);
    EXPECT_NEAR(inv(1, 1), 1.0, 1e-15);
    EXPECT_NEAR(inv(0, 1), 0.0, 1e-15);
  }
  // limit diag(0, 1)
  Matrix limit = Matrix::Zero(2, 2);
  limit(1, 1) = 1.0;
  EXPECT_LE((regularized_inverse(m0, Matrix::Identity(2, 2), 1e6) - limit).norm(), 1e-11);
  EXPECT_EQ(invariant_precision(null_space_basis(m0, 1), Matrix::Identity(2, 2)), limit);
}

TEST(RegularizedInverse, IsTheExactInverse) {
  const Matrix m0 = random_rank(5, 3, 2, 21);
  const Matrix sigma = random_spd(5, 22);
  for (double k : {0.5, 10.0, 1e3}) {
    const Matrix bk = k * k * m0 * m0.transpose() + sigma;
    const Matrix inv = regularized_inverse(m0, sigma, k);
    EXPECT_LE((bk * inv - Matrix::Identity(5, 5)).norm(), 1e-8 * std::max(1.0, k * k));
  }
}

TEST(RegularizedInverse, FullRankTendsToZero) {
  const Matrix m0 = random_matrix(3, 3, 31);
  const Matrix inv = regularized_inverse(m0, Matrix::Identity(3, 3), 1e4);
  EXPECT_LE(inv.norm(), 1e-6);
}

TEST(RegularizedInverse, ConvergesToInvariantPrecision) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m0 = random_rank(4, 4, 2, 40 + seed);
    const Matrix sigma = random_spd(4, 50 + seed);
    const Matrix limit = invariant_precision(null_space_basis(m0, 2), sigma);
    double previous = std::numeric_limits<double>::infinity();
    for (double k : {10.0, 1e2, 1e3, 1e4}) {
      const double err = (regularized_inverse(m0, sigma, k) - limit).norm();
      EXPECT_LE(err, previous);
      previous = err;
    }
    EXPECT_LE(previous, 1e-5 * limit.norm());
  }
}

TEST(RegularizedInverse, RejectsNonSpdSigma) {
  Matrix sigma = Matrix::Identity(2, 2);
  sigma(1, 1) = -1.0;
  EXPECT_THROW(regularized_inverse(Matrix::Ones(2, 1), sigma, 1.0), invalid_input_error);
  EXPECT_THROW(regularized_inverse(Matrix::Ones(3, 1), Matrix::Identity(2, 2), 1.0), dimension_error);
}

}  // namespace
}  // namespace bcf
