#include <cmath>

#include <gtest/gtest.h>

#include "bcf/simdg.hpp"

namespace bcf {
namespace {

TreeFunction stump(Index p, Index feature, double threshold, double left, double right) {
  TreeFunction f;
  f.dim = p;
  f.effective_dims = p;
  f.depth = 1;
  f.splits = {{feature, threshold}};
  f.leaf_values = {left, right};
  return f;
}

SimdgSpec small_spec(std::uint64_t seed, Index p = 4, Index r = 3, Index q = 2, double c = 2.0) {
  Rng rng(seed);
  SimdgSpec spec;
  spec.f0 = sample_tree_function(p, std::min<Index>(p, 3), 3, 1.5, {}, rng);
  spec.m0 = sample_m0(p, r, q, 1.0, rng);
  spec.rank_q = q;
  spec.noise = sample_noise_spec(p, c, rng);
  return spec;
}

TEST(TreeFunction, StumpBranchesOnThreshold) {
  const TreeFunction f = stump(2, 0, 0.0, -1.0, 3.0);
  Matrix x(3, 2);
  x << -0.5, 9.0,  //
      0.0, -9.0,   //
      0.25, 0.0;
  const Vector y = evaluate_tree(f, x);
  EXPECT_EQ(y(0), -1.0);
  EXPECT_EQ(y(1), -1.0);  // ties go left
  EXPECT_EQ(y(2), 3.0);
}

TEST(TreeFunction, DepthTwoHandTraversal) {
  TreeFunction f;
  f.dim = 2;
  f.effective_dims = 2;
  f.depth = 2;
  f.splits = {{0, 0.0}, {1, 1.0}, {1, -1.0}};
  f.leaf_values = {10.0, 20.0, 30.0, 40.0};
  Matrix x(4, 2);
  x << -1.0, 0.0,  //
      -1.0, 2.0,   //
      1.0, -2.0,   //
      1.0, 0.0;
  const Vector y = evaluate_tree(f, x);
  EXPECT_EQ(y, (Vector(4) << 10.0, 20.0, 30.0, 40.0).finished());
}

TEST(TreeFunction, WrongWidthFails) {
  EXPECT_THROW(evaluate_tree(stump(3, 0, 0.0, 0.0, 1.0), Matrix::Zero(2, 2)), dimension_error);
}

TEST(SampleTreeFunction, UsesOnlyEffectiveCoordinates) {
  Rng rng(1);
  const TreeFunction f = sample_tree_function(10, 3, 3, 1.5, {}, rng);
  EXPECT_NO_THROW(validate(f));
  EXPECT_EQ(f.splits.size(), 7u);
  EXPECT_EQ(f.leaf_values.size(), 8u);
  for (const auto &s : f.splits) {
    EXPECT_LT(s.feature, 3);
    EXPECT_GE(s.threshold, -2.0);
    EXPECT_LE(s.threshold, 2.0);
  }
  // changing an ineffective coordinate never changes the value
  Rng data_rng(2);
  Matrix x = standard_normal(200, 10, data_rng);
  const Vector before = evaluate_tree(f, x);
  x.rightCols(7) = standard_normal(200, 7, data_rng);
  EXPECT_EQ(before, evaluate_tree(f, x));
}

TEST(SampleTreeFunction, LeafValuesHaveRequestedSpread) {
  Rng rng(5);
  double sum_sq = 0.0;
  int count = 0;
  for (int t = 0; t < 2000; ++t) {
    const TreeFunction f = sample_tree_function(3, 3, 3, 1.5, {}, rng);
    for (double v : f.leaf_values) {
      sum_sq += v * v;
      ++count;
    }
  }
  EXPECT_NEAR(std::sqrt(sum_sq / count), 1.5, 0.03);
}

TEST(SampleTreeFunction, RejectsBadArguments) {
  Rng rng(0);
  EXPECT_THROW(sample_tree_function(2, 3, 3, 1.0, {}, rng), dimension_error);
  EXPECT_THROW(sample_tree_function(2, 2, 0, 1.0, {}, rng), invalid_input_error);
}

TEST(SampleM0, RankAndSingularValues) {
  Rng rng(7);
  const Matrix m0 = sample_m0(10, 5, 3, 2.5, rng);
  const Vector s = svd(m0).singular_values;
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s(i), 2.5, 1e-10);
  for (Index i = 3; i < s.size(); ++i) EXPECT_NEAR(s(i), 0.0, 1e-10);
  EXPECT_EQ(numerical_rank(m0), 3);
}

TEST(SampleM0, ZeroRankAndErrors) {
  Rng rng(7);
  EXPECT_EQ(sample_m0(4, 3, 0, 1.0, rng), Matrix::Zero(4, 3));
  EXPECT_THROW(sample_m0(4, 3, 4, 1.0, rng), dimension_error);
}

TEST(NoiseSpec, MomentsMatchDefinition) {
  GaussianNoiseSpec noise;
  noise.p = 3;
  noise.confounding_strength = 2.0;
  noise.eta = Vector::Unit(3, 1);
  EXPECT_DOUBLE_EQ(noise.u_variance(), 4.01);
  const Matrix cov = noise.joint_covariance();
  EXPECT_DOUBLE_EQ(cov(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(cov(2, 0), 2.0);
  EXPECT_DOUBLE_EQ(cov(0, 1), 0.0);
  EXPECT_EQ(cov.bottomRightCorner(3, 3), Matrix::Identity(3, 3));
}

TEST(NoiseSpec, SampledEtaIsUnit) {
  Rng rng(3);
  const GaussianNoiseSpec noise = sample_noise_spec(6, 1.0, rng);
  EXPECT_NEAR(noise.eta.norm(), 1.0, 1e-14);
  EXPECT_NO_THROW(validate(noise));
  EXPECT_THROW(sample_noise_spec(6, -1.0, rng), invalid_input_error);
}

TEST(Generate, SatisfiesStructuralEquations) {
  const SimdgSpec spec = small_spec(11);
  Rng rng(12);
  const Dataset d = generate(spec, 3.0, 500, rng);
  ASSERT_TRUE(d.u && d.v);
  EXPECT_LE((d.x - d.z * spec.m0.transpose() - *d.v).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((d.y - spec.f0(d.x) - *d.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NO_THROW(validate(d));
}

TEST(Generate, EmpiricalMomentsMatchSpec) {
  const SimdgSpec spec = small_spec(21);
  Rng rng(22);
  const Index n = 200000;
  const double k = 2.0;
  const Dataset d = generate(spec, k, n, rng);
  const double nd = static_cast<double>(n);
  EXPECT_NEAR(d.u->squaredNorm() / nd, 4.01, 0.05);
  const Vector vu = d.v->transpose() * *d.u / nd;
  EXPECT_LE((vu - spec.noise.gamma0()).cwiseAbs().maxCoeff(), 0.03);
  const Matrix vv = d.v->transpose() * *d.v / nd;
  EXPECT_LE((vv - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.02);
  const Matrix zz = d.z.transpose() * d.z / nd;
  EXPECT_LE((zz - k * k * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.08);
  // Z is independent of the noise
  EXPECT_LE((d.z.transpose() * *d.v / nd).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Generate, ZeroConfoundingDecouplesU) {
  const SimdgSpec spec = small_spec(31, 4, 3, 2, 0.0);
  Rng rng(32);
  const Dataset d = generate(spec, 1.0, 100000, rng);
  const double nd = 100000.0;
  EXPECT_NEAR(d.u->squaredNorm() / nd, 0.01, 0.001);
  EXPECT_LE((d.v->transpose() * *d.u / nd).cwiseAbs().maxCoeff(), 0.002);
}

TEST(Generate, DeterministicForSeed) {
  const SimdgSpec spec = small_spec(41);
  Rng a(5);
  Rng b(5);
  const Dataset da = generate(spec, 2.0, 50, a);
  const Dataset db = generate(spec, 2.0, 50, b);
  EXPECT_EQ(da.x, db.x);
  EXPECT_EQ(da.y, db.y);
  EXPECT_EQ(da.z, db.z);
  Rng c(6);
  EXPECT_NE(da.x, generate(spec, 2.0, 50, c).x);
}

TEST(Generate, RejectsBadShift) {
  const SimdgSpec spec = small_spec(51);
  Rng rng(0);
  EXPECT_THROW(generate(spec, 0.0, 10, rng), invalid_input_error);
  EXPECT_THROW(generate(spec, 1.0, 0, rng), invalid_input_error);
}

TEST(SimdgSpec, ValidateChecksRank) {
  SimdgSpec spec = small_spec(61);
  EXPECT_NO_THROW(validate(spec));
  spec.rank_q = 3;
  EXPECT_THROW(validate(spec), invalid_input_error);
}

TEST(StructuralFunction, LinearAndCallable) {
  LinearFunction lin{(Vector(2) << 1.0, -2.0).finished(), 0.5};
  const StructuralFunction f(lin);
  Matrix x(1, 2);
  x << 3.0, 1.0;
  EXPECT_DOUBLE_EQ(f(x)(0), 1.5);
  EXPECT_EQ(f.dim(), 2);
  ASSERT_NE(f.linear(), nullptr);
  EXPECT_EQ(f.tree(), nullptr);

  const StructuralFunction g(2, [](const Matrix &m) -> Vector { return m.rowwise().sum(); });
  EXPECT_DOUBLE_EQ(g(x)(0), 4.0);
}

TEST(EncodeCategorical, ReferenceCategoryIsMeanZero) {
  const std::vector<double> pi = {0.5, 0.25, 0.25};
  const Matrix e = encode_categorical({0, 1, 2}, pi);
  ASSERT_EQ(e.cols(), 2);
  EXPECT_DOUBLE_EQ(e(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(e(0, 1), -0.5);
  EXPECT_EQ(e.row(1), Eigen::RowVector2d(1.0, 0.0));
  EXPECT_EQ(e.row(2), Eigen::RowVector2d(0.0, 1.0));
  const Eigen::RowVector2d mean = pi[0] * e.row(0) + pi[1] * e.row(1) + pi[2] * e.row(2);
  EXPECT_NEAR(mean.norm(), 0.0, 1e-15);
}

TEST(EncodeCategorical, EmpiricalColumnsAreCentered) {
  const std::vector<int> labels = {0, 0, 1, 2, 2, 2, 1, 0, 0, 3};
  const Matrix e = encode_categorical_empirical(labels, 4);
  EXPECT_LE(e.colwise().mean().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EncodeCategorical, RejectsBadInput) {
  EXPECT_THROW(encode_categorical({0, 3}, {0.5, 0.25, 0.25}), invalid_input_error);
  EXPECT_THROW(encode_categorical({0}, {0.5, 0.25}), invalid_input_error);
  EXPECT_THROW(encode_categorical({0}, {1.0}), invalid_input_error);
}

}  // namespace
}  // namespace bcf
