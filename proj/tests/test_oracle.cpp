#include <cmath>

#include <gtest/gtest.h>

#include "bcf/learners.hpp"
#include "bcf/oracle.hpp"

namespace bcf {
namespace {

SimdgSpec linear_spec(Index p, Index r, Index q, double c, std::uint64_t seed) {
  Rng rng(seed);
  SimdgSpec spec;
  spec.f0 = LinearFunction{standard_normal(p, rng), 0.0};
  spec.m0 = sample_m0(p, r, q, 1.0, rng);
  spec.rank_q = q;
  spec.noise = sample_noise_spec(p, c, rng);
  return spec;
}

TEST(ImpOracle, IdentityCovarianceWeights) {
  const SimdgSpec spec = linear_spec(6, 3, 2, 2.0, 1);
  const ImpOracle oracle = make_imp_oracle(spec);
  const Matrix &r = std::get<OrthonormalBasis>(oracle.r).matrix();
  const Vector expected = 2.0 * r * r.transpose() * spec.noise.eta;
  EXPECT_LE((imp_oracle_weights(oracle) - expected).cwiseAbs().maxCoeff(), 1e-12);
  const Vector proj = spec.noise.eta - r * (r.transpose() * spec.noise.eta);
  EXPECT_NEAR(imp_oracle_risk(oracle), 4.0 * proj.squaredNorm() + 0.01, 1e-12);
}

TEST(ImpOracle, FullRankShiftLeavesStructuralFunction) {
  const SimdgSpec spec = linear_spec(4, 4, 4, 2.0, 2);
  const ImpOracle oracle = make_imp_oracle(spec);
  ASSERT_TRUE(is_zero_map(oracle.r));
  Rng rng(3);
  const Matrix x = standard_normal(10, 4, rng);
  EXPECT_EQ(imp_oracle_predict(oracle, x), spec.f0(x));
  EXPECT_NEAR(imp_oracle_risk(oracle), 4.01, 1e-12);
}

TEST(ImpOracle, NoConfounding) {
  EXPECT_NEAR(imp_oracle_risk(make_imp_oracle(linear_spec(5, 3, 2, 0.0, 4))), 0.01, 1e-15);
}

TEST(ImpOracle, ConfoundingInsideKernelIsFullyUsable) {
  SimdgSpec spec = linear_spec(5, 3, 2, 2.0, 5);
  const Matrix r = std::get<OrthonormalBasis>(null_space_basis(spec.m0, 2)).matrix();
  spec.noise.eta = r.col(0);
  EXPECT_NEAR(imp_oracle_risk(make_imp_oracle(spec)), 0.01, 1e-12);
}

TEST(ImpOracle, ExampleFourClosedForm) {
  SimdgSpec spec;
  spec.f0 = LinearFunction{(Vector(2) << 1.0, 0.0).finished(), 0.0};
  spec.m0 = Matrix::Ones(2, 1);
  spec.rank_q = 1;
  spec.noise = {2, 1.0, Vector::Unit(2, 0), 0.1};
  const ImpOracle oracle = make_imp_oracle(spec);
  Matrix x(3, 2);
  x << 1.0, 0.0,  //
      0.0, 1.0,   //
      -2.0, 3.0;
  const Vector expected = x.col(0) + 0.5 * (x.col(0) - x.col(1));
  EXPECT_LE((imp_oracle_predict(oracle, x) - expected).cwiseAbs().maxCoeff(), 1e-12);
  // Var(V1 | V1 − V2) = 1/2
  EXPECT_NEAR(imp_oracle_risk(oracle), 0.5 + 0.01, 1e-12);
}

TEST(ImpOracle, EmpiricalRiskIsFlatInShift) {
  Rng rng(6);
  SimdgSpec spec;
  spec.f0 = sample_tree_function(10, 3, 3, 1.5, {}, rng);
  spec.m0 = sample_m0(10, 5, 5, 1.0, rng);
  spec.rank_q = 5;
  spec.noise = sample_noise_spec(10, 2.0, rng);
  const ImpOracle oracle = make_imp_oracle(spec);
  const double risk = imp_oracle_risk(oracle);
  for (double k : {1.0, 5.0, 10.0}) {
    const Dataset d = generate(spec, k, 10000, rng);
    const double mse = mean_squared_error(d.y, imp_oracle_predict(oracle, d.x));
    EXPECT_NEAR(mse / risk, 1.0, 0.05) << "k=" << k;
  }
}

TEST(RiskDecomposition, NoConfoundingBothSidesAreBaselineNoise) {
  const SimdgSpec spec = linear_spec(4, 4, 2, 0.0, 7);
  Rng rng(8);
  const RiskDecomposition check = risk_decomposition_check(spec, 20000, rng);
  EXPECT_NEAR(check.rhs, 0.01, 1e-15);
  EXPECT_NEAR(check.extra_term, 0.0, 1e-15);
  EXPECT_NEAR(check.lhs, 0.01, 3.0 * check.lhs_se);
}

TEST(RiskDecomposition, AgreesWithinMonteCarloError) {
  const SimdgSpec spec = linear_spec(4, 4, 2, 2.0, 9);
  Rng rng(10);
  const RiskDecomposition check = risk_decomposition_check(spec, 100000, rng);
  EXPECT_GT(check.extra_term, 0.0);
  EXPECT_LE(std::abs(check.lhs - check.rhs), 3.0 * check.lhs_se);
}

TEST(RiskDecomposition, FullRankCase) {
  const SimdgSpec spec = linear_spec(3, 3, 3, 2.0, 11);
  Rng rng(12);
  const RiskDecomposition check = risk_decomposition_check(spec, 100000, rng);
  EXPECT_NEAR(check.rhs, 4.01, 1e-10);
  EXPECT_LE(std::abs(check.lhs - check.rhs), 3.0 * check.lhs_se);
}

// The closed-form least-squares risk agrees with a large-sample OLS fit of
// the confounding residual Y − f0(X) on X.
TEST(RiskDecomposition, LeastSquaresRiskMatchesRegression) {
  const SimdgSpec spec = linear_spec(4, 4, 2, 2.0, 13);
  Rng rng(14);
  const RiskDecomposition check = risk_decomposition_check(spec, 10, rng);
  const Dataset d = generate(spec, 1.0, 200000, rng);
  const Vector residual = d.y - spec.f0(d.x);
  const double mse = mean_squared_error(residual, fit_ols(d.x, residual).predict(d.x));
  EXPECT_NEAR(mse, check.ls_risk, 0.02 * check.ls_risk);
}

}  // namespace
}  // namespace bcf
