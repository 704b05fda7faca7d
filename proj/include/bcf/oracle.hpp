#pragma once

// Population quantities for the Gaussian model U = γ0ᵀV + ε, V ~ N(0, Σ):
//
//   f⋆(x)      = f0(x) + γ0ᵀ Σ R (RᵀΣR)⁻¹ Rᵀ x
//   risk(f⋆)   = γ0ᵀ (Σ − ΣR(RᵀΣR)⁻¹RᵀΣ) γ0 + sd²      (the same for every k)
//
// with R a basis of ker(M0ᵀ); both reduce to the q = p case when R = 0.

#include <cmath>
#include <string>
#include <utility>

#include "bcf/errors.hpp"
#include "bcf/linalg.hpp"
#include "bcf/random.hpp"
#include "bcf/simdg.hpp"

namespace bcf {

struct ImpOracle {
  SimdgSpec spec;
  Vector gamma0;
  Matrix sigma;
  NullBasis r;
};

inline ImpOracle make_imp_oracle(const SimdgSpec &spec) {
  validate(spec.noise);
  if (spec.noise.p != spec.p()) {
    throw unsupported_oracle_error("IMP oracle: noise spec does not match M0");
  }
  return {spec, spec.noise.gamma0(), Matrix::Identity(spec.p(), spec.p()),
          null_space_basis(spec.m0, spec.rank_q)};
}

/// Coefficient vector w with f⋆(x) = f0(x) + wᵀx.
inline Vector imp_oracle_weights(const ImpOracle &oracle) {
  return invariant_precision(oracle.r, oracle.sigma) * (oracle.sigma * oracle.gamma0);
}

inline Vector imp_oracle_predict(const ImpOracle &oracle, const Matrix &x) {
  return oracle.spec.f0(x) + x * imp_oracle_weights(oracle);
}

inline double imp_oracle_risk(const ImpOracle &oracle) {
  const Matrix &s = oracle.sigma;
  const Matrix residual_cov = s - s * invariant_precision(oracle.r, s) * s;
  const double sd = oracle.spec.noise.baseline_sd;
  return oracle.gamma0.dot(residual_cov * oracle.gamma0) + sd * sd;
}

struct RiskDecomposition {
  double lhs = 0.0;     // Monte Carlo risk of f⋆ on P_tr
  double lhs_se = 0.0;  // its standard error
  double rhs = 0.0;     // ls_risk + extra_term
  double ls_risk = 0.0;
  double extra_term = 0.0;
};

/// Compares a Monte Carlo estimate of R(P_tr, f⋆) with the closed form
/// R(P_tr, f_LS) + E[(E[γ0(V) | RᵀX] − E[γ0(V) | X])²], using that under the
/// training law (k = 1) X ~ N(0, B1) with B1 = M0M0ᵀ + Σ.
inline RiskDecomposition risk_decomposition_check(const SimdgSpec &spec, Index n, Rng &rng) {
  if (n < 2) throw invalid_input_error("risk_decomposition_check: need n >= 2");
  const ImpOracle oracle = make_imp_oracle(spec);
  const Matrix &s = oracle.sigma;
  const Vector cov_vu = s * oracle.gamma0;
  const Matrix b1 = spec.m0 * spec.m0.transpose() + s;
  const Eigen::LDLT<Matrix> b1_ldlt(b1);
  const double sd = spec.noise.baseline_sd;

  RiskDecomposition out;
  const Vector ls_weights = b1_ldlt.solve(cov_vu);
  out.ls_risk = oracle.gamma0.dot(cov_vu) + sd * sd - cov_vu.dot(ls_weights);
  const Vector invariant_weights = imp_oracle_weights(oracle);
  const Vector gap = invariant_weights - ls_weights;
  out.extra_term = gap.dot(b1 * gap);
  out.rhs = out.ls_risk + out.extra_term;

  const Dataset data = generate(spec, 1.0, n, rng);
  const Vector sq = (data.y - imp_oracle_predict(oracle, data.x)).array().square();
  out.lhs = sq.mean();
  const double var = (sq.array() - out.lhs).square().sum() / static_cast<double>(n - 1);
  out.lhs_se = std::sqrt(var / static_cast<double>(n));
  return out;
}

}  // namespace bcf
