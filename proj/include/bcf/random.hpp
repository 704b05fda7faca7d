#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace bcf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child seeds so that
/// repetitions and sub-streams never share state.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols,
                                       Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill order so that a matrix drawn with n rows is a prefix of
  // the same matrix drawn with more rows.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

inline Eigen::VectorXd standard_normal(Eigen::Index size, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    out(i) = normal(rng);
  }
  return out;
}

}  // namespace bcf
