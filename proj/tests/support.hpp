#pragma once

// Small helpers shared by the unit tests.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "innerseries/model.hpp"

namespace test_support {

using innerseries::SampleMatrix;

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

/// Well-conditioned random invertible matrix.
inline Eigen::MatrixXd random_invertible(std::mt19937_64& rng, int n) {
  return Eigen::MatrixXd::Identity(n, n) * 2.0 + 0.5 * random_matrix(rng, n, n);
}

/// n rows of independent unit-variance channels with distinct kurtosis:
/// channel i is a mixture of a Laplace, uniform and binary law.
inline SampleMatrix independent_channels(std::mt19937_64& rng, Eigen::Index n, int dims) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution coin(0.5);
  SampleMatrix out(n, dims);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (int c = 0; c < dims; ++c) {
      double v = 0.0;
      switch (c % 3) {
        case 0: v = (coin(rng) ? 1.0 : -1.0) * e(rng) / std::sqrt(2.0); break;
        case 1: v = u(rng) * std::sqrt(3.0); break;
        default: v = coin(rng) ? 1.0 : -1.0; break;
      }
      out(k, c) = v;
    }
  }
  return out;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("innerseries_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace test_support
