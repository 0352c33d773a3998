#pragma once

// Random instances for the tests, drawn with the standard library so the
// library's own generators are not involved.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "sven.hpp"

namespace testing_support {

struct Instance {
  sven::DenseMatrix z;
  sven::Vector y;
};

/// Correlated Gaussian covariates on arbitrary location/scale, with a sparse
/// signal in the first few columns.
inline Instance random_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index p, int signals = 3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nrm;
  std::uniform_real_distribution<double> loc(-3.0, 3.0), scl(0.2, 4.0);
  Instance in;
  in.z.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shared = nrm(gen);
    for (Eigen::Index j = 0; j < p; ++j) in.z(i, j) = 0.4 * shared + nrm(gen);
  }
  for (Eigen::Index j = 0; j < p; ++j) in.z.col(j) = (in.z.col(j).array() * scl(gen) + loc(gen)).matrix();
  in.y = sven::Vector::Constant(n, loc(gen));
  for (int s = 0; s < std::min<int>(signals, static_cast<int>(p)); ++s) in.y += (1.0 + s) * in.z.col(s) / in.z.col(s).norm() * std::sqrt(double(n));
  for (Eigen::Index i = 0; i < n; ++i) in.y[i] += 1.5 * nrm(gen);
  return in;
}

/// A random sorted model of the given size.
inline sven::Model random_model(std::mt19937_64& gen, int p, int size) {
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), gen);
  sven::Model g(idx.begin(), idx.begin() + size);
  std::sort(g.begin(), g.end());
  return g;
}

}  // namespace testing_support
