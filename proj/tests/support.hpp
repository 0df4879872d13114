#pragma once

#include "diva/functional.hpp"
#include "diva/model.hpp"
#include "diva/rdm.hpp"

#include <Eigen/QR>

#include <random>

namespace diva::test {

inline Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Matrix with_occupations(const Vector& eta, std::mt19937_64& rng) {
  const Matrix u = random_orthogonal(int(eta.size()), rng);
  Matrix m = u * eta.asDiagonal() * u.transpose();
  return 0.5 * (m + m.transpose());
}

/// Occupations drawn uniformly from [lo, hi].
inline Matrix random_block(int n, std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector eta(n);
  for (int i = 0; i < n; ++i) eta(i) = d(rng);
  return with_occupations(eta, rng);
}

inline Matrix random_projector(int n, int rank, std::mt19937_64& rng) {
  Vector eta = Vector::Zero(n);
  eta.head(rank).setOnes();
  return with_occupations(eta, rng);
}

inline DensityMatrix random_interior(int n, std::mt19937_64& rng, bool closed_shell = false) {
  if (closed_shell) return DensityMatrix::closed_shell(random_block(n, rng));
  return DensityMatrix(random_block(n, rng), random_block(n, rng));
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

/// Small molecule-like model with a random positive two-electron tensor.
inline ManyBodyModel random_tensor_model(int n, int n_up, int n_down, std::mt19937_64& rng) {
  ManyBodyModel m;
  m.n_spatial = n;
  m.one_body = random_symmetric(n, rng, 0.5);
  FullTensor t(n);
  std::uniform_real_distribution<double> d(0.0, 0.3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) t.set_symmetric(i, j, k, l, i == j && k == l ? 0.5 + d(rng) : 0.1 * d(rng));
  m.interaction = t;
  m.n_electrons = {n_up, n_down};
  return m;
}

inline double max_abs(const BlockPair& a, const BlockPair& b) {
  return std::max((a[0] - b[0]).cwiseAbs().maxCoeff(), (a[1] - b[1]).cwiseAbs().maxCoeff());
}

}  // namespace diva::test
