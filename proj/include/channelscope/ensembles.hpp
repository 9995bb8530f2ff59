#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "channelscope/curves.hpp"
#include "channelscope/linalg.hpp"

namespace channelscope {

using Rng = std::mt19937_64;

// Antipodal pure-state pairs with directions from the Fibonacci sphere
// lattice: deterministic, roughly uniform coverage.
inline std::vector<std::pair<Matrix, Matrix>> fibonacci_antipodal_pairs(int count) {
  if (count < 1) raise(errc::bad_params, "fibonacci_antipodal_pairs");
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  const double two_pi = 8.0 * std::atan(1.0);
  std::vector<std::pair<Matrix, Matrix>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = two_pi * i / golden;
    const double x = r * std::cos(phi), y = r * std::sin(phi);
    Matrix dir = x * pauli_x() + y * pauli_y() + z * pauli_z();
    Matrix plus = 0.5 * (Matrix::Identity(2, 2) + dir);
    Matrix minus = 0.5 * (Matrix::Identity(2, 2) - dir);
    out.emplace_back(std::move(plus), std::move(minus));
  }
  return out;
}

inline Matrix ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  return g;
}

inline Matrix random_mixed_state(int d, Rng& rng) {
  if (d < 2) raise(errc::bad_dimension, "random_mixed_state");
  const Matrix g = ginibre(d, d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return rho;
}

inline Matrix random_pure_entangled(int dim_a, int dim_b, Rng& rng) {
  if (dim_a < 2 || dim_b < 2) raise(errc::bad_dimension, "random_pure_entangled");
  Vector psi = ginibre(dim_a * dim_b, 1, rng);
  psi /= psi.norm();
  return psi * psi.adjoint();
}

// Haar-flavored random CPTP map: a stack of Ginibre blocks normalized by
// S^{-1/2} of their completeness sum.
inline std::vector<Matrix> random_channel(int d, int n_kraus, Rng& rng) {
  if (d < 2 || n_kraus < 1) raise(errc::bad_dimension, "random_channel");
  std::vector<Matrix> ops;
  ops.reserve(n_kraus);
  Matrix s = Matrix::Zero(d, d);
  for (int k = 0; k < n_kraus; ++k) {
    ops.push_back(ginibre(d, d, rng));
    s += ops.back().adjoint() * ops.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const RealVector scale = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix root_inv =
      es.eigenvectors() * scale.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  for (auto& e : ops) e = e * root_inv;
  return ops;
}

inline RealVector random_simplex(int d, Rng& rng) {
  if (d < 2) raise(errc::bad_dimension, "random_simplex");
  std::uniform_real_distribution<double> uni(1e-12, 1.0);
  RealVector p(d);
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    p(i) = -std::log(uni(rng));
    sum += p(i);
  }
  return p / sum;
}

struct CurvePair {
  ParamCurve p;
  ParamCurve lambda;
};

// A population-vs-damping curve pair that passes the admission validators:
// lambda(0) = 0, both confined to [0,1], lambda non-decreasing at 0.
inline CurvePair random_admissible_pair(Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double r = 0.2 + 2.8 * uni(rng);
  const double s = 0.3 + 0.7 * uni(rng);
  ParamCurve lambda = (uni(rng) < 0.5) ? ParamCurve::exp_rise(r, s)
                                       : ParamCurve::tanh_scaled(r, s);
  ParamCurve p = (uni(rng) < 0.5)
                     ? ParamCurve::constant(uni(rng))
                     : ParamCurve::exp_decay(0.2 + 2.8 * uni(rng), uni(rng));
  return {std::move(p), std::move(lambda)};
}

struct StatePairEnsemble {
  std::vector<std::pair<Matrix, Matrix>> pairs;
  std::string policy;
};

// Default probe set for distinguishability scans on qubits: antipodal pure
// pairs cover the sphere, Ginibre pairs probe the interior.
inline StatePairEnsemble default_pair_ensemble(int lattice = 200, int mixed = 100,
                                               std::uint64_t seed = 42) {
  StatePairEnsemble ens;
  ens.pairs = fibonacci_antipodal_pairs(lattice);
  Rng rng(seed);
  for (int i = 0; i < mixed; ++i)
    ens.pairs.emplace_back(random_mixed_state(2, rng), random_mixed_state(2, rng));
  ens.policy = "fibonacci-" + std::to_string(lattice) + "+ginibre-" + std::to_string(mixed) +
               ";seed=" + std::to_string(seed);
  return ens;
}

}  // namespace channelscope
