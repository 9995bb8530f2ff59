#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "channelscope/config.hpp"
#include "channelscope/errors.hpp"

namespace channelscope {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex cxi{0.0, 1.0};

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) raise(errc::non_square, who);
}

inline double hermiticity_defect(const Matrix& a) {
  require_square(a, "hermiticity_defect");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

struct EigResult {
  RealVector values;  // ascending
  Matrix vectors;     // columns, orthonormal
};

// Eigendecomposition of an operator that is Hermitian up to roundoff: the
// input is symmetrized first, but only when its defect is within tolerance.
inline EigResult herm_eig(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  double defect = hermiticity_defect(a);
  if (!(defect <= tol.structural))
    raise(errc::not_hermitian, "herm_eig: defect " + std::to_string(defect));
  Matrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) raise(errc::not_converged, "herm_eig");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  return herm_eig(a, tol).values.minCoeff();
}

// Sum of singular values. For Hermitian input this equals sum |eigenvalue|.
inline double trace_norm(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) raise(errc::non_square, "trace_norm: empty");
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

enum class Subsystem { A, B };

// Partial trace over one factor of C^{dim_a} (x) C^{dim_b}, index (a,b) -> a*dim_b + b.
inline Matrix partial_trace(const Matrix& rho, int dim_a, int dim_b, Subsystem traced_out) {
  if (dim_a < 1 || dim_b < 1) raise(errc::bad_dimension, "partial_trace");
  if (rho.rows() != dim_a * dim_b || rho.cols() != dim_a * dim_b)
    raise(errc::dimension_mismatch, "partial_trace: operator is not dim_a*dim_b");
  if (traced_out == Subsystem::A) {
    Matrix out = Matrix::Zero(dim_b, dim_b);
    for (int a = 0; a < dim_a; ++a)
      out += rho.block(a * dim_b, a * dim_b, dim_b, dim_b);
    return out;
  }
  Matrix out = Matrix::Zero(dim_a, dim_a);
  for (int a = 0; a < dim_a; ++a)
    for (int ap = 0; ap < dim_a; ++ap) {
      Complex s = 0.0;
      for (int b = 0; b < dim_b; ++b) s += rho(a * dim_b + b, ap * dim_b + b);
      out(a, ap) = s;
    }
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline RealMatrix real_exp(const RealMatrix& a) {
  if (a.rows() != a.cols()) raise(errc::non_square, "real_exp");
  return a.exp();
}

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, -cxi, cxi, 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Matrix pauli(int j) {
  switch (j) {
    case 0: return Matrix::Identity(2, 2);
    case 1: return pauli_x();
    case 2: return pauli_y();
    case 3: return pauli_z();
  }
  raise(errc::bad_dimension, "pauli: index must be 0..3");
}

// Hermitian orthonormal operator basis {G_0 = I/sqrt(d), symmetric pairs,
// antisymmetric pairs, diagonal ladder}, Tr(G_i G_j) = delta_ij. Pair blocks
// run over j < k in lexicographic order; for d = 2 the traceless part is
// exactly (sigma_x, sigma_y, sigma_z)/sqrt(2).
inline std::vector<Matrix> gell_mann_basis(int d) {
  if (d < 2) raise(errc::bad_dimension, "gell_mann_basis: need d >= 2");
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(d) * d);
  basis.push_back(Matrix::Identity(d, d) / std::sqrt(static_cast<double>(d)));
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix m = Matrix::Zero(d, d);
      m(j, k) = r;
      m(k, j) = r;
      basis.push_back(m);
    }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix m = Matrix::Zero(d, d);
      m(j, k) = -cxi * r;
      m(k, j) = cxi * r;
      basis.push_back(m);
    }
  for (int l = 1; l < d; ++l) {
    Matrix m = Matrix::Zero(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int j = 0; j < l; ++j) m(j, j) = norm;
    m(l, l) = -static_cast<double>(l) * norm;
    basis.push_back(m);
  }
  return basis;
}

// Process-wide cache: the basis for a given d is immutable once built, so
// hot paths (transfer conversions at every grid point) can share it.
inline const std::vector<Matrix>& shared_basis(int d) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const std::vector<Matrix>>> cache;
  std::shared_ptr<const std::vector<Matrix>> entry;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(d);
    if (it == cache.end()) {
      entry = std::make_shared<const std::vector<Matrix>>(gell_mann_basis(d));
      cache.emplace(d, entry);
    } else {
      entry = it->second;
    }
  }
  // Entries are never erased, so the reference stays valid for the process.
  return *entry;
}

// Coordinates x_i = sqrt(d) Tr(G_i rho); for d = 2 and i >= 1 this is the
// standard Bloch vector.
inline RealVector bloch_coordinates(const Matrix& rho) {
  require_square(rho, "bloch_coordinates");
  const int d = static_cast<int>(rho.rows());
  const auto& basis = shared_basis(d);
  RealVector x(d * d);
  const double scale = std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d * d; ++i) x(i) = scale * (basis[i].adjoint() * rho).trace().real();
  return x;
}

inline Matrix state_from_bloch(const RealVector& x, int d) {
  if (x.size() != d * d) raise(errc::dimension_mismatch, "state_from_bloch");
  const auto& basis = shared_basis(d);
  Matrix rho = Matrix::Zero(d, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d * d; ++i) rho += scale * x(i) * basis[i];
  return rho;
}

}  // namespace channelscope
