#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "channelscope/linalg.hpp"

namespace channelscope {

struct KrausSet {
  int dim = 0;
  std::vector<Matrix> ops;
};

// Action on sqrt(d)-scaled basis coordinates: x' = F x. Real because the
// map sends Hermitian operators to Hermitian operators.
struct TransferMatrix {
  int dim = 0;
  RealMatrix F;
};

// x' = M x + tau on the traceless block; for d = 2 this is the Bloch
// ellipsoid map.
struct AffineRep {
  RealMatrix M;
  RealVector tau;
};

// Normalized so that a trace-preserving map gives Tr(chi) = 1.
struct ChoiMatrix {
  int dim = 0;
  Matrix chi;
};

inline double completeness_defect(const KrausSet& ks) {
  if (ks.dim < 2 || ks.ops.empty()) raise(errc::bad_dimension, "completeness_defect");
  Matrix acc = Matrix::Zero(ks.dim, ks.dim);
  for (const auto& e : ks.ops) {
    if (e.rows() != ks.dim || e.cols() != ks.dim)
      raise(errc::dimension_mismatch, "completeness_defect: Kraus operator shape");
    acc += e.adjoint() * e;
  }
  return (acc - Matrix::Identity(ks.dim, ks.dim)).cwiseAbs().maxCoeff();
}

inline void require_complete(const KrausSet& ks, const Tolerances& tol = default_tolerances()) {
  const double defect = completeness_defect(ks);
  if (!(defect <= tol.structural))
    raise(errc::incomplete_kraus, "completeness defect " + std::to_string(defect));
}

inline Matrix apply_kraus(const KrausSet& ks, const Matrix& rho) {
  if (rho.rows() != ks.dim || rho.cols() != ks.dim)
    raise(errc::dimension_mismatch, "apply_kraus");
  Matrix out = Matrix::Zero(ks.dim, ks.dim);
  for (const auto& e : ks.ops) out += e * rho * e.adjoint();
  return out;
}

inline TransferMatrix kraus_to_transfer(const KrausSet& ks,
                                        const Tolerances& tol = default_tolerances()) {
  require_complete(ks, tol);
  const int d = ks.dim, n = d * d;
  const auto& basis = shared_basis(d);
  TransferMatrix tm{d, RealMatrix(n, n)};
  for (int j = 0; j < n; ++j) {
    const Matrix image = apply_kraus(ks, basis[j]);
    for (int i = 0; i < n; ++i) tm.F(i, j) = (basis[i].adjoint() * image).trace().real();
  }
  return tm;
}

// Splits off the affine action on the traceless coordinates. The first row
// must read (1, 0, ..., 0) for a trace-preserving map; the first column
// below it is the translation.
inline AffineRep transfer_to_affine(const TransferMatrix& tm,
                                    const Tolerances& tol = default_tolerances()) {
  const int n = tm.dim * tm.dim;
  if (tm.F.rows() != n || tm.F.cols() != n)
    raise(errc::dimension_mismatch, "transfer_to_affine");
  double row_defect = std::abs(tm.F(0, 0) - 1.0);
  for (int j = 1; j < n; ++j) row_defect = std::max(row_defect, std::abs(tm.F(0, j)));
  if (!(row_defect <= tol.structural))
    raise(errc::malformed_transfer,
          "first row is not (1,0,...,0); defect " + std::to_string(row_defect));
  return {tm.F.block(1, 1, n - 1, n - 1), tm.F.block(1, 0, n - 1, 1)};
}

inline TransferMatrix affine_to_transfer(const AffineRep& ar, int dim) {
  const int n = dim * dim;
  if (ar.M.rows() != n - 1 || ar.M.cols() != n - 1 || ar.tau.size() != n - 1)
    raise(errc::dimension_mismatch, "affine_to_transfer");
  TransferMatrix tm{dim, RealMatrix::Zero(n, n)};
  tm.F(0, 0) = 1.0;
  tm.F.block(1, 0, n - 1, 1) = ar.tau;
  tm.F.block(1, 1, n - 1, n - 1) = ar.M;
  return tm;
}

namespace detail {

inline Vector vec_row_major(const Matrix& a) {
  Vector v(a.size());
  int idx = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) v(idx++) = a(i, j);
  return v;
}

}  // namespace detail

inline ChoiMatrix kraus_to_choi(const KrausSet& ks,
                                const Tolerances& tol = default_tolerances()) {
  require_complete(ks, tol);
  const int d = ks.dim;
  Matrix chi = Matrix::Zero(d * d, d * d);
  for (const auto& e : ks.ops) {
    const Vector w = detail::vec_row_major(e);
    chi += w * w.adjoint();
  }
  chi /= static_cast<double>(d);
  return {d, chi};
}

inline ChoiMatrix transfer_to_choi(const TransferMatrix& tm) {
  const int d = tm.dim, n = d * d;
  if (tm.F.rows() != n || tm.F.cols() != n) raise(errc::dimension_mismatch, "transfer_to_choi");
  const auto& basis = shared_basis(d);
  Matrix chi = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (tm.F(i, j) == 0.0) continue;
      chi += tm.F(i, j) * kron(basis[i], basis[j].transpose());
    }
  chi /= static_cast<double>(d);
  return {d, chi};
}

// Inverse of transfer_to_choi: F_ij = d * Tr[(G_i (x) G_j^T) chi]. The
// imaginary parts cancel for any Hermiticity-preserving chi.
inline TransferMatrix choi_to_transfer(const ChoiMatrix& cm) {
  const int d = cm.dim, n = d * d;
  if (cm.chi.rows() != n || cm.chi.cols() != n) raise(errc::dimension_mismatch, "choi_to_transfer");
  const auto& basis = shared_basis(d);
  RealMatrix F(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      F(i, j) = (kron(basis[i], basis[j].transpose()).cwiseProduct(cm.chi.transpose())).sum().real() *
                static_cast<double>(d);
  return {d, F};
}

inline double choi_min_eig(const ChoiMatrix& cm, const Tolerances& tol = default_tolerances()) {
  return min_eigenvalue(cm.chi, tol);
}

// Later map after earlier map: x -> F2 (F1 x).
inline TransferMatrix compose(const TransferMatrix& later, const TransferMatrix& earlier) {
  if (later.dim != earlier.dim) raise(errc::dimension_mismatch, "compose");
  return {later.dim, later.F * earlier.F};
}

inline double condition_number(const RealMatrix& a) {
  Eigen::JacobiSVD<RealMatrix> svd(a);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return svd.singularValues().maxCoeff() / smin;
}

struct IntermediateMap {
  TransferMatrix map;
  double condition = 0.0;  // of the inverted earlier map
};

// V(t, s) with F_t = V F_s; refuses inversion past the condition limit.
inline IntermediateMap intermediate_map(const TransferMatrix& at_t, const TransferMatrix& at_s,
                                        const Tolerances& tol = default_tolerances()) {
  if (at_t.dim != at_s.dim) raise(errc::dimension_mismatch, "intermediate_map");
  const double cond = condition_number(at_s.F);
  if (!(cond <= tol.condition_limit))
    raise(errc::singular_intermediate,
          "earlier map condition " + std::to_string(cond));
  RealMatrix inv = at_s.F.partialPivLu().solve(RealMatrix::Identity(at_s.F.rows(), at_s.F.cols()));
  return {{at_t.dim, at_t.F * inv}, cond};
}

// Intermediate map in affine form: (M_ts, tau_ts) with
// M_ts = M_t M_s^{-1}, tau_ts = tau_t - M_ts tau_s.
inline AffineRep unital_nonunital_split(const TransferMatrix& at_t, const TransferMatrix& at_s,
                                        const Tolerances& tol = default_tolerances()) {
  const AffineRep a_t = transfer_to_affine(at_t, tol);
  const AffineRep a_s = transfer_to_affine(at_s, tol);
  const double cond = condition_number(a_s.M);
  if (!(cond <= tol.condition_limit))
    raise(errc::singular_intermediate, "traceless block condition " + std::to_string(cond));
  RealMatrix m_ts =
      a_s.M.transpose().partialPivLu().solve(a_t.M.transpose()).transpose();
  return {m_ts, a_t.tau - m_ts * a_s.tau};
}

// Hermitian-split extension of a real coordinate matrix to arbitrary
// operators: X = H + iK with H, K Hermitian transforms component-wise.
inline Matrix apply_superoperator(const RealMatrix& F, const Matrix& x, int dim) {
  if (x.rows() != dim || x.cols() != dim || F.rows() != dim * dim || F.cols() != dim * dim)
    raise(errc::dimension_mismatch, "apply_superoperator");
  const Matrix h = 0.5 * (x + x.adjoint());
  const Matrix k = (x - x.adjoint()) / (2.0 * cxi);
  const RealVector hx = bloch_coordinates(h);
  const RealVector kx = bloch_coordinates(k);
  return state_from_bloch(F * hx, dim) + cxi * state_from_bloch(F * kx, dim);
}

inline Matrix apply_transfer(const TransferMatrix& tm, const Matrix& x) {
  return apply_superoperator(tm.F, x, tm.dim);
}

// (id_D (x) map) on an operator over C^D (x) C^d with the ancilla first:
// every d x d block transforms independently.
inline Matrix apply_transfer_with_ancilla(const TransferMatrix& tm, const Matrix& x,
                                          int ancilla_dim) {
  const int d = tm.dim, total = ancilla_dim * d;
  if (ancilla_dim < 1) raise(errc::bad_dimension, "apply_transfer_with_ancilla");
  if (x.rows() != total || x.cols() != total)
    raise(errc::dimension_mismatch, "apply_transfer_with_ancilla");
  Matrix out(total, total);
  for (int a = 0; a < ancilla_dim; ++a)
    for (int b = 0; b < ancilla_dim; ++b)
      out.block(a * d, b * d, d, d) = apply_transfer(tm, x.block(a * d, b * d, d, d));
  return out;
}

}  // namespace channelscope
