#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "channelscope/curves.hpp"
#include "channelscope/repr.hpp"

namespace channelscope {

using TransferFn = std::function<TransferMatrix(double)>;

// Pointwise generator data. The decoherence matrix is stored with respect
// to the scaled traceless basis sqrt(d)*G_j (the Pauli matrices for d = 2),
// so its eigenvalues are directly the canonical decay rates quoted for
// Pauli-type models.
struct GeneratorSnapshot {
  double t = 0.0;
  int dim = 0;
  Matrix hamiltonian;   // d x d, Hermitian, traceless
  Matrix decoherence;   // (d^2-1) x (d^2-1), Hermitian
};

struct CanonicalRates {
  double t = 0.0;
  RealVector rates;              // ascending
  std::vector<Matrix> jump_ops;  // HS-orthonormal, matched to rates
};

// Time-local affine form d/dt x = D x + mu on the traceless coordinates.
struct DampingForm {
  double t = 0.0;
  RealMatrix D;
  RealVector mu;
};

using GeneratorFn = std::function<GeneratorSnapshot(double)>;

// Coordinate matrix of rho -> -i[H, rho] + sum_{jk} a_jk (G_j rho G_k
// - {G_k G_j, rho}/2) with a = dim * decoherence (undoing the storage
// scaling). Same index convention as TransferMatrix.
inline RealMatrix generator_superoperator(const GeneratorSnapshot& gs,
                                          const Tolerances& tol = default_tolerances()) {
  const int d = gs.dim, n = d * d;
  if (gs.hamiltonian.rows() != d || gs.decoherence.rows() != n - 1 ||
      gs.decoherence.cols() != n - 1)
    raise(errc::dimension_mismatch, "generator_superoperator");
  if (hermiticity_defect(gs.hamiltonian) > tol.structural)
    raise(errc::not_hermitian, "generator_superoperator: hamiltonian");
  if ((gs.decoherence - gs.decoherence.adjoint()).cwiseAbs().maxCoeff() > tol.structural)
    raise(errc::not_hermitian, "generator_superoperator: decoherence matrix");
  const auto& basis = shared_basis(d);
  const Matrix a = static_cast<double>(d) * gs.decoherence;
  RealMatrix out(n, n);
  for (int col = 0; col < n; ++col) {
    const Matrix& g = basis[col];
    Matrix image = -cxi * (gs.hamiltonian * g - g * gs.hamiltonian);
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k) {
        const Complex w = a(j - 1, k - 1);
        if (w == 0.0) continue;
        const Matrix kj = basis[k] * basis[j];
        image += w * (basis[j] * g * basis[k] - 0.5 * (kj * g + g * kj));
      }
    for (int row = 0; row < n; ++row) out(row, col) = (basis[row].adjoint() * image).trace().real();
  }
  return out;
}

// Inverse of generator_superoperator: recovers (H, decoherence) from the
// coordinate matrix of any Hermiticity- and trace-preserving time-local
// generator, then verifies the pair reassembles the input.
inline GeneratorSnapshot snapshot_from_superoperator(const RealMatrix& L, double t, int dim,
                                                     const Tolerances& tol = default_tolerances()) {
  const int n = dim * dim;
  if (L.rows() != n || L.cols() != n)
    raise(errc::dimension_mismatch, "snapshot_from_superoperator");
  if (L.row(0).cwiseAbs().maxCoeff() > std::max(tol.structural, 1e3 * tol.generator_residual))
    raise(errc::malformed_transfer,
          "snapshot_from_superoperator: generator does not annihilate the trace row");
  const auto& basis = shared_basis(dim);

  // Choi-like matrix of the generator, built from its action on matrix units.
  Matrix lambda = Matrix::Zero(n, n);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      Matrix unit = Matrix::Zero(dim, dim);
      unit(a, b) = 1.0;
      lambda += kron(apply_superoperator(L, unit, dim), unit);
    }

  Matrix q(n, n);
  std::vector<Vector> vecs(n);
  for (int i = 0; i < n; ++i) vecs[i] = detail::vec_row_major(basis[i]);
  for (int alpha = 0; alpha < n; ++alpha)
    for (int beta = 0; beta < n; ++beta)
      q(alpha, beta) = vecs[alpha].dot(lambda * vecs[beta]);

  GeneratorSnapshot gs;
  gs.t = t;
  gs.dim = dim;
  Matrix kossakowski = q.block(1, 1, n - 1, n - 1);
  kossakowski = 0.5 * (kossakowski + kossakowski.adjoint());
  gs.decoherence = kossakowski / static_cast<double>(dim);
  gs.hamiltonian = Matrix::Zero(dim, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int j = 1; j < n; ++j) gs.hamiltonian -= scale * std::imag(q(j, 0)) * basis[j];

  const RealMatrix rebuilt = generator_superoperator(gs, tol);
  const double residual = (rebuilt - L).cwiseAbs().maxCoeff();
  const double floor = tol.generator_residual * std::max(1.0, L.cwiseAbs().maxCoeff());
  if (!(residual <= floor))
    raise(errc::malformed_transfer,
          "snapshot_from_superoperator: reassembly residual " + std::to_string(residual) +
              " (input is not a Hermiticity-preserving generator at this tolerance)");
  return gs;
}

namespace detail {

inline RealMatrix solve_right(const RealMatrix& num, const RealMatrix& den,
                              const Tolerances& tol, const char* who) {
  const double cond = condition_number(den);
  if (!(cond <= tol.condition_limit))
    raise(errc::singular_intermediate, std::string(who) + ": condition " + std::to_string(cond));
  // num * den^{-1} through a transposed solve.
  return den.transpose().partialPivLu().solve(num.transpose()).transpose();
}

inline RealMatrix fd_generator(const TransferFn& traj, double t, double h, const Tolerances& tol) {
  const TransferMatrix base = traj(t);
  RealMatrix dot;
  if (t >= h) {
    dot = (traj(t + h).F - traj(t - h).F) / (2.0 * h);
  } else {
    // Second-order one-sided stencil for points too close to the start.
    dot = (-3.0 * base.F + 4.0 * traj(t + h).F - traj(t + 2.0 * h).F) / (2.0 * h);
  }
  return solve_right(dot, base.F, tol, "fd_generator");
}

}  // namespace detail

// L(t) = F'(t) F(t)^{-1} by Richardson-extrapolated central differences;
// the h vs h/2 pair doubles as a step-size sanity check.
inline RealMatrix generator_from_trajectory(const TransferFn& traj, double t,
                                            const Tolerances& tol = default_tolerances()) {
  const double h = tol.fd_step;
  if (!(h >= 1e-7 && h <= 1e-3))
    raise(errc::bad_params, "generator_from_trajectory: step outside [1e-7, 1e-3]");
  const RealMatrix coarse = detail::fd_generator(traj, t, h, tol);
  const RealMatrix fine = detail::fd_generator(traj, t, 0.5 * h, tol);
  const double scale = std::max(1.0, fine.cwiseAbs().maxCoeff());
  const double disagreement = (coarse - fine).cwiseAbs().maxCoeff() / scale;
  if (!(disagreement <= tol.fd_consistency))
    raise(errc::step_too_coarse,
          "generator_from_trajectory: h vs h/2 disagree by " + std::to_string(disagreement));
  return (4.0 * fine - coarse) / 3.0;
}

inline GeneratorSnapshot snapshot_from_trajectory(const TransferFn& traj, double t, int dim,
                                                  const Tolerances& tol = default_tolerances()) {
  return snapshot_from_superoperator(generator_from_trajectory(traj, t, tol), t, dim, tol);
}

// Diagonalizes the decoherence matrix. Jump operators are returned in the
// scaled-basis normalization: L_D = dim * sum_i rate_i (A_i rho A_i^dag
// - {A_i^dag A_i, rho}/2) with HS-orthonormal A_i.
inline CanonicalRates canonical_rates(const GeneratorSnapshot& gs,
                                      const Tolerances& tol = default_tolerances()) {
  const int n = gs.dim * gs.dim;
  const EigResult eig = herm_eig(gs.decoherence, tol);
  CanonicalRates out;
  out.t = gs.t;
  out.rates = eig.values;
  out.jump_ops.reserve(n - 1);
  const auto& basis = shared_basis(gs.dim);
  for (int i = 0; i < n - 1; ++i) {
    Matrix a = Matrix::Zero(gs.dim, gs.dim);
    for (int j = 0; j < n - 1; ++j) a += eig.vectors(j, i) * basis[j + 1];
    out.jump_ops.push_back(std::move(a));
  }

  GeneratorSnapshot check = gs;
  check.decoherence = Matrix::Zero(n - 1, n - 1);
  RealMatrix direct = generator_superoperator(gs, tol);
  RealMatrix rebuilt = generator_superoperator(check, tol);  // Hamiltonian part
  const auto& g = basis;
  for (int col = 0; col < n; ++col) {
    Matrix image = Matrix::Zero(gs.dim, gs.dim);
    for (int i = 0; i < n - 1; ++i) {
      const Matrix& a = out.jump_ops[i];
      const Matrix aa = a.adjoint() * a;
      image += static_cast<double>(gs.dim) * out.rates(i) *
               (a * g[col] * a.adjoint() - 0.5 * (aa * g[col] + g[col] * aa));
    }
    for (int row = 0; row < n; ++row)
      rebuilt(row, col) += (g[row].adjoint() * image).trace().real();
  }
  const double residual = (rebuilt - direct).cwiseAbs().maxCoeff();
  if (!(residual <= tol.generator_residual * std::max(1.0, direct.cwiseAbs().maxCoeff())))
    raise(errc::not_converged, "canonical_rates: diagonalized form fails to reassemble");
  return out;
}

inline DampingForm damping_form(const RealMatrix& L, double t, int dim,
                                const Tolerances& tol = default_tolerances()) {
  const int n = dim * dim;
  if (L.rows() != n || L.cols() != n) raise(errc::dimension_mismatch, "damping_form");
  if (L.row(0).cwiseAbs().maxCoeff() > std::max(tol.structural, 1e3 * tol.generator_residual))
    raise(errc::malformed_transfer, "damping_form: trace row of the generator is not zero");
  DampingForm out;
  out.t = t;
  out.D = L.block(1, 1, n - 1, n - 1);
  out.mu = L.block(1, 0, n - 1, 1);
  return out;
}

inline DampingForm damping_form(const TransferFn& traj, double t, int dim,
                                const Tolerances& tol = default_tolerances()) {
  return damping_form(generator_from_trajectory(traj, t, tol), t, dim, tol);
}

// Midpoint exponential stepper: F(0) = I, F advanced by exp(dt L) per
// substep. Requested times are hit exactly (substeps are allotted per
// segment); a full repeat at half the step validates the endpoint.
inline std::vector<TransferMatrix> integrate_generator(
    const std::function<RealMatrix(double)>& gen, int dim, const std::vector<double>& times,
    int steps = 400, const Tolerances& tol = default_tolerances()) {
  if (steps < 100) raise(errc::bad_params, "integrate_generator: need >= 100 steps");
  if (times.empty()) raise(errc::bad_params, "integrate_generator: empty grid");
  if (times.front() < 0.0) raise(errc::bad_params, "integrate_generator: negative time");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      raise(errc::bad_params, "integrate_generator: grid must increase");
  const int n = dim * dim;
  const double horizon = times.back();

  auto run = [&](int total_steps) {
    std::vector<RealMatrix> at_nodes;
    at_nodes.reserve(times.size());
    RealMatrix f = RealMatrix::Identity(n, n);
    double prev = 0.0;
    for (double target : times) {
      const double span = target - prev;
      if (span > 0.0) {
        const int m = std::max(1, static_cast<int>(std::lround(total_steps * span / horizon)));
        const double dt = span / m;
        for (int k = 0; k < m; ++k)
          f = real_exp(dt * gen(prev + (k + 0.5) * dt)) * f;
      }
      prev = target;
      at_nodes.push_back(f);
    }
    return at_nodes;
  };

  const auto coarse = run(steps);
  const auto fine = run(2 * steps);
  const double shift = (coarse.back() - fine.back()).cwiseAbs().maxCoeff();
  if (!(shift <= tol.step_doubling))
    raise(errc::not_converged,
          "integrate_generator: endpoint moved " + std::to_string(shift) + " under halving");
  std::vector<TransferMatrix> out;
  out.reserve(times.size());
  for (const auto& f : fine) out.push_back({dim, f});
  return out;
}

// Dense precomputed trajectory for generator-defined families. Lattice
// nodes are stored at a stride to bound memory; arbitrary times are reached
// by a short midpoint refinement from the nearest stored node, which keeps
// the map smooth in t for finite-difference consumers. Immutable after
// construction, hence safe to share across threads.
class CachedTrajectory {
 public:
  CachedTrajectory(std::function<RealMatrix(double)> gen, int dim, double horizon,
                   double dt = 1e-4)
      : gen_(std::move(gen)), dim_(dim), dt_(dt) {
    if (dim < 2 || !(horizon > 0.0) || !(dt > 0.0)) raise(errc::bad_params, "CachedTrajectory");
    horizon_ = horizon;
    const int n = dim * dim;
    const long total = static_cast<long>(std::ceil(horizon / dt)) + 1;
    stride_ = std::max<long>(1, total / 4000);
    RealMatrix f = RealMatrix::Identity(n, n);
    nodes_.push_back(f);
    for (long k = 0; k < total; ++k) {
      const double t0 = k * dt_;
      f = real_exp(dt_ * gen_(t0 + 0.5 * dt_)) * f;
      if ((k + 1) % stride_ == 0) nodes_.push_back(f);
    }
  }

  double horizon() const { return horizon_; }
  int dim() const { return dim_; }

  TransferMatrix at(double t) const {
    if (t < -1e-9 || t > horizon_ + 10.0 * dt_)
      raise(errc::curve_out_of_range, "CachedTrajectory::at t=" + std::to_string(t));
    t = std::max(t, 0.0);
    const double node_dt = stride_ * dt_;
    long k = static_cast<long>(t / node_dt);
    k = std::min<long>(k, static_cast<long>(nodes_.size()) - 1);
    RealMatrix f = nodes_[static_cast<std::size_t>(k)];
    double base = k * node_dt;
    double span = t - base;
    if (span > 1e-15) {
      const int m = std::max(1, static_cast<int>(std::ceil(span / dt_ - 1e-9)));
      const double dt = span / m;
      for (int i = 0; i < m; ++i) f = real_exp(dt * gen_(base + (i + 0.5) * dt)) * f;
    }
    return {dim_, f};
  }

  TransferFn as_fn() const {
    return [this](double t) { return at(t); };
  }

 private:
  std::function<RealMatrix(double)> gen_;
  int dim_;
  double dt_;
  double horizon_ = 0.0;
  long stride_ = 1;
  std::vector<RealMatrix> nodes_;
};

// Analytic decay-rate pair for the generalized-amplitude-damping family:
// gamma_1 drives the pump toward |1> (the p-weighted direction), gamma_2
// the decay toward |0>. Matches the time-local generator with jumps
// sigma_+ and sigma_-.
inline RealVector rates_qubit_gad(const ParamCurve& p_curve, const ParamCurve& lambda_curve,
                                  double t, const Tolerances& tol = default_tolerances()) {
  const double lam = lambda_curve.value(t);
  const double one_minus = 1.0 - lam;
  if (one_minus <= tol.damping_saturation)
    raise(errc::damping_saturated,
          "rates_qubit_gad: lambda reached 1 at t=" + std::to_string(t));
  const double p = p_curve.value(t);
  const double pdot = p_curve.derivative(t);
  const double ldot = lambda_curve.derivative(t);
  RealVector out(2);
  out(0) = lam * pdot + ldot * p / one_minus;
  out(1) = -lam * pdot + ldot * (1.0 - p) / one_minus;
  return out;
}

}  // namespace channelscope
