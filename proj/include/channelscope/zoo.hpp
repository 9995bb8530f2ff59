#pragma once

#include <cmath>
#include <vector>

#include "channelscope/canon.hpp"
#include "channelscope/curves.hpp"
#include "channelscope/repr.hpp"

namespace channelscope {

namespace detail {

inline void require_unit_interval(double x, const char* who) {
  if (!(x >= 0.0 && x <= 1.0)) raise(errc::bad_params, std::string(who) + " outside [0,1]");
}

}  // namespace detail

// Generalized amplitude damping. p weighs the channel that relaxes toward
// |1>, 1-p the one toward |0>; lambda in [0,1] is the damping strength.
inline KrausSet qubit_gad(double p, double lambda) {
  detail::require_unit_interval(p, "qubit_gad p");
  detail::require_unit_interval(lambda, "qubit_gad lambda");
  const double sq = std::sqrt(1.0 - lambda), sl = std::sqrt(lambda);
  const double a = std::sqrt(1.0 - p), b = std::sqrt(p);
  Matrix e1(2, 2), e2(2, 2), e3(2, 2), e4(2, 2);
  e1 << a, 0, 0, a * sq;
  e2 << 0, a * sl, 0, 0;
  e3 << b * sq, 0, 0, b;
  e4 << 0, 0, b * sl, 0;
  return {2, {e1, e2, e3, e4}};
}

inline void require_simplex(const RealVector& p) {
  if (p.size() < 2) raise(errc::bad_simplex, "need at least two weights");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= -1e-12)) raise(errc::bad_simplex, "negative weight");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > 1e-10) raise(errc::bad_simplex, "weights sum to " + std::to_string(sum));
}

// d^2 Kraus operators sqrt(p_l) E_{l,j}: E_{l,l} keeps |l> and shrinks the
// rest, E_{l,j} moves |j> -> |l> with amplitude sqrt(lambda).
inline KrausSet qudit_gad(const RealVector& p, double lambda) {
  require_simplex(p);
  detail::require_unit_interval(lambda, "qudit_gad lambda");
  const int d = static_cast<int>(p.size());
  const double sq = std::sqrt(1.0 - lambda), sl = std::sqrt(lambda);
  KrausSet ks{d, {}};
  ks.ops.reserve(static_cast<std::size_t>(d) * d);
  for (int l = 0; l < d; ++l) {
    const double w = std::sqrt(std::max(p(l), 0.0));
    for (int j = 0; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      if (j == l) {
        for (int k = 0; k < d; ++k) e(k, k) = (k == l) ? 1.0 : sq;
      } else {
        e(l, j) = sl;
      }
      ks.ops.push_back(w * e);
    }
  }
  return ks;
}

inline Matrix gad_fixed_point(const RealVector& p) {
  require_simplex(p);
  Matrix rho = Matrix::Zero(p.size(), p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) rho(i, i) = p(i);
  return rho;
}

inline Matrix gad_fixed_point(double p) {
  RealVector v(2);
  v << 1.0 - p, p;
  return gad_fixed_point(v);
}

// Closed-form action, bypassing the Kraus sum: diagonals relax toward p,
// coherences pick up the two-level damping factor of their row/column pair.
inline Matrix apply_qudit_gad(const RealVector& p, double lambda, const Matrix& rho) {
  require_simplex(p);
  detail::require_unit_interval(lambda, "apply_qudit_gad lambda");
  const int d = static_cast<int>(p.size());
  if (rho.rows() != d || rho.cols() != d) raise(errc::dimension_mismatch, "apply_qudit_gad");
  const double sq = std::sqrt(1.0 - lambda);
  Matrix out(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      if (j == k) {
        out(j, j) = lambda * p(j) + (1.0 - lambda) * rho(j, j);
      } else {
        const double pj = p(j) + p(k);
        out(j, k) = (pj * sq + (1.0 - pj) * (1.0 - lambda)) * rho(j, k);
      }
    }
  return out;
}

// Time-local generator of the damping family in closed form. The jump pair
// is sigma_+ (rate gamma_1, pumping toward |1>) and sigma_- (rate gamma_2),
// which in the orthonormal Pauli basis packs into a 2x2 decoherence block
// (gamma_1 + gamma_2)/4 on the diagonal and +-i(gamma_1 - gamma_2)/4 off it.
inline GeneratorSnapshot gad_snapshot(const ParamCurve& p_curve, const ParamCurve& lambda_curve,
                                      double t, const Tolerances& tol = default_tolerances()) {
  const RealVector g = rates_qubit_gad(p_curve, lambda_curve, t, tol);
  GeneratorSnapshot gs;
  gs.t = t;
  gs.dim = 2;
  gs.hamiltonian = Matrix::Zero(2, 2);
  gs.decoherence = Matrix::Zero(3, 3);
  const double sum = 0.25 * (g(0) + g(1));
  const double diff = 0.25 * (g(0) - g(1));
  gs.decoherence(0, 0) = sum;
  gs.decoherence(1, 1) = sum;
  gs.decoherence(0, 1) = cxi * diff;
  gs.decoherence(1, 0) = -cxi * diff;
  return gs;
}

inline std::function<RealMatrix(double)> gad_generator(ParamCurve p_curve,
                                                       ParamCurve lambda_curve,
                                                       Tolerances tol = default_tolerances()) {
  return [p_curve, lambda_curve, tol](double t) {
    return generator_superoperator(gad_snapshot(p_curve, lambda_curve, t, tol));
  };
}

// Mixing weights (w_I, w_x, w_y, w_z) of the eternal Pauli family at decay
// strength c >= 1; the map's Pauli eigenvalues are (l1, l1, l3).
inline RealVector pauli_enm_weights(double c, double t) {
  if (!(c >= 1.0)) raise(errc::bad_rate, "pauli_enm: c < 1 breaks complete positivity");
  if (t < 0.0) raise(errc::bad_params, "pauli_enm: negative time");
  const double l1 = std::exp(-c * t) * std::pow(std::cosh(t), c);
  const double l3 = std::exp(-2.0 * c * t);
  RealVector w(4);
  w << (1.0 + 2.0 * l1 + l3) / 4.0, (1.0 - l3) / 4.0, (1.0 - l3) / 4.0,
      (1.0 + l3 - 2.0 * l1) / 4.0;
  for (int i = 0; i < 4; ++i) {
    if (w(i) < -1e-12) raise(errc::bad_rate, "pauli_enm: negative weight");
    w(i) = std::max(w(i), 0.0);
  }
  return w;
}

inline RealVector pauli_enm_map_eigs(double c, double t) {
  const double l1 = std::exp(-c * t) * std::pow(std::cosh(t), c);
  const double l3 = std::exp(-2.0 * c * t);
  RealVector eig(3);
  eig << l1, l1, l3;
  return eig;
}

inline KrausSet pauli_enm(double c, double t) {
  const RealVector w = pauli_enm_weights(c, t);
  KrausSet ks{2, {}};
  for (int alpha = 0; alpha < 4; ++alpha) {
    if (alpha == 3 && w(alpha) <= 1e-14) continue;  // the z weight vanishes at c = 1 up to cancellation noise
    ks.ops.push_back(std::sqrt(w(alpha)) * pauli(alpha));
  }
  return ks;
}

// Time-local rates (c/2, c/2, -(c/2) tanh t) on the (x, y, z) dephasing
// directions; the z rate is negative for every t > 0.
inline GeneratorSnapshot pauli_enm_snapshot(double c, double t) {
  if (!(c > 0.0)) raise(errc::bad_rate, "pauli_enm_snapshot");
  GeneratorSnapshot gs;
  gs.t = t;
  gs.dim = 2;
  gs.hamiltonian = Matrix::Zero(2, 2);
  gs.decoherence = Matrix::Zero(3, 3);
  gs.decoherence(0, 0) = 0.5 * c;
  gs.decoherence(1, 1) = 0.5 * c;
  gs.decoherence(2, 2) = -0.5 * c * std::tanh(t);
  return gs;
}

inline std::function<RealMatrix(double)> pauli_enm_generator(double c) {
  if (!(c > 0.0)) raise(errc::bad_rate, "pauli_enm_generator");
  return [c](double t) { return generator_superoperator(pauli_enm_snapshot(c, t)); };
}

struct QuasiEnmParams {
  double m = 3.0;
  double nu = 1.0;
  double n = 2.0;
};

inline void validate(const QuasiEnmParams& q) {
  if (!(q.nu > 0.0) || !(q.m > q.nu) || !(q.n >= 1.0))
    raise(errc::bad_params, "quasi-eternal family needs m > nu > 0 and n >= 1");
}

inline ParamCurve quasi_enm_p_curve(const QuasiEnmParams& q) {
  validate(q);
  return ParamCurve::exp_decay(q.m, 1.0 / q.n);
}

inline ParamCurve quasi_enm_lambda_curve(const QuasiEnmParams& q) {
  validate(q);
  return ParamCurve::exp_rise(q.nu);
}

// The single sign change of gamma_1: positive before, negative after.
inline double t_star(const QuasiEnmParams& q) {
  validate(q);
  return std::log(q.m / (q.m - q.nu)) / q.nu;
}

// Closed form of the accumulated gamma_1 negativity over [0, infinity).
inline double hcla_closed_form(const QuasiEnmParams& q) {
  validate(q);
  return q.nu / ((q.nu + q.m) * q.n) *
         std::pow((q.m - q.nu) / q.m, (q.nu + q.m) / q.nu);
}

// Non-unital eternal model: constant transverse rates dressed by a gamma
// drift term, z rate -tanh t. Does not annihilate the identity for
// gamma > 0.
inline GeneratorSnapshot nonunital_enm_snapshot(double gamma, double t) {
  if (!(gamma >= 0.0)) raise(errc::bad_rate, "nonunital_enm: gamma < 0");
  GeneratorSnapshot gs;
  gs.t = t;
  gs.dim = 2;
  gs.hamiltonian = Matrix::Zero(2, 2);
  gs.decoherence = Matrix::Zero(3, 3);
  gs.decoherence(0, 0) = 1.0 + 0.25 * gamma;
  gs.decoherence(1, 1) = 1.0 + 0.25 * gamma;
  gs.decoherence(0, 1) = -cxi * 0.25 * gamma;
  gs.decoherence(1, 0) = cxi * 0.25 * gamma;
  gs.decoherence(2, 2) = -std::tanh(t);
  return gs;
}

inline std::function<RealMatrix(double)> nonunital_enm_generator(double gamma) {
  if (!(gamma >= 0.0)) raise(errc::bad_rate, "nonunital_enm_generator");
  return [gamma](double t) { return generator_superoperator(nonunital_enm_snapshot(gamma, t)); };
}

// Phase-covariant family with equal raising/lowering weight gamma and a
// time-dependent pure-dephasing rate.
inline GeneratorSnapshot phase_covariant_snapshot(double gamma, double gamma_z, double t) {
  if (!(gamma >= 0.0)) raise(errc::bad_rate, "phase_covariant: gamma < 0");
  GeneratorSnapshot gs;
  gs.t = t;
  gs.dim = 2;
  gs.hamiltonian = Matrix::Zero(2, 2);
  gs.decoherence = Matrix::Zero(3, 3);
  gs.decoherence(0, 0) = 0.5 * gamma;
  gs.decoherence(1, 1) = 0.5 * gamma;
  gs.decoherence(2, 2) = gamma_z;
  return gs;
}

inline std::function<RealMatrix(double)> phase_covariant_generator(double gamma,
                                                                   ParamCurve gamma_z) {
  if (!(gamma >= 0.0)) raise(errc::bad_rate, "phase_covariant_generator");
  return [gamma, gamma_z](double t) {
    return generator_superoperator(phase_covariant_snapshot(gamma, gamma_z.value(t), t));
  };
}

struct QuquartFactors {
  std::vector<Matrix> m_ops;  // Pauli block on the upper two levels
  std::vector<Matrix> n_ops;  // damping pair on the lower two levels
};

// Two commuting factor channels on C^4 = C^2 (+) C^2: a weighted Pauli
// mixture acting on the upper block and an amplitude-damping pair on the
// lower block, each padded with the identity (resp. zero) so the composite
// products form a complete Kraus set.
inline QuquartFactors ququart_factors(double c, double nu, double t) {
  if (!(nu > 0.0)) raise(errc::bad_params, "ququart_factors: nu <= 0");
  const RealVector w = pauli_enm_weights(c, t);
  const double lambda = 1.0 - std::exp(-nu * t);
  QuquartFactors f;
  for (int alpha = 0; alpha < 4; ++alpha) {
    if (alpha == 3 && w(alpha) <= 1e-14) continue;
    Matrix m = Matrix::Zero(4, 4);
    m.block(0, 0, 2, 2) = std::sqrt(w(alpha)) * pauli(alpha);
    m.block(2, 2, 2, 2) = std::sqrt(w(alpha)) * Matrix::Identity(2, 2);
    f.m_ops.push_back(m);
  }
  Matrix n1 = Matrix::Zero(4, 4), n2 = Matrix::Zero(4, 4);
  n1.block(0, 0, 2, 2) = Matrix::Identity(2, 2);
  n1(2, 2) = 1.0;
  n1(3, 3) = std::sqrt(1.0 - lambda);
  n2(2, 3) = std::sqrt(lambda);
  f.n_ops = {n1, n2};
  return f;
}

inline KrausSet ququart_enm(double c, double nu, double t) {
  const QuquartFactors f = ququart_factors(c, nu, t);
  KrausSet ks{4, {}};
  ks.ops.reserve(f.m_ops.size() * f.n_ops.size());
  for (const auto& m : f.m_ops)
    for (const auto& n : f.n_ops) ks.ops.push_back(m * n);
  return ks;
}

}  // namespace channelscope
