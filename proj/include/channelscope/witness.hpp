#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "channelscope/canon.hpp"
#include "channelscope/ensembles.hpp"
#include "channelscope/parallel.hpp"
#include "channelscope/quadrature.hpp"
#include "channelscope/repr.hpp"

namespace channelscope {

// Columnar scan results over a common time grid. A column is either empty
// (not computed) or grid-sized; nodes where an inversion was refused carry
// NaN and a singular flag instead of aborting the whole scan.
struct WitnessSeries {
  std::vector<double> grid;
  std::vector<std::vector<double>> rates;   // one column per canonical rate
  std::vector<double> choi_min_eig;         // of the (t, t+eps) intermediate map
  std::vector<double> td_derivative_max;    // ensemble max of d/dt trace distance
  std::vector<double> trace_D;
  std::vector<double> hmax_DDT;             // largest eigenvalue of D + D^T
  std::vector<char> singular;
  std::vector<double> condition;
  double cp_epsilon = 0.0;  // window used by the CP scan, 0 when absent
  std::string spec_hash;
  std::string policy;

  // Non-Markovian verdict of the CP column at node i; nullopt when the
  // node is flagged or the column was never computed.
  std::optional<bool> cp_verdict(std::size_t i, const Tolerances& tol = default_tolerances()) const;

  void validate() const {
    if (grid.empty()) raise(errc::bad_params, "WitnessSeries: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1])) raise(errc::bad_params, "WitnessSeries: grid must increase");
    auto check = [&](const std::vector<double>& col, const char* name) {
      if (col.empty()) return;
      if (col.size() != grid.size())
        raise(errc::dimension_mismatch, std::string("WitnessSeries: ") + name + " length");
      for (std::size_t i = 0; i < col.size(); ++i) {
        const bool flagged = !singular.empty() && singular[i];
        if (!flagged && !std::isfinite(col[i]))
          raise(errc::not_converged,
                std::string("WitnessSeries: non-finite ") + name + " at unflagged node " +
                    std::to_string(i));
      }
    };
    for (const auto& r : rates) check(r, "rate column");
    check(choi_min_eig, "choi_min_eig");
    check(td_derivative_max, "td_derivative_max");
    check(trace_D, "trace_D");
    check(hmax_DDT, "hmax_DDT");
    check(condition, "condition");
  }
};

inline std::vector<double> linspace(double t_min, double t_max, int points) {
  if (!(t_max > t_min) || points < 2) raise(errc::bad_params, "linspace");
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i)
    out[i] = t_min + (t_max - t_min) * i / (points - 1);
  return out;
}

// Copies every non-empty column of src into dst (grids must match);
// singular flags are OR-ed.
inline void merge_series(WitnessSeries& dst, const WitnessSeries& src) {
  if (dst.grid != src.grid) raise(errc::dimension_mismatch, "merge_series: grids differ");
  if (!src.rates.empty()) dst.rates = src.rates;
  if (!src.choi_min_eig.empty()) dst.choi_min_eig = src.choi_min_eig;
  if (!src.td_derivative_max.empty()) dst.td_derivative_max = src.td_derivative_max;
  if (!src.trace_D.empty()) dst.trace_D = src.trace_D;
  if (!src.hmax_DDT.empty()) dst.hmax_DDT = src.hmax_DDT;
  if (!src.condition.empty()) dst.condition = src.condition;
  if (!src.singular.empty()) {
    if (dst.singular.empty()) dst.singular.assign(dst.grid.size(), 0);
    for (std::size_t i = 0; i < dst.singular.size(); ++i)
      dst.singular[i] = dst.singular[i] || src.singular[i];
  }
  if (src.cp_epsilon > 0.0) dst.cp_epsilon = src.cp_epsilon;
  if (!src.policy.empty())
    dst.policy += (dst.policy.empty() ? "" : "|") + src.policy;
}

// Negativity below this is attributable to the finite eps window and the
// conditioning of the inverted map rather than to the channel: a genuine
// rate violation of size g contributes roughly eps*g to the Choi spectrum,
// so the rate-scale floor is multiplied by eps, with an absolute noise
// floor at 10 ulps times the conditioning of the inverted leg.
inline double cp_violation_threshold(double eps, double condition,
                                     const Tolerances& tol = default_tolerances()) {
  return std::max(tol.cp_negativity * eps,
                  10.0 * std::numeric_limits<double>::epsilon() * condition);
}

inline std::optional<bool> WitnessSeries::cp_verdict(std::size_t i, const Tolerances& tol) const {
  if (choi_min_eig.empty() || i >= choi_min_eig.size() || cp_epsilon <= 0.0) return std::nullopt;
  if (!singular.empty() && singular[i]) return std::nullopt;
  const double cond = condition.empty() ? 1.0 : condition[i];
  return choi_min_eig[i] < -cp_violation_threshold(cp_epsilon, cond, tol);
}

// Smallest Choi eigenvalue of the short-window intermediate map at every
// grid node, with the same verdict recomputed at half the window; a sign
// verdict that does not survive eps-halving is demoted to a flagged node.
// Nodes whose backward map cannot be inverted are flagged, not fatal.
inline WitnessSeries cp_divisibility_scan(const TransferFn& traj, const std::vector<double>& grid,
                                          const Tolerances& tol = default_tolerances()) {
  WitnessSeries out;
  out.grid = grid;
  const int n = static_cast<int>(grid.size());
  out.choi_min_eig.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.condition.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.singular.assign(n, 0);
  const double eps = tol.intermediate_epsilon;
  if (!(eps >= 1e-6 && eps <= 1e-2))
    raise(errc::bad_params, "cp_divisibility_scan: window outside [1e-6, 1e-2]");
  parallel_for(n, [&](int i) {
    const double t = grid[i];
    try {
      const TransferMatrix now = traj(t);
      const IntermediateMap full = intermediate_map(traj(t + eps), now, tol);
      out.condition[i] = full.condition;
      out.choi_min_eig[i] = choi_min_eig(transfer_to_choi(full.map), tol);
      const IntermediateMap half = intermediate_map(traj(t + 0.5 * eps), now, tol);
      const double half_eig = choi_min_eig(transfer_to_choi(half.map), tol);
      const bool neg_full =
          out.choi_min_eig[i] < -cp_violation_threshold(eps, full.condition, tol);
      const bool neg_half =
          half_eig < -cp_violation_threshold(0.5 * eps, half.condition, tol);
      if (neg_full != neg_half) out.singular[i] = 1;
    } catch (const Error& e) {
      if (e.code() != errc::singular_intermediate) throw;
      out.singular[i] = 1;
    }
  });
  out.cp_epsilon = eps;
  out.policy = "cp:eps=" + std::to_string(eps) + ";half-check";
  out.validate();
  return out;
}

namespace detail {

inline double pair_distance(const TransferMatrix& tm, const Matrix& delta) {
  return 0.5 * trace_norm(apply_transfer(tm, delta));
}

}  // namespace detail

// Largest d/dt of the trace distance over the probe ensemble, by central
// differences (one-sided at the left edge). Positive values certify a
// backflow through the plain (unassisted) criterion. The trajectory is
// evaluated twice per node, not per pair.
inline WitnessSeries p_divisibility_scan(const TransferFn& traj, const std::vector<double>& grid,
                                         const StatePairEnsemble& ensemble,
                                         const Tolerances& tol = default_tolerances()) {
  if (ensemble.pairs.empty()) raise(errc::bad_params, "p_divisibility_scan: empty ensemble");
  (void)tol;
  WitnessSeries out;
  out.grid = grid;
  const int n = static_cast<int>(grid.size());
  out.td_derivative_max.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.singular.assign(n, 0);
  double spacing = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) spacing = std::min(spacing, grid[i] - grid[i - 1]);
  const double h = std::min(1e-4, n > 1 ? spacing / 10.0 : 1e-4);
  std::vector<Matrix> deltas;
  deltas.reserve(ensemble.pairs.size());
  for (const auto& pr : ensemble.pairs) deltas.push_back(pr.first - pr.second);
  parallel_for(n, [&](int i) {
    const double t = grid[i];
    const bool central = t >= h;
    const TransferMatrix ahead = traj(t + h);
    const TransferMatrix behind = central ? traj(t - h) : traj(t);
    const double width = central ? 2.0 * h : h;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& delta : deltas)
      worst = std::max(worst, (detail::pair_distance(ahead, delta) -
                               detail::pair_distance(behind, delta)) /
                                  width);
    out.td_derivative_max[i] = worst;
  });
  out.policy = "p:" + ensemble.policy + ";h=" + std::to_string(h);
  out.validate();
  return out;
}

struct AncillaOptions {
  int ancilla_dim = 0;  // 0 means system dim + 1
  int product_pairs = 8;
  int entangled_pairs = 20;
  std::uint64_t seed = 42;
  bool include_constructed = true;
  std::optional<Matrix> fixed_point;  // adds (I (x) rho, I (x) fix) probes
};

namespace detail {

// Inverse action of (id (x) map) on a block operator, inverting the
// transfer matrix once.
inline Matrix ancilla_pullback(const TransferMatrix& tm, const Matrix& x, int ancilla_dim,
                               const Tolerances& tol) {
  const double cond = condition_number(tm.F);
  if (!(cond <= tol.condition_limit))
    raise(errc::singular_intermediate, "ancilla_pullback: condition " + std::to_string(cond));
  RealMatrix inv = tm.F.partialPivLu().solve(RealMatrix::Identity(tm.F.rows(), tm.F.cols()));
  return apply_transfer_with_ancilla({tm.dim, inv}, x, ancilla_dim);
}

// Splits a traceless Hermitian witness operator into a normalized state
// pair along its positive/negative eigenspaces.
inline std::pair<Matrix, Matrix> jordan_pair(const Matrix& x, const Tolerances& tol) {
  const EigResult eig = herm_eig(x, tol);
  const int n = static_cast<int>(eig.values.size());
  Matrix pos = Matrix::Zero(n, n), neg = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Matrix proj = eig.vectors.col(i) * eig.vectors.col(i).adjoint();
    if (eig.values(i) >= 0.0)
      pos += eig.values(i) * proj;
    else
      neg -= eig.values(i) * proj;
  }
  const double tp = pos.trace().real(), tn = neg.trace().real();
  if (tp <= 1e-12 || tn <= 1e-12) raise(errc::bad_params, "jordan_pair: one-sided operator");
  return {pos / tp, neg / tn};
}

}  // namespace detail

// Ancilla-assisted backflow scan. Probes, per node: product pairs sharing
// a maximally mixed ancilla, random entangled pairs, and a constructed
// pair that pulls the maximally-entangled-vs-marker witness back to t = 0
// through the inverse map. Forward differences only: the constructed
// witness sits at a kink of the trace norm where the two one-sided
// derivatives differ, and the violation lives on the forward side.
inline WitnessSeries ancilla_p_scan(const TransferFn& traj, const std::vector<double>& grid,
                                    const AncillaOptions& opts = {},
                                    const Tolerances& tol = default_tolerances()) {
  WitnessSeries out;
  out.grid = grid;
  const int n = static_cast<int>(grid.size());
  out.td_derivative_max.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.singular.assign(n, 0);

  const int d = traj(grid.front()).dim;
  const int big = opts.ancilla_dim > 0 ? opts.ancilla_dim : d + 1;
  if (big < d) raise(errc::bad_dimension, "ancilla_p_scan: ancilla smaller than system");
  const int total = big * d;

  double spacing = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) spacing = std::min(spacing, grid[i] - grid[i - 1]);
  const double h = std::min(1e-4, n > 1 ? spacing / 10.0 : 1e-4);

  // Grid-independent probe pairs.
  std::vector<Matrix> static_deltas;
  Rng rng(opts.seed);
  const Matrix mixed_anc = Matrix::Identity(big, big) / static_cast<double>(big);
  for (int i = 0; i < opts.product_pairs; ++i) {
    const Matrix a = random_mixed_state(d, rng);
    const Matrix b = opts.fixed_point ? *opts.fixed_point : random_mixed_state(d, rng);
    static_deltas.push_back(kron(mixed_anc, a - b));
  }
  for (int i = 0; i < opts.entangled_pairs; ++i) {
    const Matrix a = random_pure_entangled(big, d, rng);
    const Matrix b = random_pure_entangled(big, d, rng);
    static_deltas.push_back(a - b);
  }

  // Witness template: maximally entangled on the d x d corner minus the
  // marker level of the ancilla paired with |0><0|.
  Matrix witness = Matrix::Zero(total, total);
  {
    Vector phi = Vector::Zero(total);
    for (int k = 0; k < d; ++k) phi(k * d + k) = 1.0 / std::sqrt(static_cast<double>(d));
    witness = phi * phi.adjoint();
    if (big > d) {
      Matrix marker = Matrix::Zero(total, total);
      marker(d * d, d * d) = 1.0;  // ancilla level d, system level 0
      witness -= marker;
    } else {
      witness -= Matrix::Identity(total, total) / static_cast<double>(total);
    }
  }

  parallel_for(n, [&](int i) {
    const double t = grid[i];
    const TransferMatrix now = traj(t);
    const TransferMatrix ahead = traj(t + h);
    auto forward_slope = [&](const Matrix& delta) {
      return 0.5 *
             (trace_norm(apply_transfer_with_ancilla(ahead, delta, big)) -
              trace_norm(apply_transfer_with_ancilla(now, delta, big))) /
             h;
    };
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& delta : static_deltas) worst = std::max(worst, forward_slope(delta));
    if (opts.include_constructed) {
      try {
        const Matrix delta0 = detail::ancilla_pullback(now, witness, big, tol);
        const auto [rho, sigma] = detail::jordan_pair(delta0, tol);
        worst = std::max(worst, forward_slope(rho - sigma));
      } catch (const Error& e) {
        if (e.code() != errc::singular_intermediate) throw;
        out.singular[i] = 1;
      }
    }
    out.td_derivative_max[i] = worst;
  });
  out.policy = "ancilla:D=" + std::to_string(big) + ";pairs=" +
               std::to_string(static_deltas.size() + (opts.include_constructed ? 1 : 0)) +
               ";seed=" + std::to_string(opts.seed) + ";h=" + std::to_string(h) + ";forward";
  out.validate();
  return out;
}

// Tr D and the largest eigenvalue of D + D^T along the grid, from the
// time-local damping form.
inline WitnessSeries damping_criteria(const std::function<RealMatrix(double)>& generator, int dim,
                                      const std::vector<double>& grid,
                                      const Tolerances& tol = default_tolerances()) {
  WitnessSeries out;
  out.grid = grid;
  const int n = static_cast<int>(grid.size());
  out.trace_D.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.hmax_DDT.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.singular.assign(n, 0);
  parallel_for(n, [&](int i) {
    const DampingForm df = damping_form(generator(grid[i]), grid[i], dim, tol);
    out.trace_D[i] = df.D.trace();
    RealMatrix sym = df.D + df.D.transpose();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
    out.hmax_DDT[i] = es.eigenvalues().maxCoeff();
  });
  out.policy = "damping";
  out.validate();
  return out;
}

inline WitnessSeries damping_criteria(const TransferFn& traj, int dim,
                                      const std::vector<double>& grid,
                                      const Tolerances& tol = default_tolerances()) {
  return damping_criteria(
      [&](double t) { return generator_from_trajectory(traj, t, tol); }, dim, grid, tol);
}

// Accumulated negativity integral_0^T sum_j max(-gamma_j(t), 0) dt.
inline double hcla_measure(const std::function<RealVector(double)>& rates, double t_max,
                           const Tolerances& tol = default_tolerances()) {
  if (!(t_max > 0.0)) raise(errc::bad_params, "hcla_measure");
  auto integrand = [&](double t) {
    const RealVector g = rates(t);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) acc += std::max(-g(j), 0.0);
    return acc;
  };
  return integrate(integrand, 0.0, t_max, tol.quadrature);
}

// Earliest grid time with a non-Markovian CP verdict (falling back to the
// rate columns when no CP column is present), refined by bisection on the
// smallest-rate sign when a continuous evaluator is available.
inline std::optional<double> onset_detector(
    const WitnessSeries& series,
    const std::optional<std::function<double(double)>>& min_rate = std::nullopt,
    double rate_threshold = 1e-9, const Tolerances& tol = default_tolerances()) {
  const int n = static_cast<int>(series.grid.size());
  int hit = -1;
  if (!series.choi_min_eig.empty() && series.cp_epsilon > 0.0) {
    for (int i = 0; i < n && hit < 0; ++i)
      if (series.cp_verdict(i, tol).value_or(false)) hit = i;
  } else if (!series.rates.empty()) {
    for (int i = 0; i < n && hit < 0; ++i)
      for (const auto& col : series.rates)
        if (col[i] < -rate_threshold) {
          hit = i;
          break;
        }
  }
  if (hit < 0) return std::nullopt;
  if (hit == 0 || !min_rate) return series.grid[hit];
  const double lo = series.grid[hit - 1], hi = series.grid[hit];
  const auto& f = *min_rate;
  if (!((f(lo) > 0.0) != (f(hi) > 0.0))) return series.grid[hit];
  return find_root(f, lo, hi, 1e-8);
}

}  // namespace channelscope
