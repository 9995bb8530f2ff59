#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "channelscope/ensembles.hpp"
#include "channelscope/model.hpp"
#include "channelscope/witness.hpp"
#include "channelscope/zoo.hpp"

namespace channelscope {

struct SuiteResult {
  std::string name;
  long samples = 0;
  double worst_margin = 0.0;
  bool pass = false;
  std::string note;
};

struct CertifyReport {
  int schema = 1;
  std::uint64_t seed = 0;
  std::vector<SuiteResult> suites;
  bool pass = false;
  double onset = 0.0;
  double hcla = 0.0;
  double hcla_reference = 0.0;
};

namespace detail {

// Departure speed from the initial state toward the invariant one: the
// distance to the fixed point cannot grow at t = 0 for any admissible
// strength curve, checked by raw forward differences.
inline SuiteResult suite_contraction(Rng& rng) {
  SuiteResult r{"contraction_to_fixed_point"};
  double worst = -std::numeric_limits<double>::infinity();
  const double h = 1e-6;
  for (int d = 2; d <= 4; ++d) {
    std::vector<double> lambda_at_h;
    for (int k = 0; k < 10; ++k)
      lambda_at_h.push_back(random_admissible_pair(rng).lambda.value(h));
    for (int s = 0; s < 50; ++s) {
      const RealVector p = random_simplex(d, rng);
      const Matrix fix = gad_fixed_point(p);
      for (int j = 0; j < 50; ++j) {
        const Matrix rho = random_mixed_state(d, rng);
        const double dist0 = 0.5 * trace_norm(rho - fix);
        for (double lam_h : lambda_at_h) {
          const double dist_h = 0.5 * trace_norm(apply_qudit_gad(p, lam_h, rho) - fix);
          worst = std::max(worst, (dist_h - dist0) / h);
          ++r.samples;
        }
      }
    }
  }
  r.worst_margin = worst;
  r.pass = worst <= 1e-7;
  r.note = "max forward d/dt at t=0 of trace distance to the fixed point";
  return r;
}

// The damping form of the exponential-strength family is constant:
// D = diag(-nu/2, -nu/2, -nu), so Tr D = -2 nu and the largest eigenvalue
// of D + D^T is -nu regardless of the population curve.
inline SuiteResult suite_damping_values(Rng& rng) {
  SuiteResult r{"damping_form_values"};
  double worst = 0.0;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    const double nu = 0.5 + 2.5 * uni(rng);
    const double m = nu + 0.5 + 2.0 * uni(rng);
    const double n = 1.0 + 2.0 * uni(rng);
    const QuasiEnmParams q{m, nu, n};
    auto gen = gad_generator(quasi_enm_p_curve(q), quasi_enm_lambda_curve(q));
    const WitnessSeries ds = damping_criteria(gen, 2, linspace(0.1, 3.0, 7));
    for (std::size_t i = 0; i < ds.grid.size(); ++i) {
      worst = std::max(worst, std::abs(ds.trace_D[i] + 2.0 * nu));
      worst = std::max(worst, std::abs(ds.hmax_DDT[i] + nu));
      if (!(ds.hmax_DDT[i] < 0.0)) worst = std::max(worst, 1.0);
      ++r.samples;
    }
  }
  r.worst_margin = worst;
  r.pass = worst <= 1e-9;
  r.note = "|Tr D + 2 nu| and |hmax(D+D^T) + nu| along random instances";
  return r;
}

// Short-time limits of the analytic rate pair: gamma_1 -> p(0) l'(0),
// gamma_2 -> (1-p(0)) l'(0); both non-negative for admissible curves, and
// the symmetrized damping matrix stays non-expansive at the origin.
inline SuiteResult suite_rate_limits(Rng& rng) {
  SuiteResult r{"rate_limits_at_origin"};
  double worst = 1.0;
  double accuracy = 0.0;
  double worst_hmax = -1.0;
  for (int k = 0; k < 50; ++k) {
    const CurvePair pair = random_admissible_pair(rng);
    const RealVector g = rates_qubit_gad(pair.p, pair.lambda, 0.0);
    const double ldot = pair.lambda.derivative(0.0);
    const double p0 = pair.p.value(0.0);
    accuracy = std::max(accuracy, std::abs(g(0) - ldot * p0));
    accuracy = std::max(accuracy, std::abs(g(1) - ldot * (1.0 - p0)));
    worst = std::min(worst, std::min(g(0), g(1)));
    const DampingForm df =
        damping_form(generator_superoperator(gad_snapshot(pair.p, pair.lambda, 0.0)), 0.0, 2);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(RealMatrix(df.D + df.D.transpose()));
    worst_hmax = std::max(worst_hmax, es.eigenvalues().maxCoeff());
    ++r.samples;
  }
  r.worst_margin = worst;
  r.pass = worst >= -1e-9 && accuracy <= 1e-10 && worst_hmax <= 1e-9;
  r.note = "min limit rate >= -1e-9; closed form to 1e-10; hmax(D+D^T) at 0+ <= 1e-9";
  return r;
}

// The admission validators must accept the library's own curves and refuse
// curves that start damped, overshoot, or shrink at the origin.
inline SuiteResult suite_admission() {
  SuiteResult r{"curve_admission"};
  long misbehaved = 0;
  const double horizon = 5.0;
  auto accepts = [&](const ParamCurve& c) {
    ++r.samples;
    try {
      validate_damping_curve(c, horizon);
      return true;
    } catch (const Error& e) {
      if (e.code() != errc::curve_out_of_range) throw;
      return false;
    }
  };
  if (!accepts(ParamCurve::exp_rise(2.0))) ++misbehaved;
  if (!accepts(ParamCurve::tanh_scaled(1.0, 0.9))) ++misbehaved;
  if (!accepts(ParamCurve::constant(0.0))) ++misbehaved;
  if (!accepts(quasi_enm_lambda_curve({}))) ++misbehaved;
  if (accepts(ParamCurve::constant(0.1))) ++misbehaved;        // does not start at zero
  if (accepts(ParamCurve::exp_rise(2.0, 1.4))) ++misbehaved;   // overshoots 1
  if (accepts(ParamCurve::table({0.0, 1.0, 5.0}, {0.0, -0.3, 0.5}))) ++misbehaved;  // dips negative
  if (accepts(ParamCurve::tanh_scaled(1.0, -0.5))) ++misbehaved;  // decreasing at origin
  r.worst_margin = static_cast<double>(misbehaved);
  r.pass = misbehaved == 0;
  r.note = "acceptance/rejection table of the damping-curve validator";
  return r;
}

// V(t, s) composed with the map up to s must reproduce the map up to t,
// and the affine split must satisfy tau_t = M_ts tau_s + tau_ts.
inline SuiteResult suite_reconstruction() {
  SuiteResult r{"intermediate_reconstruction"};
  const QuasiEnmParams q{};
  const ParamCurve p = quasi_enm_p_curve(q);
  const ParamCurve lam = quasi_enm_lambda_curve(q);
  TransferFn traj = [p, lam](double t) {
    return kraus_to_transfer(qubit_gad(p.value(t), lam.value(t)));
  };
  const std::vector<double> grid = linspace(0.0, 5.0, 100);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); i += 3) {
    const TransferMatrix fs = traj(grid[i]);
    const TransferMatrix ft = traj(grid[i + 1]);
    const IntermediateMap im = intermediate_map(ft, fs);
    worst = std::max(worst, (compose(im.map, fs).F - ft.F).cwiseAbs().maxCoeff());
    const AffineRep split = unital_nonunital_split(ft, fs);
    const AffineRep at = transfer_to_affine(ft);
    const AffineRep as = transfer_to_affine(fs);
    worst = std::max(worst, (at.tau - (split.M * as.tau + split.tau)).cwiseAbs().maxCoeff());
    ++r.samples;
  }
  r.worst_margin = worst;
  r.pass = worst <= 1e-8;
  r.note = "max reassembly error over (s, t) pairs of the default instance";
  return r;
}

// The drifted eternal model: every extracted rate spectrum bottoms out at
// -tanh t, and the generator moves the identity (non-unital action).
inline SuiteResult suite_nonunital_eternal() {
  SuiteResult r{"eternal_nonunital"};
  const double gamma = 1.0;
  auto gen = nonunital_enm_generator(gamma);
  const CachedTrajectory cache(gen, 2, 4.0);
  double worst = 0.0;
  double moved = 1e300;
  for (double t : {0.2, 0.7, 1.3, 2.1, 3.4}) {
    const GeneratorSnapshot gs =
        snapshot_from_trajectory([&](double u) { return cache.at(u); }, t, 2);
    const RealVector rates = canonical_rates(gs).rates;
    worst = std::max(worst, std::abs(rates.minCoeff() + std::tanh(t)));
    const Matrix li = apply_superoperator(gen(t), Matrix::Identity(2, 2), 2);
    moved = std::min(moved, trace_norm(li));
    ++r.samples;
  }
  r.worst_margin = worst;
  r.pass = worst <= 1e-6 && moved >= 0.1;
  r.note = "|min rate + tanh t| via extraction; generator displaces the identity";
  return r;
}

// Four-level composite: negative canonical rate at every probe time while
// the Kraus set stays complete, and the generator is non-unital.
inline SuiteResult suite_ququart_eternal() {
  SuiteResult r{"eternal_ququart"};
  const double c = 1.0, nu = 1.0;
  TransferFn traj = [=](double t) { return kraus_to_transfer(ququart_enm(c, nu, t)); };
  double worst_rate = 0.0;
  double completeness = 0.0;
  double moved = 1e300;
  for (double t : {0.3, 0.9, 1.6, 2.4}) {
    completeness = std::max(completeness, completeness_defect(ququart_enm(c, nu, t)));
    const GeneratorSnapshot gs = snapshot_from_trajectory(traj, t, 4);
    const RealVector rates = canonical_rates(gs).rates;
    worst_rate = std::max(worst_rate, std::abs(rates.minCoeff() + 0.25 * std::tanh(t)));
    const Matrix li =
        apply_superoperator(generator_from_trajectory(traj, t), Matrix::Identity(4, 4), 4);
    moved = std::min(moved, trace_norm(li));
    ++r.samples;
  }
  r.worst_margin = std::max(worst_rate, completeness);
  r.pass = worst_rate <= 1e-5 && completeness <= 1e-10 && moved >= 0.1;
  r.note = "min rate tracks -tanh(t)/4; complete Kraus set; identity displaced";
  return r;
}

}  // namespace detail

inline CertifyReport run_certification(std::uint64_t seed = 42) {
  CertifyReport rep;
  rep.seed = seed;
  Rng rng(seed);
  rep.suites.push_back(detail::suite_contraction(rng));
  rep.suites.push_back(detail::suite_damping_values(rng));
  rep.suites.push_back(detail::suite_rate_limits(rng));
  rep.suites.push_back(detail::suite_admission());
  rep.suites.push_back(detail::suite_reconstruction());
  rep.suites.push_back(detail::suite_nonunital_eternal());
  rep.suites.push_back(detail::suite_ququart_eternal());
  rep.pass = true;
  for (const auto& s : rep.suites) rep.pass = rep.pass && s.pass;

  const QuasiEnmParams q{};
  const ParamCurve p = quasi_enm_p_curve(q);
  const ParamCurve lam = quasi_enm_lambda_curve(q);
  auto rate_fn = [p, lam](double t) { return rates_qubit_gad(p, lam, t); };
  WitnessSeries series;
  series.grid = linspace(0.01, 3.0, 120);
  series.rates.assign(2, std::vector<double>(series.grid.size()));
  for (std::size_t i = 0; i < series.grid.size(); ++i) {
    const RealVector g = rate_fn(series.grid[i]);
    series.rates[0][i] = g(0);
    series.rates[1][i] = g(1);
  }
  auto min_rate = [rate_fn](double t) { return rate_fn(t).minCoeff(); };
  rep.onset = onset_detector(series, min_rate).value_or(-1.0);
  rep.hcla = hcla_measure(rate_fn, 25.0);
  rep.hcla_reference = hcla_closed_form(q);
  return rep;
}

inline Json to_json(const CertifyReport& rep) {
  Json suites = Json::array();
  for (const auto& s : rep.suites)
    suites.push_back({{"name", s.name},
                      {"samples", s.samples},
                      {"worst_margin", s.worst_margin},
                      {"pass", s.pass},
                      {"note", s.note}});
  return Json{{"schema", rep.schema},
              {"seed", rep.seed},
              {"suites", suites},
              {"pass", rep.pass},
              {"diagnostics",
               {{"onset", rep.onset},
                {"hcla", rep.hcla},
                {"hcla_closed_form", rep.hcla_reference}}}};
}

}  // namespace channelscope
