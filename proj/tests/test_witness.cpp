#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "channelscope/witness.hpp"
#include "channelscope/zoo.hpp"

using namespace channelscope;

namespace {

TransferFn gad_traj(const ParamCurve& p, const ParamCurve& lam) {
  return [p, lam](double t) { return kraus_to_transfer(qubit_gad(p.value(t), lam.value(t))); };
}

// constant-rate dephasing-flavored semigroup in closed form
TransferFn pauli_semigroup(double gx, double gy, double gz) {
  return [=](double t) {
    RealMatrix f = RealMatrix::Zero(4, 4);
    f(0, 0) = 1.0;
    f(1, 1) = std::exp(-2.0 * (gy + gz) * t);
    f(2, 2) = std::exp(-2.0 * (gx + gz) * t);
    f(3, 3) = std::exp(-2.0 * (gx + gy) * t);
    return TransferMatrix{2, f};
  };
}

}  // namespace

TEST_CASE("cp scan stays quiet on a markovian damping family", "[witness]") {
  TransferFn traj = gad_traj(ParamCurve::constant(0.3), ParamCurve::exp_rise(1.3));
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.05, 3.0, 40));
  REQUIRE(s.cp_epsilon == Catch::Approx(1e-3));
  REQUIRE(s.policy.find("half-check") != std::string::npos);
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    REQUIRE(s.singular[i] == 0);
    const auto v = s.cp_verdict(i);
    REQUIRE(v.has_value());
    REQUIRE_FALSE(*v);
  }
}

TEST_CASE("cp scan flags exactly the negative-rate window", "[witness]") {
  const QuasiEnmParams q{};
  TransferFn traj = gad_traj(quasi_enm_p_curve(q), quasi_enm_lambda_curve(q));
  const double ts = t_star(q);
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.05, 5.0, 120));
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double t = s.grid[i];
    if (std::abs(t - ts) <= 0.01) continue;  // window straddles the sign change
    REQUIRE(s.cp_verdict(i).value_or(false) == (t > ts));
  }
}

TEST_CASE("cp scan flags every node of the eternal pauli family", "[witness]") {
  TransferFn traj = [](double t) { return kraus_to_transfer(pauli_enm(1.0, t)); };
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.3, 3.0, 15));
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    REQUIRE(s.cp_verdict(i).value_or(false));
}

TEST_CASE("scan window width is validated", "[witness]") {
  TransferFn traj = gad_traj(ParamCurve::constant(0.3), ParamCurve::exp_rise(1.0));
  Tolerances tol = default_tolerances();
  tol.intermediate_epsilon = 1e-7;
  REQUIRE_THROWS_AS(cp_divisibility_scan(traj, linspace(0.1, 1.0, 5), tol), Error);
  tol.intermediate_epsilon = 0.05;
  REQUIRE_THROWS_AS(cp_divisibility_scan(traj, linspace(0.1, 1.0, 5), tol), Error);
}

TEST_CASE("semigroup is clean on both divisibility criteria", "[witness]") {
  TransferFn traj = pauli_semigroup(0.25, 0.25, 0.3);
  const auto grid = linspace(0.05, 3.0, 30);
  const WitnessSeries cp = cp_divisibility_scan(traj, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) REQUIRE_FALSE(cp.cp_verdict(i).value_or(true));

  const WitnessSeries p = p_divisibility_scan(traj, grid, default_pair_ensemble(50, 20));
  const Tolerances& tol = default_tolerances();
  for (double v : p.td_derivative_max) REQUIRE(v <= tol.p_derivative);
}

TEST_CASE("recohering dephasing trips the plain distinguishability scan", "[witness]") {
  TransferFn traj = [](double t) {
    const double gamma = t <= 1.0 ? t : 2.0 - t;
    const double g = std::exp(-2.0 * gamma);
    RealMatrix f = RealMatrix::Zero(4, 4);
    f(0, 0) = 1.0;
    f(1, 1) = f(2, 2) = g;
    f(3, 3) = 1.0;
    return TransferMatrix{2, f};
  };
  const std::vector<double> grid{0.2, 0.5, 0.8, 1.2, 1.5, 1.8};
  const WitnessSeries s = p_divisibility_scan(traj, grid, default_pair_ensemble(30, 10));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1.0)
      REQUIRE(s.td_derivative_max[i] <= 1e-7);
    else
      REQUIRE(s.td_derivative_max[i] > 1e-3);
  }
}

TEST_CASE("trace distance contracts under random channels", "[witness]") {
  Rng rng(29);
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      const KrausSet ks{d, random_channel(d, 3, rng)};
      const Matrix a = random_mixed_state(d, rng);
      const Matrix b = random_mixed_state(d, rng);
      const double before = trace_norm(a - b);
      const double after = trace_norm(apply_kraus(ks, a - b));
      REQUIRE(after <= before + 1e-9);
    }
  }
}

TEST_CASE("translation part does not move the distinguishability column", "[witness]") {
  const QuasiEnmParams q{};
  TransferFn traj = gad_traj(quasi_enm_p_curve(q), quasi_enm_lambda_curve(q));
  TransferFn stripped = [traj](double t) {
    TransferMatrix tm = traj(t);
    tm.F.block(1, 0, tm.F.rows() - 1, 1).setZero();
    return tm;
  };
  const auto grid = linspace(0.1, 2.0, 10);
  const StatePairEnsemble ens = default_pair_ensemble(40, 20);
  const WitnessSeries a = p_divisibility_scan(traj, grid, ens);
  const WitnessSeries b = p_divisibility_scan(stripped, grid, ens);
  // not bitwise: the pair differences carry a ~1e-16 trace residue that the
  // translation column acts on, and the central-difference 1/(2h) blows that
  // up by ~5e3
  for (std::size_t i = 0; i < grid.size(); ++i)
    REQUIRE(std::abs(a.td_derivative_max[i] - b.td_derivative_max[i]) < 1e-11);
}

TEST_CASE("ancilla scan sees the pauli backflow the plain scan misses", "[witness]") {
  TransferFn traj = [](double t) { return kraus_to_transfer(pauli_enm(1.0, t)); };
  const auto grid = linspace(0.2, 2.0, 10);

  const WitnessSeries plain = p_divisibility_scan(traj, grid, default_pair_ensemble(100, 50));
  const Tolerances& tol = default_tolerances();
  for (double v : plain.td_derivative_max) REQUIRE(v <= tol.p_derivative);

  const WitnessSeries assisted = ancilla_p_scan(traj, grid);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    REQUIRE(assisted.singular[i] == 0);
    REQUIRE(assisted.td_derivative_max[i] > 1e-6);
    worst = std::max(worst, assisted.td_derivative_max[i]);
  }
  REQUIRE(worst > 1e-2);
  REQUIRE(assisted.policy.find("forward") != std::string::npos);
}

TEST_CASE("ancilla scan is quiet on a divisible family", "[witness]") {
  TransferFn traj = gad_traj(ParamCurve::constant(0.3), ParamCurve::exp_rise(1.3));
  AncillaOptions opts;
  opts.fixed_point = gad_fixed_point(0.3);
  const WitnessSeries s = ancilla_p_scan(traj, linspace(0.1, 2.0, 8), opts);
  for (double v : s.td_derivative_max) REQUIRE(v <= 1e-7);
}

TEST_CASE("identity evolution has a flat distinguishability profile", "[witness]") {
  TransferFn traj = [](double) { return TransferMatrix{2, RealMatrix::Identity(4, 4)}; };
  const WitnessSeries s =
      p_divisibility_scan(traj, linspace(0.1, 1.0, 5), default_pair_ensemble(20, 5));
  for (double v : s.td_derivative_max) REQUIRE(std::abs(v) <= 1e-12);
}

TEST_CASE("damping criteria of the exponential-rise family", "[witness]") {
  const double nu = 0.9;
  auto gen = gad_generator(ParamCurve::constant(0.35), ParamCurve::exp_rise(nu));
  const auto grid = linspace(0.1, 3.0, 9);
  const WitnessSeries s = damping_criteria(gen, 2, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    REQUIRE(s.trace_D[i] == Catch::Approx(-2.0 * nu).margin(1e-9));
    REQUIRE(s.hmax_DDT[i] == Catch::Approx(-nu).margin(1e-9));
  }

  // trajectory overload reaches the same numbers through finite differences
  TransferFn traj = gad_traj(ParamCurve::constant(0.35), ParamCurve::exp_rise(nu));
  const WitnessSeries fd = damping_criteria(traj, 2, linspace(0.2, 1.4, 4));
  for (double v : fd.trace_D) REQUIRE(v == Catch::Approx(-2.0 * nu).margin(1e-7));
}

TEST_CASE("accumulated negativity measure", "[witness]") {
  auto positive = [](double) {
    RealVector g(3);
    g << 0.2, 0.1, 0.4;
    return g;
  };
  REQUIRE(hcla_measure(positive, 5.0) <= 1e-12);

  auto pauli_rates = [](double t) {
    RealVector g(3);
    g << 0.5, 0.5, -0.5 * std::tanh(t);
    return g;
  };
  const double want = 0.5 * std::log(std::cosh(3.0));
  REQUIRE(hcla_measure(pauli_rates, 3.0) == Catch::Approx(want).epsilon(1e-6));

  REQUIRE_THROWS_AS(hcla_measure(positive, -1.0), Error);
}

TEST_CASE("onset detection refines the first flagged node", "[witness]") {
  const QuasiEnmParams q{};
  const ParamCurve p = quasi_enm_p_curve(q);
  const ParamCurve lam = quasi_enm_lambda_curve(q);
  TransferFn traj = gad_traj(p, lam);
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.05, 2.0, 60));
  auto gamma1 = [p, lam](double t) { return rates_qubit_gad(p, lam, t)(0); };
  const auto onset = onset_detector(s, gamma1);
  REQUIRE(onset.has_value());
  REQUIRE(*onset == Catch::Approx(std::log(1.5)).margin(1e-6));
}

TEST_CASE("onset detection returns nothing on a markovian family", "[witness]") {
  TransferFn traj = gad_traj(ParamCurve::constant(0.3), ParamCurve::exp_rise(1.3));
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.05, 2.0, 30));
  REQUIRE_FALSE(onset_detector(s).has_value());
}

TEST_CASE("onset at the very first node is reported as-is", "[witness]") {
  TransferFn traj = [](double t) { return kraus_to_transfer(pauli_enm(1.0, t)); };
  const WitnessSeries s = cp_divisibility_scan(traj, linspace(0.3, 2.0, 12));
  auto gamma3 = [](double t) { return -0.5 * std::tanh(t); };
  const auto onset = onset_detector(s, gamma3);
  REQUIRE(onset.has_value());
  REQUIRE(*onset == s.grid.front());
}

TEST_CASE("onset detection falls back to rate columns", "[witness]") {
  WitnessSeries s;
  s.grid = {1.0, 2.0, 3.0, 4.0};
  s.rates = {{0.2, 0.1, -0.001, -0.1}};
  REQUIRE(onset_detector(s).value() == 3.0);
  s.rates = {{0.2, 0.1, 0.05, 0.04}};
  REQUIRE_FALSE(onset_detector(s).has_value());
}

TEST_CASE("cp threshold scales with window and conditioning", "[witness]") {
  REQUIRE(cp_violation_threshold(1e-3, 1.0) == Catch::Approx(1e-12));
  REQUIRE(cp_violation_threshold(1e-2, 1.0) == Catch::Approx(1e-11));
  const double ulp = std::numeric_limits<double>::epsilon();
  REQUIRE(cp_violation_threshold(1e-3, 1e9) == Catch::Approx(10.0 * ulp * 1e9));
}

TEST_CASE("series plumbing", "[witness]") {
  WitnessSeries a, b;
  a.grid = {1.0, 2.0};
  b.grid = {1.0, 2.5};
  REQUIRE_THROWS_AS(merge_series(a, b), Error);

  b.grid = a.grid;
  b.td_derivative_max = {0.1, 0.2};
  b.policy = "p";
  merge_series(a, b);
  REQUIRE(a.td_derivative_max == b.td_derivative_max);
  REQUIRE(a.policy == "p");

  WitnessSeries bad;
  bad.grid = {1.0, 2.0};
  bad.td_derivative_max = {std::numeric_limits<double>::quiet_NaN(), 0.5};
  REQUIRE_THROWS_AS(bad.validate(), Error);
  bad.singular = {1, 0};  // flagged nodes may carry NaN
  REQUIRE_NOTHROW(bad.validate());

  // verdicts need a cp column and an unflagged node
  WitnessSeries c;
  c.grid = {1.0, 2.0};
  REQUIRE_FALSE(c.cp_verdict(0).has_value());
  c.choi_min_eig = {-1.0, -1.0};
  c.cp_epsilon = 1e-3;
  c.singular = {1, 0};
  REQUIRE_FALSE(c.cp_verdict(0).has_value());
  REQUIRE(c.cp_verdict(1).value());
}
