#include <clocale>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "channelscope/channelscope.hpp"

namespace cs = channelscope;

namespace {

std::string g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int exit_code_for(const cs::Error& e) {
  switch (e.code()) {
    case cs::errc::parse_error:
      return 2;
    case cs::errc::bad_params:
    case cs::errc::bad_simplex:
    case cs::errc::bad_rate:
    case cs::errc::bad_dimension:
    case cs::errc::curve_out_of_range:
      return 4;
    default:
      return 3;  // numerical trouble
  }
}

struct Options {
  std::string spec_path;
  std::string out_path;
  std::string grid_str;
  std::vector<std::string> tol_overrides;
  std::uint64_t seed = 42;
  bool to_stdout = false;
  bool ancilla = false;
  double time_point = 1.0;
  double m_min = 2.2, m_max = 6.0;
  int m_points = 20;
  double t_max_override = -1.0;
};

cs::Tolerances apply_tol_overrides(const std::vector<std::string>& pairs) {
  cs::Tolerances tol;
  for (const auto& kv : pairs) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos)
      cs::raise(cs::errc::parse_error, "--tol expects name=value, got '" + kv + "'");
    const std::string name = kv.substr(0, pos);
    double value = 0.0;
    try {
      value = std::stod(kv.substr(pos + 1));
    } catch (...) {
      cs::raise(cs::errc::parse_error, "--tol " + name + ": bad number");
    }
    if (name == "structural")
      tol.structural = value;
    else if (name == "reconstruction")
      tol.reconstruction = value;
    else if (name == "generator_residual")
      tol.generator_residual = value;
    else if (name == "fd_step")
      tol.fd_step = value;
    else if (name == "fd_consistency")
      tol.fd_consistency = value;
    else if (name == "intermediate_epsilon")
      tol.intermediate_epsilon = value;
    else if (name == "condition_limit")
      tol.condition_limit = value;
    else if (name == "cp_negativity")
      tol.cp_negativity = value;
    else if (name == "p_derivative")
      tol.p_derivative = value;
    else if (name == "quadrature")
      tol.quadrature = value;
    else if (name == "step_doubling")
      tol.step_doubling = value;
    else if (name == "damping_saturation")
      tol.damping_saturation = value;
    else
      cs::raise(cs::errc::parse_error, "--tol: unknown knob '" + name + "'");
  }
  return tol;
}

cs::Json default_spec() {
  return cs::Json{{"family", "quasi_enm_gad"},
                  {"params", {{"m", 3.0}, {"nu", 1.0}, {"n", 2.0}}},
                  {"grid", {{"t_min", 0.0}, {"t_max", 5.0}, {"points", 200}}}};
}

cs::ChannelModel load_model(const Options& opt) {
  cs::ChannelModel model = opt.spec_path.empty()
                               ? cs::load_channel_spec(default_spec())
                               : cs::load_channel_spec_file(opt.spec_path);
  if (!opt.grid_str.empty()) {
    double a = 0.0, b = 0.0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(opt.grid_str);
    if (!(is >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || !(b > a) || n < 2)
      cs::raise(cs::errc::parse_error, "--grid expects tmin:tmax:points");
    if (a < 0.0) cs::raise(cs::errc::bad_params, "--grid: negative t_min");
    const double old_max = model.grid.t_max;
    model.grid = {a, b, n};
    if (b > old_max * 1.05 + 0.05 && model.cache)
      cs::raise(cs::errc::bad_params,
                "--grid extends past the precomputed horizon; raise grid.t_max in the spec");
  }
  return model;
}

void write_output(const Options& opt, const std::string& content) {
  if (!opt.to_stdout && opt.out_path.empty())
    cs::raise(cs::errc::parse_error, "need --out FILE or --stdout");
  if (opt.to_stdout) std::cout << content;
  if (!opt.out_path.empty()) {
    const std::string tmp = opt.out_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) cs::raise(cs::errc::parse_error, "cannot write " + tmp);
      out << content;
    }
    std::filesystem::rename(tmp, opt.out_path);
  }
}

cs::StatePairEnsemble make_ensemble(int dim, std::uint64_t seed) {
  if (dim == 2) return cs::default_pair_ensemble(200, 100, seed);
  cs::StatePairEnsemble ens;
  cs::Rng rng(seed);
  for (int i = 0; i < 200; ++i)
    ens.pairs.emplace_back(cs::random_mixed_state(dim, rng), cs::random_mixed_state(dim, rng));
  ens.policy = "ginibre-200;dim=" + std::to_string(dim) + ";seed=" + std::to_string(seed);
  return ens;
}

int run_scan(const Options& opt) {
  const cs::Tolerances tol = apply_tol_overrides(opt.tol_overrides);
  cs::ChannelModel model = load_model(opt);
  const std::vector<double> grid =
      cs::linspace(model.grid.t_min, model.grid.t_max, model.grid.points);
  const int n = static_cast<int>(grid.size());
  const int k = model.n_rates;

  cs::WitnessSeries series;
  series.grid = grid;
  series.spec_hash = model.hash;
  series.singular.assign(n, 0);
  series.rates.assign(k, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  cs::parallel_for(n, [&](int i) {
    try {
      const cs::RealVector g = model.rates(grid[i]);
      for (int j = 0; j < k; ++j) series.rates[j][i] = g(j);
    } catch (const cs::Error&) {
      series.singular[i] = 1;
    }
  });

  cs::merge_series(series, cs::cp_divisibility_scan(model.transfer, grid, tol));
  if (opt.ancilla) {
    cs::AncillaOptions aopts;
    aopts.seed = opt.seed;
    aopts.fixed_point = model.fixed_point;
    cs::merge_series(series, cs::ancilla_p_scan(model.transfer, grid, aopts, tol));
  } else {
    cs::merge_series(series,
                     cs::p_divisibility_scan(model.transfer, grid,
                                             make_ensemble(model.dim, opt.seed), tol));
  }
  if (model.generator) {
    cs::merge_series(series, cs::damping_criteria(model.generator, model.dim, grid, tol));
  } else {
    cs::merge_series(series, cs::damping_criteria(model.transfer, model.dim, grid, tol));
  }

  std::ostringstream csv;
  csv << "t";
  for (int j = 1; j <= k; ++j) csv << ",gamma_" << j;
  csv << ",choi_min_eig,td_deriv_max,trace_D,hmax_DDT\n";
  int failed = 0;
  for (int i = 0; i < n; ++i) {
    csv << g12(grid[i]);
    for (int j = 0; j < k; ++j) csv << ',' << g12(series.rates[j][i]);
    csv << ',' << g12(series.choi_min_eig[i]) << ',' << g12(series.td_derivative_max[i]) << ','
        << g12(series.trace_D[i]) << ',' << g12(series.hmax_DDT[i]) << '\n';
    if (series.singular[i]) ++failed;
  }
  write_output(opt, csv.str());
  if (failed * 100 > n) {
    std::cerr << "scan: " << failed << "/" << n << " grid nodes failed numerically\n";
    return 3;
  }
  return 0;
}

int run_fig1(const Options& opt) {
  cs::ChannelModel model = load_model(opt);
  if (model.n_rates != 2)
    cs::raise(cs::errc::bad_params,
              "rate-pair table needs a two-rate family (qubit_gad / quasi_enm_gad)");
  const std::vector<double> grid =
      cs::linspace(model.grid.t_min, model.grid.t_max, model.grid.points);
  std::ostringstream csv;
  csv << "t,gamma_1,gamma_2\n";
  for (double t : grid) {
    const cs::RealVector g = model.rates(t);
    csv << g12(t) << ',' << g12(g(0)) << ',' << g12(g(1)) << '\n';
  }
  write_output(opt, csv.str());
  return 0;
}

int run_fig2(const Options& opt) {
  const cs::Tolerances tol = apply_tol_overrides(opt.tol_overrides);
  cs::Json doc = opt.spec_path.empty() ? default_spec() : cs::Json();
  if (!opt.spec_path.empty()) {
    std::ifstream in(opt.spec_path);
    if (!in) cs::raise(cs::errc::parse_error, "cannot open spec file " + opt.spec_path);
    doc = cs::Json::parse(in, nullptr, false);
    if (doc.is_discarded()) cs::raise(cs::errc::parse_error, "invalid JSON spec");
  }
  const cs::Json params = doc.value("params", cs::Json::object());
  const double nu = params.value("nu", 1.0);
  const double n_cells = params.value("n", 2.0);
  if (!(opt.m_min > nu))
    cs::raise(cs::errc::bad_params, "m sweep must start above nu");
  if (opt.m_points < 2 || !(opt.m_max > opt.m_min))
    cs::raise(cs::errc::bad_params, "bad m sweep range");

  std::ostringstream csv;
  csv << "m,xi_hcla\n";
  for (int i = 0; i < opt.m_points; ++i) {
    const double m = opt.m_min + (opt.m_max - opt.m_min) * i / (opt.m_points - 1);
    const cs::QuasiEnmParams q{m, nu, n_cells};
    const double xi = cs::hcla_closed_form(q);
    if (i % 5 == 0 || i == opt.m_points - 1) {
      const cs::ParamCurve p = cs::quasi_enm_p_curve(q);
      const cs::ParamCurve lam = cs::quasi_enm_lambda_curve(q);
      const double quad = cs::hcla_measure(
          [&](double t) { return cs::rates_qubit_gad(p, lam, t); }, 25.0, tol);
      if (std::abs(quad - xi) > 1e-6)
        cs::raise(cs::errc::not_converged,
                  "closed form and quadrature disagree at m=" + g12(m) + ": " + g12(xi) +
                      " vs " + g12(quad));
    }
    csv << g12(m) << ',' << g12(xi) << '\n';
  }
  write_output(opt, csv.str());
  return 0;
}

int run_certify(const Options& opt) {
  cs::CertifyReport rep = cs::run_certification(opt.seed);
  if (!opt.spec_path.empty()) {
    // A user-supplied channel must also clear the curve-admission gate;
    // a refusal is a failed certification, not a malformed invocation.
    cs::SuiteResult gate{"spec_admission"};
    gate.samples = 1;
    try {
      load_model(opt);
      gate.pass = true;
      gate.note = "channel specification admitted";
    } catch (const cs::Error& e) {
      if (e.code() != cs::errc::curve_out_of_range) throw;
      gate.pass = false;
      gate.worst_margin = 1.0;
      gate.note = e.what();
    }
    rep.suites.push_back(gate);
    rep.pass = rep.pass && gate.pass;
  }
  write_output(opt, cs::to_json(rep).dump(2) + "\n");
  if (!rep.pass) {
    std::cerr << "certification failed\n";
    return 5;
  }
  return 0;
}

int run_choi_spectrum(const Options& opt) {
  const cs::Tolerances tol = apply_tol_overrides(opt.tol_overrides);
  cs::ChannelModel model = load_model(opt);
  if (opt.time_point < 0.0) cs::raise(cs::errc::bad_params, "--time must be >= 0");
  const cs::ChoiMatrix chi = cs::transfer_to_choi(model.transfer(opt.time_point));
  const cs::EigResult eig = cs::herm_eig(chi.chi, tol);
  std::ostringstream csv;
  csv << "index,eigenvalue\n";
  for (int i = 0; i < eig.values.size(); ++i)
    csv << i << ',' << g12(eig.values(i)) << '\n';
  write_output(opt, csv.str());
  return 0;
}

int run_tstar(const Options& opt) {
  cs::Json doc = default_spec();
  if (!opt.spec_path.empty()) {
    std::ifstream in(opt.spec_path);
    if (!in) cs::raise(cs::errc::parse_error, "cannot open spec file " + opt.spec_path);
    doc = cs::Json::parse(in, nullptr, false);
    if (doc.is_discarded()) cs::raise(cs::errc::parse_error, "invalid JSON spec");
  }
  if (doc.value("family", "") != "quasi_enm_gad")
    cs::raise(cs::errc::bad_params, "the sign-change time is defined for quasi_enm_gad");
  const cs::Json params = doc.value("params", cs::Json::object());
  const cs::QuasiEnmParams q{params.value("m", 3.0), params.value("nu", 1.0),
                             params.value("n", 2.0)};
  const std::string line = g12(cs::t_star(q)) + "\n";
  if (opt.out_path.empty())
    std::cout << line;
  else
    write_output(opt, line);
  return 0;
}

int run_hcla(const Options& opt) {
  const cs::Tolerances tol = apply_tol_overrides(opt.tol_overrides);
  cs::ChannelModel model = load_model(opt);
  // model.rates is closed-form or Kraus-backed for every family, so the
  // horizon may exceed the scan grid.
  const double t_max = opt.t_max_override > 0.0 ? opt.t_max_override
                                                : std::max(model.grid.t_max, 25.0);
  const double value = cs::hcla_measure(model.rates, t_max, tol);
  std::ostringstream outs;
  outs << "hcla,closed_form\n" << g12(value) << ',';
  if (model.family == "quasi_enm_gad") {
    const cs::Json params = model.doc.value("params", cs::Json::object());
    const cs::QuasiEnmParams q{params.value("m", 3.0), params.value("nu", 1.0),
                               params.value("n", 2.0)};
    outs << g12(cs::hcla_closed_form(q));
  }
  outs << '\n';
  if (opt.out_path.empty() && !opt.to_stdout)
    std::cout << outs.str();
  else
    write_output(opt, outs.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"divisibility and decay-rate diagnostics for time-dependent quantum channels"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_grid = true) {
    sub->add_option("--spec", opt.spec_path, "channel spec JSON file");
    sub->add_option("--out", opt.out_path, "output file (written atomically)");
    sub->add_flag("--stdout", opt.to_stdout, "write the result to stdout");
    sub->add_option("--tol", opt.tol_overrides, "numeric knob override name=value");
    sub->add_option("--seed", opt.seed, "ensemble seed");
    if (with_grid) sub->add_option("--grid", opt.grid_str, "time grid tmin:tmax:points");
  };

  CLI::App* scan = app.add_subcommand(
      "scan", "rate, divisibility and damping columns over the time grid");
  add_common(scan);
  scan->add_flag("--ancilla", opt.ancilla,
                 "use the ancilla-assisted distinguishability scan for the td column");

  CLI::App* fig1 = app.add_subcommand("fig1", "analytic rate pair over the grid");
  add_common(fig1);

  CLI::App* fig2 = app.add_subcommand("fig2", "accumulated negativity against the decay scale m");
  add_common(fig2, false);
  fig2->add_option("--m-min", opt.m_min, "sweep start (must exceed nu)");
  fig2->add_option("--m-max", opt.m_max, "sweep end");
  fig2->add_option("--m-points", opt.m_points, "sweep resolution");

  CLI::App* certify = app.add_subcommand("certify", "self-check suites; exit 5 on failure");
  add_common(certify, false);

  CLI::App* choi = app.add_subcommand("choi-spectrum", "eigenvalues of the map's Choi matrix");
  add_common(choi);
  choi->add_option("--time", opt.time_point, "evaluation time")->required();

  CLI::App* tstar = app.add_subcommand("tstar", "sign-change time of the first decay rate");
  add_common(tstar, false);

  CLI::App* hcla = app.add_subcommand("hcla", "accumulated rate negativity of the model");
  add_common(hcla, false);
  hcla->add_option("--tmax", opt.t_max_override, "integration horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (scan->parsed()) return run_scan(opt);
    if (fig1->parsed()) return run_fig1(opt);
    if (fig2->parsed()) return run_fig2(opt);
    if (certify->parsed()) return run_certify(opt);
    if (choi->parsed()) return run_choi_spectrum(opt);
    if (tstar->parsed()) return run_tstar(opt);
    if (hcla->parsed()) return run_hcla(opt);
  } catch (const cs::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
