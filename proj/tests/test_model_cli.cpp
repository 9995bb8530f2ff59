#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "channelscope/model.hpp"

using namespace channelscope;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" +
                          std::string(CHANNELSCOPE_CLI_PATH) + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("channelscope_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_spec(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      if (header) *header = line;
      first = false;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("spec parsing builds a callable model", "[model]") {
  const Json doc{{"family", "quasi_enm_gad"},
                 {"params", {{"m", 3.0}, {"nu", 1.0}, {"n", 2.0}}},
                 {"grid", {{"t_min", 0.0}, {"t_max", 5.0}, {"points", 200}}}};
  const ChannelModel model = load_channel_spec(doc);
  REQUIRE(model.dim == 2);
  REQUIRE(model.n_rates == 2);
  REQUIRE(model.hash.size() == 16);
  REQUIRE(model.generator);
  REQUIRE_FALSE(model.fixed_point.has_value());  // population curve is not constant
  REQUIRE(model.rates(0.0)(0) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(model.transfer(0.0).F.isApprox(RealMatrix::Identity(4, 4), 1e-12));

  const Json frozen{{"family", "qubit_gad"},
                    {"params", {{"p", 0.25}}},
                    {"curves", {{"lambda", {{"family", "exp_rise"}, {"rate", 1.0}}}}}};
  const ChannelModel gad = load_channel_spec(frozen);
  REQUIRE(gad.fixed_point.has_value());
  REQUIRE(gad.fixed_point->real()(1, 1) == Catch::Approx(0.25));
}

TEST_CASE("spec parsing rejects malformed documents", "[model]") {
  auto code_of = [](const Json& doc) {
    try {
      load_channel_spec(doc);
      return errc::not_converged;  // anything distinct: should not happen
    } catch (const Error& e) {
      return e.code();
    }
  };
  REQUIRE(code_of(Json{{"params", Json::object()}}) == errc::parse_error);
  REQUIRE(code_of(Json{{"family", "warp_drive"}}) == errc::parse_error);
  REQUIRE(code_of(Json{{"family", "qubit_gad"}}) == errc::parse_error);  // lambda missing
  REQUIRE(code_of(Json{{"family", "qubit_gad"},
                       {"curves", {{"lambda", {{"family", "spline"}}}}}}) == errc::parse_error);
  REQUIRE(code_of(Json{{"family", "qudit_gad"}, {"params", {{"dim", 3}}}}) == errc::parse_error);
  // quasi family with m <= nu cannot admit a sign change
  REQUIRE(code_of(Json{{"family", "quasi_enm_gad"}, {"params", {{"m", 1.0}, {"nu", 2.0}}}}) ==
          errc::bad_params);
  // non-vanishing damping at t = 0
  REQUIRE(code_of(Json{{"family", "qubit_gad"},
                       {"curves", {{"lambda", {{"family", "constant"}, {"value", 0.1}}}}}}) ==
          errc::curve_out_of_range);
  REQUIRE(code_of(Json{{"family", "qubit_gad"},
                       {"curves", {{"lambda", {{"family", "exp_rise"}, {"rate", 1.0}}}}},
                       {"grid", {{"t_min", 0.0}, {"t_max", 5.0}, {"points", 1}}}}) ==
          errc::bad_params);
}

TEST_CASE("sign-change time on stdout", "[cli]") {
  const RunResult r = run_cli("tstar");
  REQUIRE(r.code == 0);
  REQUIRE(std::abs(std::stod(r.out) - std::log(1.5)) <= 1e-9);

  const fs::path bad = write_spec(
      "bad_quasi.json", R"({"family":"quasi_enm_gad","params":{"m":1.0,"nu":2.0}})");
  REQUIRE(run_cli("tstar --spec '" + bad.string() + "'").code == 4);

  const fs::path pauli = write_spec("pauli.json", R"({"family":"pauli_enm","params":{"c":1.0}})");
  REQUIRE(run_cli("tstar --spec '" + pauli.string() + "'").code == 4);
}

TEST_CASE("default scan is deterministic and well-formed", "[cli]") {
  const fs::path a = scratch_dir() / "scan_a.csv";
  const fs::path b = scratch_dir() / "scan_b.csv";
  const RunResult ra = run_cli("scan --out '" + a.string() + "'");
  REQUIRE(ra.code == 0);
  REQUIRE(ra.out.empty());  // --out alone keeps stdout clean
  REQUIRE(run_cli("scan --out '" + b.string() + "'").code == 0);
  const std::string text = slurp(a);
  REQUIRE(text == slurp(b));

  // single-thread run produces the same bytes
  const fs::path c = scratch_dir() / "scan_c.csv";
  REQUIRE(run_cli("scan --out '" + c.string() + "'", "CHANNELSCOPE_THREADS=1").code == 0);
  REQUIRE(text == slurp(c));

  std::string header;
  const auto rows = parse_csv(text, &header);
  REQUIRE(header == "t,gamma_1,gamma_2,choi_min_eig,td_deriv_max,trace_D,hmax_DDT");
  REQUIRE(rows.size() == 200);
  REQUIRE(text.substr(text.find('\n') + 1, 10) == std::string("0,0.5,0.5,"));
  for (const auto& row : rows) {
    REQUIRE(row.size() == 7);
    REQUIRE(row[1] + row[2] == Catch::Approx(1.0).margin(1e-9));  // rate sum = nu
    REQUIRE(row[5] == Catch::Approx(-2.0).margin(1e-7));          // trace D = -2 nu
    REQUIRE(row[6] == Catch::Approx(-1.0).margin(1e-7));          // hmax = -nu
  }
}

TEST_CASE("scan output routing and spec errors", "[cli]") {
  REQUIRE(run_cli("scan").code == 2);  // neither --out nor --stdout
  REQUIRE(run_cli("scan --stdout --spec /nonexistent.json").code == 2);
  const fs::path garbage = write_spec("garbage.json", "{family: nope");
  REQUIRE(run_cli("scan --stdout --spec '" + garbage.string() + "'").code == 2);
  REQUIRE(run_cli("scan --stdout --grid 1:2").code == 2);
  REQUIRE(run_cli("scan --stdout --tol bogus=1").code == 2);
  REQUIRE(run_cli("scan --stdout --tol intermediate_epsilon=0.05").code == 4);
  REQUIRE(run_cli("frobnicate").code == 2);  // unknown subcommand
}

TEST_CASE("cached families refuse grids past their horizon", "[cli]") {
  const fs::path spec =
      write_spec("nonunital.json", R"({"family":"nonunital_enm","params":{"gamma":1.0},
                  "grid":{"t_min":0.0,"t_max":3.0,"points":40}})");
  REQUIRE(run_cli("scan --stdout --spec '" + spec.string() + "' --grid 0:20:10").code == 4);
  const RunResult ok = run_cli("scan --stdout --spec '" + spec.string() + "' --grid 0.1:2:10");
  REQUIRE(ok.code == 0);
  const auto rows = parse_csv(ok.out);
  REQUIRE(rows.size() == 10);
  // ascending rates: the smallest one is -tanh(t)
  for (const auto& row : rows) REQUIRE(row[1] == Catch::Approx(-std::tanh(row[0])).margin(1e-6));
}

TEST_CASE("identity channel scans flat", "[cli]") {
  const fs::path spec = write_spec(
      "identity.json",
      R"({"family":"qubit_gad","curves":{"lambda":{"family":"constant","value":0.0}}})");
  const RunResult r = run_cli("scan --stdout --spec '" + spec.string() + "' --grid 0:2:20");
  REQUIRE(r.code == 0);
  for (const auto& row : parse_csv(r.out)) {
    REQUIRE(std::abs(row[1]) <= 1e-12);
    REQUIRE(std::abs(row[2]) <= 1e-12);
    REQUIRE(row[3] >= -1e-12);             // intermediate maps stay CP
    REQUIRE(std::abs(row[4]) <= 1e-9);     // nothing to distinguish
    REQUIRE(std::abs(row[5]) <= 1e-7);
    REQUIRE(std::abs(row[6]) <= 1e-7);
  }
}

TEST_CASE("ancilla scan column certifies the pauli backflow", "[cli]") {
  const fs::path spec = write_spec("pauli1.json", R"({"family":"pauli_enm","params":{"c":1.0}})");
  const RunResult plain =
      run_cli("scan --stdout --spec '" + spec.string() + "' --grid 0.2:2:8");
  REQUIRE(plain.code == 0);
  const RunResult assisted =
      run_cli("scan --stdout --ancilla --spec '" + spec.string() + "' --grid 0.2:2:8");
  REQUIRE(assisted.code == 0);
  double plain_max = -1e300, assisted_max = -1e300;
  for (const auto& row : parse_csv(plain.out)) plain_max = std::max(plain_max, row[5]);
  for (const auto& row : parse_csv(assisted.out)) {
    assisted_max = std::max(assisted_max, row[5]);
    REQUIRE(row[4] < -1e-12);  // intermediate maps are never CP on this family
  }
  REQUIRE(plain_max <= 1e-7);
  REQUIRE(assisted_max > 1e-3);
}

TEST_CASE("rate-pair table", "[cli]") {
  const RunResult r = run_cli("fig1 --stdout");
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  REQUIRE(header == "t,gamma_1,gamma_2");
  REQUIRE(rows.size() == 200);
  int sign_changes = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i][1] + rows[i][2] == Catch::Approx(1.0).margin(1e-9));
    if (i > 0 && (rows[i - 1][1] > 0.0) != (rows[i][1] > 0.0)) ++sign_changes;
  }
  REQUIRE(sign_changes == 1);

  const fs::path pauli = write_spec("pauli2.json", R"({"family":"pauli_enm"})");
  REQUIRE(run_cli("fig1 --stdout --spec '" + pauli.string() + "'").code == 4);
}

TEST_CASE("negativity sweep over the decay scale", "[cli]") {
  const RunResult r = run_cli("fig2 --stdout");
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  REQUIRE(header == "m,xi_hcla");
  REQUIRE(rows.size() == 20);
  bool found = false;
  for (const auto& row : rows)
    if (std::abs(row[0] - 3.0) < 1e-9) {
      found = true;
      REQUIRE(row[1] == Catch::Approx(2.0 / 81.0).margin(1e-9));
    }
  REQUIRE(found);
  REQUIRE(run_cli("fig2 --stdout --m-min 0.5").code == 4);  // sweep must start above nu
}

TEST_CASE("accumulated negativity subcommand", "[cli]") {
  const RunResult r = run_cli("hcla");
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  REQUIRE(header == "hcla,closed_form");
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0][0] == Catch::Approx(2.0 / 81.0).epsilon(1e-5));
  REQUIRE(rows[0][1] == Catch::Approx(2.0 / 81.0).margin(1e-12));
}

TEST_CASE("choi spectrum rows", "[cli]") {
  const RunResult r = run_cli("choi-spectrum --time 1.0 --stdout");
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  REQUIRE(header == "index,eigenvalue");
  REQUIRE(rows.size() == 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i][0] == Catch::Approx(static_cast<double>(i)));
    REQUIRE(rows[i][1] >= -1e-12);  // the full map is CP even past the rate sign change
    if (i > 0) REQUIRE(rows[i][1] >= rows[i - 1][1]);
    sum += rows[i][1];
  }
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(run_cli("choi-spectrum --time -1.0 --stdout").code == 4);
  REQUIRE(run_cli("choi-spectrum --stdout").code == 2);  // --time is required
}

TEST_CASE("certification report", "[cli]") {
  const RunResult r = run_cli("certify --stdout");
  REQUIRE(r.code == 0);
  const Json rep = Json::parse(r.out);
  REQUIRE(rep.at("pass").get<bool>());
  REQUIRE(rep.at("suites").is_array());
  REQUIRE(rep.at("suites").size() >= 7);
  for (const auto& suite : rep.at("suites")) REQUIRE(suite.at("pass").get<bool>());

  const fs::path bad = write_spec(
      "inadmissible.json",
      R"({"family":"qubit_gad","curves":{"lambda":{"family":"constant","value":0.1}}})");
  const fs::path rep_path = scratch_dir() / "certify_bad.json";
  REQUIRE(run_cli("certify --spec '" + bad.string() + "' --out '" + rep_path.string() + "'")
              .code == 5);
  const Json failed = Json::parse(slurp(rep_path));
  REQUIRE_FALSE(failed.at("pass").get<bool>());
  bool gate_seen = false;
  for (const auto& suite : failed.at("suites"))
    if (suite.at("name") == "spec_admission") {
      gate_seen = true;
      REQUIRE_FALSE(suite.at("pass").get<bool>());
    }
  REQUIRE(gate_seen);
}
