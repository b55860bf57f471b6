// Tests for trajectory recording / CSV emission and for the command-line
// driver as a black box: subcommand contracts, exit codes, output routing,
// config-file layering, and byte-level determinism of repeated runs.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cdyn/scenarios.hpp"
#include "cdyn/trajectory.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace cdyn;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "cdyn_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = scratch_dir();
  const fs::path out = dir / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("\"") + CDYN_CLI_PATH + "\" " + args +
                          " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

long line_count(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// n_q = 1 free particle with no potential and no contacts: exercises the
// writer's IEEE-special conventions.
MechanicalSystem free_particle() {
  MechanicalSystem sys;
  sys.n_q = 1;
  sys.mass = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.force = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  return sys;
}

SystemState state_at(double t, double q0, double v0) {
  SystemState s;
  s.t = t;
  s.q = Vec::Constant(1, q0);
  s.v = Vec::Constant(1, v0);
  return s;
}

}  // namespace

TEST_CASE("csv header lists the fixed column set") {
  CHECK(traj::csv_header(2, 1, 3) ==
        "t,q_0,q_1,v_0,v_1,lambda_0,p_0,p_1,p_2,"
        "g_inf,gv_inf,min_gap,e_kin,e_tot,iters,comp_res");
  CHECK(traj::csv_header(1, 0, 0) ==
        "t,q_0,v_0,g_inf,gv_inf,min_gap,e_kin,e_tot,iters,comp_res");
}

TEST_CASE("csv numbers survive a read-back round trip exactly") {
  auto sc = scen::build_bouncing_ball(9.81, 0.0, 1.0);
  SystemState s = sc.initial;
  s.t = 1.0 / 3.0;
  s.q(0) = std::sqrt(2.0);
  s.v(0) = -0.1;  // not representable in binary; %.17g must round-trip it
  const auto row = traj::make_row(sc.system, s, 3, 1e-9);

  std::ostringstream os;
  traj::write_csv(os, {row}, sc.system.n_q, sc.system.n_lambda, sc.system.n_u);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);

  std::vector<double> fields;
  std::istringstream fs_(line);
  std::string tok;
  while (std::getline(fs_, tok, ',')) fields.push_back(std::strtod(tok.c_str(), nullptr));
  REQUIRE(fields.size() == 11);  // t,q_0,v_0,p_0,g_inf,gv_inf,min_gap,4 more
  CHECK(fields[0] == 1.0 / 3.0);
  CHECK(fields[1] == std::sqrt(2.0));
  CHECK(fields[2] == -0.1);
  CHECK(fields[6] == std::sqrt(2.0));  // min_gap equals the ball height
}

TEST_CASE("missing diagnostics print as inf and nan") {
  const auto sys = free_particle();
  const auto row = traj::make_row(sys, state_at(0.0, 2.0, -1.0));
  CHECK(std::isinf(row.min_gap));
  CHECK(row.min_gap > 0);
  CHECK(std::isnan(row.e_tot));
  CHECK(row.e_kin == doctest::Approx(0.5).epsilon(1e-15));

  std::ostringstream os;
  traj::write_csv(os, {row}, 1, 0, 0);
  CHECK(os.str().find("inf") != std::string::npos);
  CHECK(os.str().find("nan") != std::string::npos);
}

TEST_CASE("recorder honors stride and always keeps the final row") {
  const auto sys = free_particle();

  traj::Recorder rec(sys, 4);
  for (int i = 0; i <= 10; ++i)
    rec.push(state_at(i, 0.0, 0.0), 0, 0.0, /*last=*/i == 10);
  REQUIRE(rec.rows().size() == 4);
  CHECK(rec.rows()[0].t == 0.0);
  CHECK(rec.rows()[1].t == 4.0);
  CHECK(rec.rows()[2].t == 8.0);
  CHECK(rec.rows()[3].t == 10.0);  // off-stride final row kept

  // A final row that lands on the stride is not duplicated.
  traj::Recorder rec2(sys, 4);
  for (int i = 0; i <= 8; ++i)
    rec2.push(state_at(i, 0.0, 0.0), 0, 0.0, i == 8);
  REQUIRE(rec2.rows().size() == 3);
  CHECK(rec2.rows().back().t == 8.0);

  // stride 1 records everything.
  traj::Recorder rec3(sys, 1);
  for (int i = 0; i <= 5; ++i) rec3.push(state_at(i, 0.0, 0.0), 0, 0.0, i == 5);
  CHECK(rec3.rows().size() == 6);
}

TEST_CASE("writer rejects rows with mismatched dimensions") {
  const auto sys = free_particle();
  auto row = traj::make_row(sys, state_at(0.0, 1.0, 0.0));
  std::ostringstream os;
  CHECK_THROWS_AS(traj::write_csv(os, {row}, 2, 0, 0), DimensionError);
}

TEST_CASE("cli: help exits zero and lists every subcommand") {
  const auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* name : {"simulate", "analyze-dae", "lcp-bench", "probe-index"})
    CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run_cli("").exit_code == 2);                       // missing subcommand
  CHECK(run_cli("simulate --no-such-flag").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("cli: configuration errors exit 2") {
  CHECK(run_cli("simulate --scenario warp --t-end 0.1").exit_code == 2);
  // contact scenario under a smooth integrator is rejected up front
  CHECK(run_cli("simulate --scenario ball --integrator ggl --t-end 0.1")
            .exit_code == 2);
  // analyze-dae only understands the circuit
  CHECK(run_cli("analyze-dae --scenario pendulum").exit_code == 2);
  // missing config file
  CHECK(run_cli("simulate --config /nonexistent/cdyn.cfg").exit_code == 2);
  // unknown key inside a config file
  const fs::path bad = scratch_dir() / "bad.cfg";
  spit(bad, "scenario = pendulum\nwarp_factor = 9\n");
  const auto r = run_cli("simulate --config " + bad.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("warp_factor") != std::string::npos);
}

TEST_CASE("cli: analyze-dae reports pencil regularity and index") {
  const auto r = run_cli("analyze-dae");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("regular: yes") != std::string::npos);
  CHECK(r.out.find("index: 2") != std::string::npos);
}

TEST_CASE("cli: lcp-bench agrees with the enumeration oracle") {
  const auto r = run_cli("lcp-bench --n 5 --count 25 --seed 7");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("all solvers match oracle") != std::string::npos);
}

TEST_CASE("cli: simulate writes csv to file with summary on stdout") {
  const fs::path csv = scratch_dir() / "pendulum.csv";
  const auto r = run_cli(
      "simulate --scenario pendulum --integrator ggl --dt 1e-3 --t-end 0.5 "
      "--output " + csv.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("scenario: pendulum") != std::string::npos);
  CHECK(r.out.find("max_drift:") != std::string::npos);

  const std::string text = slurp(csv);
  REQUIRE(!text.empty());
  CHECK(text.compare(0, traj::csv_header(2, 1, 0).size(),
                     traj::csv_header(2, 1, 0)) == 0);
  CHECK(line_count(text) == 502);  // header + initial row + 500 steps
}

TEST_CASE("cli: simulate without --output streams csv, summary on stderr") {
  const auto r = run_cli(
      "simulate --scenario pendulum --integrator ggl --dt 1e-3 --t-end 0.05");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.compare(0, 6, "t,q_0,") == 0);
  CHECK(r.out.find("scenario:") == std::string::npos);
  CHECK(r.err.find("scenario: pendulum") != std::string::npos);
}

TEST_CASE("cli: config file drives a run and flags override it") {
  const fs::path cfg = scratch_dir() / "pile.cfg";
  spit(cfg,
       "# small settling pile\n"
       "scenario = disk-pile\n"
       "integrator = moreau-jean\n"
       "n_disks = 25\n"
       "seed = 3\n"
       "dt = 1e-3\n"
       "t_end = 0.4\n"
       "stride = 5\n"
       "mode = active-set\n"
       "tol = 1e-6\n");

  const fs::path a = scratch_dir() / "pile_a.csv";
  const fs::path b = scratch_dir() / "pile_b.csv";
  const auto ra = run_cli("simulate --config " + cfg.string() + " --output " +
                          a.string());
  const auto rb = run_cli("simulate --config " + cfg.string() + " --output " +
                          b.string());
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);

  const std::string ta = slurp(a);
  CHECK(line_count(ta) == 82);  // header + 400/5 + 1 rows
  CHECK(ta == slurp(b));        // byte-identical rerun

  // a flag overrides the file's t_end
  const fs::path c = scratch_dir() / "pile_c.csv";
  const auto rc = run_cli("simulate --config " + cfg.string() +
                          " --t-end 0.2 --output " + c.string());
  REQUIRE(rc.exit_code == 0);
  CHECK(line_count(slurp(c)) == 42);  // header + 200/5 + 1 rows
}

TEST_CASE("cli: step failures exit 1") {
  // A zero-sweep budget cannot resolve the impact, so the run must abort
  // with a runtime (not usage) exit code once the ball reaches the floor.
  const auto r = run_cli(
      "simulate --scenario ball --integrator moreau-jean --dt 1e-3 "
      "--t-end 1 --max-iter 0 --output /dev/null");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("step failure") != std::string::npos);
}

TEST_CASE("cli: probe-index reports slopes with the expected ordering") {
  const auto r = run_cli("probe-index");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("slope index3:") != std::string::npos);
  CHECK(r.out.find("slope ggl:") != std::string::npos);
  CHECK(r.out.find("index3 amplifies") != std::string::npos);
}
