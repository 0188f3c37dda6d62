#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "proxkit/checkpoint.hpp"
#include "proxkit/rng.hpp"
#include "proxkit/experiment.hpp"

using namespace proxkit;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "proxkit_cli_test";

int run_cli(const std::string& args) {
  std::string cmd = std::string(PROXKIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  f << text;
}

long count_lines(const std::string& s) {
  long n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

const char* kQuadConfig = R"(
problem.kind = quadratic
quadratic.dim = 1
quadratic.b = 0.0
optimizer.kind = bc
quantizer.kind = projector
quantizer.grid = binary
schedule.kind = constant
schedule.eta0 = 0.1
run.steps = 100
run.seed = 3
)";

}  // namespace

TEST_CASE("run writes the metrics table with one row per step plus the initial row") {
  fs::remove_all(kWork);
  write_config(kWork / "quad.cfg", kQuadConfig);
  int rc = run_cli("run --config " + (kWork / "quad.cfg").string() + " --out " +
                   (kWork / "a").string());
  CHECK(rc == 0);
  std::string csv = slurp(kWork / "a" / "metrics.csv");
  CHECK(count_lines(csv) == 102);  // header + 101 rows
  CHECK(csv.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(fs::exists(kWork / "a" / "checkpoint.txt"));
}

TEST_CASE("identical configs produce byte-identical outputs") {
  write_config(kWork / "quad.cfg", kQuadConfig);
  run_cli("run --config " + (kWork / "quad.cfg").string() + " --out " + (kWork / "b1").string());
  run_cli("run --config " + (kWork / "quad.cfg").string() + " --out " + (kWork / "b2").string());
  CHECK(slurp(kWork / "b1" / "metrics.csv") == slurp(kWork / "b2" / "metrics.csv"));
  CHECK(slurp(kWork / "b1" / "checkpoint.txt") == slurp(kWork / "b2" / "checkpoint.txt"));
}

TEST_CASE("divergence exits with code 2 and flushes the partial table") {
  write_config(kWork / "div.cfg", std::string(kQuadConfig) +
                                      "schedule.eta0 = 3.0\nquantizer.kind = identity\n"
                                      "quadratic.b = 1.0\nrun.divergence_bound = 1e3\n");
  int rc = run_cli("run --config " + (kWork / "div.cfg").string() + " --out " +
                   (kWork / "div").string());
  CHECK(rc == 2);
  std::string csv = slurp(kWork / "div" / "metrics.csv");
  CHECK(count_lines(csv) >= 2);    // header and at least the initial row
  CHECK(count_lines(csv) < 102);   // aborted early
}

TEST_CASE("config errors exit with code 1") {
  write_config(kWork / "bad.cfg", "problem.kind = warp_drive\n");
  CHECK(run_cli("run --config " + (kWork / "bad.cfg").string() + " --out " +
                (kWork / "bad").string()) == 1);
  write_config(kWork / "bad2.cfg", std::string(kQuadConfig) + "run.steps = soon\n");
  CHECK(run_cli("run --config " + (kWork / "bad2.cfg").string() + " --out " +
                (kWork / "bad2").string()) == 1);
}

TEST_CASE("set overrides reach the run") {
  write_config(kWork / "quad.cfg", kQuadConfig);
  run_cli("run --config " + (kWork / "quad.cfg").string() + " --set run.steps=5 --out " +
          (kWork / "short").string());
  CHECK(count_lines(slurp(kWork / "short" / "metrics.csv")) == 7);
}

TEST_CASE("verify subcommand exit codes and report export") {
  CHECK(run_cli("verify --suite schedules") == 0);
  CHECK(run_cli("verify --suite combinators") == 0);
  CHECK(run_cli("verify --suite no_such_suite") == 1);
  CHECK(run_cli("verify --suite axioms --mutation plq_slope_flip") == 3);

  fs::path csv = kWork / "verify.csv";
  CHECK(run_cli("verify --suite schedules --out " + csv.string()) == 0);
  std::string rows = slurp(csv);
  CHECK(rows.rfind("suite,check,pass,detail\n", 0) == 0);
  CHECK(count_lines(rows) >= 5);
}

TEST_CASE("sweep aggregates seeds per cell") {
  write_config(kWork / "sweep.cfg", R"(
problem.kind = mlp
dataset.kind = blobs
dataset.samples = 40
dataset.features = 2
dataset.classes = 2
dataset.separation = 3.0
mlp.hidden = 4
optimizer.kind = pc
quantizer.kind = piecewise_linear
quantizer.grid = binary
schedule.kind = constant
schedule.eta0 = 0.3
run.steps = 40
sweep.rho0 = 0.02,0.05,0.1
sweep.seeds = 1,2,3
sweep.kinds = pc
)");
  KeyValueConfig cfg = KeyValueConfig::from_file((kWork / "sweep.cfg").string());
  auto rows = cmd_sweep(cfg, (kWork / "sweep_out").string(), 2);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.seeds == 3);
    CHECK(r.acc_mean >= 0.0);
    CHECK(r.acc_mean <= 1.0);
  }
  std::string summary = slurp(kWork / "sweep_out" / "summary.csv");
  CHECK(count_lines(summary) == 4);

  // empty grid
  write_config(kWork / "sweep_bad.cfg", std::string(kQuadConfig) + "sweep.rho0 = \n");
  CHECK(run_cli("sweep --config " + (kWork / "sweep_bad.cfg").string() + " --out " +
                (kWork / "sweep_bad").string()) == 1);
}

TEST_CASE("quantize rewrites the quantized arrays from the continuous ones") {
  // produce a checkpoint whose quantized weights equal the continuous ones
  write_config(kWork / "id.cfg", std::string(kQuadConfig) +
                                     "quantizer.kind = identity\nrun.steps = 20\n");
  run_cli("run --config " + (kWork / "id.cfg").string() + " --out " + (kWork / "id").string());
  fs::path ck = kWork / "id" / "checkpoint.txt";

  // identity spec: output equals input
  run_cli("quantize --ckpt " + ck.string() + " --out " + (kWork / "same.txt").string() +
          " --set quantizer.kind=identity --sharpness 1");
  CHECK(slurp(ck) == slurp(kWork / "same.txt"));

  // hard quantization (sharpness = inf) takes exact grid values
  run_cli("quantize --ckpt " + ck.string() + " --out " + (kWork / "hard.txt").string() +
          " --set quantizer.kind=projector --set quantizer.grid=binary --sharpness inf");
  Checkpoint hard = load_checkpoint((kWork / "hard.txt").string());
  for (double v : hard.w_quant.values[0]) CHECK((v == 1.0 || v == -1.0));

  // per-coordinate projection equals the library projector
  Checkpoint base = load_checkpoint(ck.string());
  for (std::size_t i = 0; i < base.w_star.values[0].size(); ++i)
    CHECK(hard.w_quant.values[0][i] == project(binary_grid(), base.w_star.values[0][i]));
}

TEST_CASE("config parser handles comments, whitespace, lists and errors") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "# a comment\n  alpha.beta =  3.5  # trailing\n\nnames = a, b ,c\nnums = 1,2.5,-3\n");
  CHECK(cfg.get_double("alpha.beta") == 3.5);
  CHECK(cfg.get_strings("names") == std::vector<std::string>{"a", "b", "c"});
  CHECK(cfg.get_doubles("nums") == std::vector<double>{1.0, 2.5, -3.0});
  CHECK(cfg.get_long("missing", 7) == 7);
  CHECK_THROWS_AS(cfg.get_double("names"), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("nope"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_string("this line has no equals\n"), ConfigError);
  cfg.apply_override("alpha.beta=9");
  CHECK(cfg.get_double("alpha.beta") == 9.0);
  CHECK_THROWS_AS(cfg.apply_override("no_equals_here"), ConfigError);
}

TEST_CASE("checkpoint text round-trips doubles across the exponent range") {
  RngStream rs(31337, "ckpt_fuzz");
  Checkpoint c;
  c.step = 12;
  c.seed = 99;
  c.draw_counter = 12;
  c.sched.t = 12;
  c.sched.eta_t = 0.1;
  c.sched.lambda_t = 1.0 / 3.0;
  c.sched.pi_t = 1e-200;
  c.sched.mu_t = 3e200;
  c.sched.cumulative_eta = 1.2345678901234567;
  std::vector<double> vals;
  for (int i = 0; i < 200; ++i) {
    int exp = static_cast<int>(rs.index(static_cast<std::uint64_t>(i), 613)) - 306;
    double v = (rs.uniform(1000 + static_cast<std::uint64_t>(i)) - 0.5) * std::pow(10.0, exp);
    vals.push_back(v);
  }
  vals.push_back(0.0);
  vals.push_back(-0.0);
  vals.push_back(5e-324);  // smallest denormal
  c.w_star.add("w", vals);
  c.w_quant.add("w", vals);
  fs::path path = kWork / "fuzz_ckpt.txt";
  fs::create_directories(kWork);
  save_checkpoint(c, path.string());
  Checkpoint back = load_checkpoint(path.string());
  REQUIRE(back.w_star.values[0].size() == vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(back.w_star.values[0][i] == vals[i]);
  CHECK(back.sched.pi_t == 1e-200);
  CHECK(back.sched.mu_t == 3e200);
  CHECK(back.sched.cumulative_eta == 1.2345678901234567);
}

TEST_CASE("resumed run matches the straight run byte for byte") {
  write_config(kWork / "res.cfg", R"(
problem.kind = logistic
dataset.kind = blobs
dataset.samples = 30
dataset.features = 2
dataset.classes = 2
dataset.separation = 2.0
dataset.seed = 4
logistic.l2 = 0.05
optimizer.kind = pc
quantizer.kind = binary_relax
quantizer.grid = binary
quantizer.mu = 1.0
schedule.kind = polynomial
schedule.eta0 = 0.2
schedule.p = 0.5
run.steps = 40
run.seed = 4
run.batch = 10
)");
  run_cli("run --config " + (kWork / "res.cfg").string() + " --out " + (kWork / "full").string());
  run_cli("run --config " + (kWork / "res.cfg").string() + " --set run.steps=17 --out " +
          (kWork / "head").string());
  int rc = run_cli("run --config " + (kWork / "res.cfg").string() + " --resume " +
                   (kWork / "head" / "checkpoint.txt").string() + " --out " +
                   (kWork / "tail").string());
  CHECK(rc == 0);
  CHECK(slurp(kWork / "full" / "checkpoint.txt") == slurp(kWork / "tail" / "checkpoint.txt"));
  std::string merged = slurp(kWork / "head" / "metrics.csv") +
                       slurp(kWork / "tail" / "metrics.csv")
                           .substr(std::string(kMetricsHeader).size() + 1);
  CHECK(merged == slurp(kWork / "full" / "metrics.csv"));
}
