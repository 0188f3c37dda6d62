#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxkit/experiment.hpp"
#include "proxkit/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitVerifyFailed = 3;

proxkit::KeyValueConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  proxkit::KeyValueConfig cfg = path.empty() ? proxkit::KeyValueConfig::from_string("")
                                             : proxkit::KeyValueConfig::from_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

void print_suite(const proxkit::SuiteResult& r, bool verbose) {
  std::printf("[%s] suite %-18s (%zu checks, %.2fs)\n", r.pass() ? "PASS" : "FAIL",
              r.suite.c_str(), r.lines.size(), r.seconds);
  for (const auto& l : r.lines)
    if (verbose || !l.pass)
      std::printf("    [%s] %s%s%s\n", l.pass ? "ok" : "FAIL", l.name.c_str(),
                  l.detail.empty() ? "" : ": ", l.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantization-aware training toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", resume_path, suite = "all", mutation;
  std::vector<std::string> overrides;
  long seed_override = -1;
  int jobs = 1;
  bool verbose = false;

  auto* run_cmd = app.add_subcommand("run", "execute a configured training run");
  run_cmd->add_option("--config", config_path, "experiment config file");
  run_cmd->add_option("--set", overrides, "override: key=value");
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--seed", seed_override, "override run.seed");
  run_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep over rho0 / seeds / kinds");
  sweep_cmd->add_option("--config", config_path, "experiment config file");
  sweep_cmd->add_option("--set", overrides, "override: key=value");
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "concurrent cells");

  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "run verification suites");
  verify_cmd->add_option("--suite", suite, "suite name or 'all'");
  verify_cmd->add_option("--mutation", mutation, "inject a deliberate defect");
  verify_cmd->add_option("--out", verify_out, "write check lines as CSV");
  verify_cmd->add_flag("--verbose", verbose, "print every check line");

  std::string ckpt_in, ckpt_out, sharpness_arg = "inf";
  auto* quant_cmd = app.add_subcommand("quantize", "re-quantize checkpoint weights");
  quant_cmd->add_option("--ckpt", ckpt_in, "input checkpoint")->required();
  quant_cmd->add_option("--out", ckpt_out, "output checkpoint")->required();
  quant_cmd->add_option("--set", overrides, "quantizer.* keys: key=value");
  quant_cmd->add_option("--sharpness", sharpness_arg, "sharpness value or 'inf'");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      proxkit::KeyValueConfig cfg = load_config(config_path, overrides);
      if (seed_override >= 0) cfg.set("run.seed", std::to_string(seed_override));
      proxkit::RunOutcome outcome = proxkit::cmd_run(cfg, out_dir, resume_path);
      if (outcome.exit_code != 0) {
        std::fprintf(stderr, "run diverged: %s\n", outcome.message.c_str());
        return kExitDivergence;
      }
      std::printf("run complete: %ld steps, final quantized accuracy %.6g\n",
                  outcome.steps_completed, outcome.final_accuracy);
      return kExitOk;
    }
    if (sweep_cmd->parsed()) {
      proxkit::KeyValueConfig cfg = load_config(config_path, overrides);
      auto rows = proxkit::cmd_sweep(cfg, out_dir, jobs);
      std::printf("%-6s %-12s %-10s %-6s %-10s %-10s\n", "kind", "grid", "rho0", "seeds",
                  "acc_mean", "acc_std");
      for (const auto& r : rows)
        std::printf("%-6s %-12s %-10.4g %-6d %-10.4f %-10.4f\n", r.kind.c_str(), r.grid.c_str(),
                    r.rho0, r.seeds, r.acc_mean, r.acc_std);
      return kExitOk;
    }
    if (verify_cmd->parsed()) {
      proxkit::VerifyOptions opts;
      opts.mutation = mutation;
      std::vector<proxkit::SuiteResult> results;
      if (suite == "all")
        results = proxkit::run_all_suites(opts);
      else
        results.push_back(proxkit::run_suite(suite, opts));
      bool all_pass = true;
      for (const auto& r : results) {
        print_suite(r, verbose);
        all_pass &= r.pass();
      }
      if (!verify_out.empty()) {
        std::ofstream csv(verify_out);
        csv << "suite,check,pass,detail\n";
        for (const auto& r : results)
          for (const auto& l : r.lines)
            csv << r.suite << ',' << l.name << ',' << (l.pass ? 1 : 0) << ",\"" << l.detail
                << "\"\n";
      }
      return all_pass ? kExitOk : kExitVerifyFailed;
    }
    if (quant_cmd->parsed()) {
      proxkit::KeyValueConfig cfg = load_config("", overrides);
      proxkit::QuantizerSpec spec = proxkit::build_quantizer_spec_base(cfg);
      bool hard = sharpness_arg == "inf";
      double sharpness = hard ? 0.0 : std::stod(sharpness_arg);
      proxkit::cmd_quantize(ckpt_in, ckpt_out, spec, sharpness, hard);
      std::printf("quantized checkpoint written to %s\n", ckpt_out.c_str());
      return kExitOk;
    }
  } catch (const proxkit::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
