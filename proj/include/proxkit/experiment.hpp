#pragma once

#include <string>
#include <vector>

#include "proxkit/config.hpp"
#include "proxkit/optimizer.hpp"
#include "proxkit/problems.hpp"
#include "proxkit/quantizer.hpp"
#include "proxkit/schedule.hpp"

namespace proxkit {

// Assembles the experiment pieces from a flat config. Keys are documented in
// the README; unknown problem/quantizer/schedule names raise ConfigError.
Problem build_problem(const KeyValueConfig& cfg);
QuantizerSpec build_quantizer_spec_base(const KeyValueConfig& cfg);
QuantizerSpec build_quantizer_spec(const KeyValueConfig& cfg, const Problem& problem);
StepSchedule build_schedule(const KeyValueConfig& cfg);
RunConfig build_run_config(const KeyValueConfig& cfg);

inline constexpr const char* kMetricsHeader =
    "t,eta,lambda,pi,sharpness,loss_continuous,loss_quantized,grad_norm,accuracy_quantized";

struct RunOutcome {
  int exit_code = 0;       // 0 ok, 2 divergence
  long steps_completed = 0;
  double final_accuracy = 0.0;   // hard-quantized, NaN for regression
  double final_loss_quantized = 0.0;
  std::string message;
};

// Executes a configured run, writing metrics.csv and checkpoint.txt into
// out_dir. With resume_path set, continues from the checkpointed step and
// emits only the remaining rows.
RunOutcome cmd_run(const KeyValueConfig& cfg, const std::string& out_dir,
                   const std::string& resume_path = "");

struct SweepRow {
  std::string kind, grid;
  double rho0 = 0.0;
  int seeds = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
};

// Grid over sweep.kinds x sweep.grids x sweep.rho0, aggregating final
// hard-quantized accuracy across sweep.seeds. Cells run concurrently up to
// `jobs`; each cell owns out_dir/<cell>/.
std::vector<SweepRow> cmd_sweep(const KeyValueConfig& cfg, const std::string& out_dir, int jobs);

// Applies a quantizer spec to the checkpoint's continuous weights at the
// given sharpness; "inf" performs the terminal hard projection.
void cmd_quantize(const std::string& ckpt_in, const std::string& ckpt_out,
                  const QuantizerSpec& spec, double sharpness, bool hard);

std::string format_csv_row(long t, double eta, double lambda, double pi, double sharpness,
                           double loss_cont, double loss_quant, double grad_norm, double acc);

}  // namespace proxkit
