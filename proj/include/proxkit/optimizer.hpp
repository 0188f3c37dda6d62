#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxkit/problems.hpp"
#include "proxkit/quantizer.hpp"
#include "proxkit/schedule.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

// The two-line update family. All schemes share the decomposition
//   w_t = P(w*_t),  followed by a step against eta_t * grad:
//   BC   gradient at w_t,  update applied to w*_t
//   PQ   gradient at w_t,  update anchored at w_t
//   RPC  gradient at w*_t, update anchored at w_t   (sharpened quantizer)
//   PC   gradient at w_t,  update applied to w*_t   (sharpened quantizer)
//   PTQ  gradient at w*_t, update applied to w*_t   (quantizer reporting-only)
enum class OptimizerKind { BC, PQ, RPC, PC, PTQ };

enum class SharpnessMode {
  PiInverse,  // s_t = 1/pi_{t-1} from the schedule identities
  LinearRho   // s_t = 1 + t/B, the linear ramp protocol
};

// Smoothing sequence for the generalized iterates
//   w_t = P^{1/mu_t}(pi_{t-1} w*_t / mu_t):
//   PiPrev       mu_t = pi_{t-1} (the standard coupling; plain PC)
//   SqrtLambda   mu_{t+1} = c sqrt(lambda_t)  (sigma0 = 0 recommendation)
//   Lambda       mu_{t+1} = c lambda_t        (sigma0 > 0 recommendation)
struct MuMode {
  enum class Kind { PiPrev, SqrtLambda, Lambda };
  Kind kind = Kind::PiPrev;
  double c = 1.0;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainState {
  WeightGroups w_star;
  WeightGroups w_quant;
  ScheduleState sched;
  std::uint64_t seed = 0;
  OptimizerKind kind = OptimizerKind::PC;
  std::size_t batch_size = 0;
  SharpnessMode sharpness_mode = SharpnessMode::PiInverse;
  double linear_B = 100.0;
  MuMode mu;
  double divergence_bound = 1e6;
  WeightGroups last_grad;
  double last_sharpness = 1.0;
  double last_mu = 1.0;
};

struct Snapshot {
  long t = 0;
  double eta = 0.0, lambda = 0.0, pi = 1.0, mu = 1.0, sharpness = 1.0;
  double grad_norm = 0.0;
  WeightGroups w_star, w_quant, grad;
};

struct Trajectory {
  std::vector<Snapshot> snaps;
  // w*_{T+1} and its quantized image, needed by the window-end Bregman terms
  WeightGroups tail_w_star, tail_w_quant;
  double tail_mu = 1.0;
  WeightGroups terminal_hard;
  bool diverged = false;
  long diverged_at = -1;
  OptimizerKind kind = OptimizerKind::PC;
  std::string quantizer_label;

  long steps() const { return static_cast<long>(snaps.size()) - 1; }
};

struct RunConfig {
  long steps = 100;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;          // 0 = full batch
  double divergence_bound = 1e6;
  long hard_quantize_step = -1;        // -1: at the final step
  SharpnessMode sharpness_mode = SharpnessMode::PiInverse;
  double linear_B = 100.0;
  MuMode mu;
  bool throw_on_divergence = false;    // default: flag the trajectory instead
};

TrainState make_state(const Problem& problem, OptimizerKind kind, const Quantizer& q,
                      const RunConfig& cfg, const WeightGroups* w0 = nullptr);

// One iteration of the selected scheme; advances the schedule to t+1 and
// applies the update. Exposed per scheme for the unit-level contracts.
TrainState step(const TrainState& state, const StepSchedule& schedule, const Problem& problem,
                const Quantizer& q);
TrainState step_bc(const TrainState&, const StepSchedule&, const Problem&, const Quantizer&);
TrainState step_pq(const TrainState&, const StepSchedule&, const Problem&, const Quantizer&);
TrainState step_rpc(const TrainState&, const StepSchedule&, const Problem&, const Quantizer&);
TrainState step_pc(const TrainState&, const StepSchedule&, const Problem&, const Quantizer&);
TrainState step_ptq(const TrainState&, const StepSchedule&, const Problem&, const Quantizer&);

// Deterministic run: snapshots t = 0..steps, terminal weights hard-projected
// onto the quantizer grids. Groups without a grid stay continuous; after an
// early hard-quantize step they are the only ones still training.
Trajectory run(const Problem& problem, OptimizerKind kind, const Quantizer& q,
               const StepSchedule& schedule, const RunConfig& cfg,
               const WeightGroups* w0 = nullptr);

// eta-weighted average of the quantized iterates over snapshots [s, t]
// (the weighting from the averaged-iterate analysis; uniform when eta is
// constant).
WeightGroups ergodic_average(const Trajectory& traj, long s, long t);
WeightGroups ergodic_average(const Trajectory& traj);

// Euclidean norm of w* - (P^{1/pi}(w*) - eta grad(w*)).
double rpc_fixed_point_residual(const WeightGroups& w_star, const Problem& problem,
                                const Quantizer& q, double eta, double pi);

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from(const std::string& name);

}  // namespace proxkit
