#include "proxkit/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace proxkit {

namespace {

double mu_for(const MuMode& mu, const ScheduleState& st) {
  switch (mu.kind) {
    case MuMode::Kind::PiPrev: return st.mu_t;  // pi_{t-1}
    case MuMode::Kind::SqrtLambda: return mu_rate_for(0.0, st.lambda_t, mu.c);
    case MuMode::Kind::Lambda: return mu_rate_for(1.0, st.lambda_t, mu.c);
  }
  return st.mu_t;
}

// Quantized image of w* at step t under the configured smoothing. For the
// standard coupling this is P^{1/pi_{t-1}}(w*); the generalized iterates
// scale the input by pi_{t-1}/mu_t first.
WeightGroups quantize_at(const TrainState& s, const Quantizer& q, const ScheduleState& st,
                         double sharpness, double mu) {
  if (s.mu.kind == MuMode::Kind::PiPrev)
    return q(s.w_star, sharpness, static_cast<std::uint64_t>(st.t));
  double scale = st.mu_t / mu;  // pi_{t-1} / mu_t
  return q(scaled(s.w_star, scale), 1.0 / mu, static_cast<std::uint64_t>(st.t));
}

// step t sees the ramp value after t-1 completed steps, mirroring the
// 1/pi_{t-1} convention of the schedule identities
double sharpness_at(const TrainState& s, const ScheduleState& st) {
  if (s.sharpness_mode == SharpnessMode::LinearRho)
    return 1.0 + static_cast<double>(st.t - 1) / s.linear_B;
  return st.sharpness();
}

TrainState step_kind(const TrainState& state, const StepSchedule& schedule,
                     const Problem& problem, const Quantizer& q, OptimizerKind kind) {
  TrainState next = state;
  next.kind = kind;
  next.sched = advance(state.sched, schedule);
  const double eta = next.sched.eta_t;
  const double mu = mu_for(state.mu, next.sched);
  const double sharp = sharpness_at(state, next.sched);

  const bool fixed_quantizer = (kind == OptimizerKind::BC || kind == OptimizerKind::PQ ||
                                kind == OptimizerKind::PTQ);
  next.w_quant = fixed_quantizer
                     ? q(state.w_star, 1.0, static_cast<std::uint64_t>(next.sched.t))
                     : quantize_at(next, q, next.sched, sharp, mu);
  next.last_sharpness = fixed_quantizer ? 1.0 : sharp;
  next.last_mu = mu;

  const bool grad_at_star = (kind == OptimizerKind::RPC || kind == OptimizerKind::PTQ);
  SampleSelector sel{state.batch_size, state.seed};
  WeightGroups g = problem.grad(grad_at_star ? state.w_star : next.w_quant, sel, next.sched.t);
  if (!all_finite(g)) throw DivergenceError("non-finite gradient at step " + std::to_string(next.sched.t));

  const bool anchor_quant = (kind == OptimizerKind::PQ || kind == OptimizerKind::RPC);
  next.w_star = anchor_quant ? next.w_quant : state.w_star;
  axpy_inplace(-eta, g, next.w_star);
  next.last_grad = std::move(g);

  if (inf_norm(next.w_star) > state.divergence_bound)
    throw DivergenceError("weights exceeded divergence bound at step " +
                          std::to_string(next.sched.t));
  return next;
}

}  // namespace

TrainState make_state(const Problem& problem, OptimizerKind kind, const Quantizer& q,
                      const RunConfig& cfg, const WeightGroups* w0) {
  TrainState s;
  s.w_star = w0 ? *w0 : problem.initial_weights(cfg.seed);
  s.sched = ScheduleState::initial();
  s.seed = cfg.seed;
  s.kind = kind;
  s.batch_size = cfg.batch_size;
  s.sharpness_mode = cfg.sharpness_mode;
  s.linear_B = cfg.linear_B;
  s.mu = cfg.mu;
  s.divergence_bound = cfg.divergence_bound;
  s.w_quant = q(s.w_star, 1.0, 0);
  s.last_grad = zeros_like(s.w_star);
  return s;
}

TrainState step(const TrainState& state, const StepSchedule& schedule, const Problem& problem,
                const Quantizer& q) {
  return step_kind(state, schedule, problem, q, state.kind);
}

TrainState step_bc(const TrainState& s, const StepSchedule& sch, const Problem& p,
                   const Quantizer& q) {
  return step_kind(s, sch, p, q, OptimizerKind::BC);
}
TrainState step_pq(const TrainState& s, const StepSchedule& sch, const Problem& p,
                   const Quantizer& q) {
  return step_kind(s, sch, p, q, OptimizerKind::PQ);
}
TrainState step_rpc(const TrainState& s, const StepSchedule& sch, const Problem& p,
                    const Quantizer& q) {
  return step_kind(s, sch, p, q, OptimizerKind::RPC);
}
TrainState step_pc(const TrainState& s, const StepSchedule& sch, const Problem& p,
                   const Quantizer& q) {
  return step_kind(s, sch, p, q, OptimizerKind::PC);
}
TrainState step_ptq(const TrainState& s, const StepSchedule& sch, const Problem& p,
                    const Quantizer& q) {
  return step_kind(s, sch, p, q, OptimizerKind::PTQ);
}

namespace {

WeightGroups hard_project(const WeightGroups& w, const Quantizer& q) {
  WeightGroups out = w;
  for (std::size_t g = 0; g < w.group_count(); ++g) {
    auto grid = q.hard_grid(w.names[g]);
    if (!grid) continue;
    for (double& x : out.values[g]) x = project(*grid, x);
  }
  return out;
}

Snapshot snapshot_of(const TrainState& s, const WeightGroups& w_star_t) {
  Snapshot snap;
  snap.t = s.sched.t;
  snap.eta = s.sched.eta_t;
  snap.lambda = s.sched.lambda_t;
  snap.pi = s.sched.pi_t;
  snap.mu = s.last_mu;
  snap.sharpness = s.last_sharpness;
  snap.w_star = w_star_t;
  snap.w_quant = s.w_quant;
  snap.grad = s.last_grad;
  snap.grad_norm = l2_norm(s.last_grad);
  return snap;
}

}  // namespace

Trajectory run(const Problem& problem, OptimizerKind kind, const Quantizer& q,
               const StepSchedule& schedule, const RunConfig& cfg, const WeightGroups* w0) {
  if (cfg.steps < 0) throw std::invalid_argument("run: steps must be nonnegative");
  Trajectory traj;
  traj.kind = kind;
  traj.quantizer_label = q.label();

  TrainState state = make_state(problem, kind, q, cfg, w0);
  long hard_at = cfg.hard_quantize_step >= 0 ? cfg.hard_quantize_step : cfg.steps;

  Snapshot init;
  init.t = 0;
  init.eta = 0.0;
  init.lambda = 0.0;
  init.pi = 1.0;
  init.mu = 1.0;
  init.sharpness = 1.0;
  init.w_star = state.w_star;
  init.w_quant = state.w_quant;
  init.grad = zeros_like(state.w_star);
  init.grad_norm = 0.0;
  traj.snaps.push_back(init);

  std::vector<bool> frozen(state.w_star.group_count(), false);
  bool hard_done = false;

  for (long t = 1; t <= cfg.steps; ++t) {
    WeightGroups w_star_t = state.w_star;
    TrainState next;
    try {
      next = step_kind(state, schedule, problem, q, kind);
    } catch (const DivergenceError&) {
      if (cfg.throw_on_divergence) throw;
      traj.diverged = true;
      traj.diverged_at = t;
      break;
    }
    if (hard_done) {
      // post hard-quantization phase: only groups without a grid keep training
      for (std::size_t g = 0; g < next.w_star.group_count(); ++g)
        if (frozen[g]) {
          next.w_star.values[g] = state.w_star.values[g];
          next.w_quant.values[g] = state.w_star.values[g];
        }
    }
    traj.snaps.push_back(snapshot_of(next, w_star_t));
    state = next;
    if (!hard_done && t == hard_at && t < cfg.steps) {
      state.w_star = hard_project(state.w_star, q);
      for (std::size_t g = 0; g < state.w_star.group_count(); ++g)
        frozen[g] = q.hard_grid(state.w_star.names[g]).has_value();
      hard_done = true;
    }
  }

  traj.tail_w_star = state.w_star;
  ScheduleState after = traj.diverged ? state.sched : advance(state.sched, schedule);
  double tail_mu = mu_for(cfg.mu, after);
  traj.tail_mu = tail_mu;
  if (cfg.mu.kind == MuMode::Kind::PiPrev) {
    traj.tail_w_quant = q(state.w_star, after.sharpness(), static_cast<std::uint64_t>(after.t));
  } else {
    traj.tail_w_quant = q(scaled(state.w_star, after.mu_t / tail_mu), 1.0 / tail_mu,
                          static_cast<std::uint64_t>(after.t));
  }
  traj.terminal_hard = hard_project(state.w_star, q);
  return traj;
}

WeightGroups ergodic_average(const Trajectory& traj, long s, long t) {
  if (traj.snaps.empty()) throw std::invalid_argument("ergodic_average: empty trajectory");
  s = std::max<long>(s, 0);
  t = std::min<long>(t, traj.steps());
  WeightGroups acc = zeros_like(traj.snaps[0].w_quant);
  double total = 0.0;
  for (long tau = s; tau <= t; ++tau) {
    const auto& snap = traj.snaps[static_cast<std::size_t>(tau)];
    axpy_inplace(snap.eta, snap.w_quant, acc);
    total += snap.eta;
  }
  if (total <= 0.0) return traj.snaps[static_cast<std::size_t>(t)].w_quant;
  return scaled(acc, 1.0 / total);
}

WeightGroups ergodic_average(const Trajectory& traj) {
  return ergodic_average(traj, 0, traj.steps());
}

double rpc_fixed_point_residual(const WeightGroups& w_star, const Problem& problem,
                                const Quantizer& q, double eta, double pi) {
  WeightGroups target = q(w_star, 1.0 / pi, 0);
  WeightGroups g = problem.grad(w_star);
  axpy_inplace(-eta, g, target);
  axpy_inplace(-1.0, w_star, target);
  return l2_norm(target);
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::BC: return "bc";
    case OptimizerKind::PQ: return "pq";
    case OptimizerKind::RPC: return "rpc";
    case OptimizerKind::PC: return "pc";
    case OptimizerKind::PTQ: return "ptq";
  }
  return "unknown";
}

OptimizerKind optimizer_kind_from(const std::string& name) {
  if (name == "bc") return OptimizerKind::BC;
  if (name == "pq") return OptimizerKind::PQ;
  if (name == "rpc") return OptimizerKind::RPC;
  if (name == "pc") return OptimizerKind::PC;
  if (name == "ptq") return OptimizerKind::PTQ;
  throw std::invalid_argument("unknown optimizer kind: " + name);
}

}  // namespace proxkit
