#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "proxkit/optimizer.hpp"

using namespace proxkit;

namespace {

Problem half_square() { return Problem::quadratic(Mat::identity(1), {0.0}); }

TrainState state_at(const Problem& p, OptimizerKind kind, const Quantizer& q, double w0,
                    std::uint64_t seed = 0) {
  RunConfig rc;
  rc.seed = seed;
  WeightGroups w;
  w.add("w", {w0});
  return make_state(p, kind, q, rc, &w);
}

}  // namespace

TEST_CASE("the five schemes take their documented updates") {
  Problem p = half_square();
  Quantizer proj = Quantizer::from_spec(QuantizerSpec::projector(binary_grid()));
  Quantizer ident = Quantizer::from_spec(QuantizerSpec::identity());
  StepSchedule eta01 = StepSchedule::constant_eta(0.1);
  StepSchedule eta0 = StepSchedule::constant_eta(0.0);

  SUBCASE("bc: gradient at the quantized point, update on the continuous one") {
    TrainState s = step_bc(state_at(p, OptimizerKind::BC, proj, 0.3), eta01, p, proj);
    CHECK(s.w_quant.values[0][0] == 1.0);
    CHECK(s.w_star.values[0][0] == doctest::Approx(0.2).epsilon(1e-15));
    TrainState z = step_bc(state_at(p, OptimizerKind::BC, proj, 0.3), eta0, p, proj);
    CHECK(z.w_star.values[0][0] == 0.3);
    TrainState sgd = step_bc(state_at(p, OptimizerKind::BC, ident, 0.3), eta01, p, ident);
    CHECK(sgd.w_star.values[0][0] == doctest::Approx(0.3 - 0.1 * 0.3).epsilon(1e-15));
  }

  SUBCASE("pq: the grid projector pins the iterate") {
    TrainState s = state_at(p, OptimizerKind::PQ, proj, 1.0);
    for (int i = 0; i < 5; ++i) {
      s = step_pq(s, eta01, p, proj);
      CHECK(s.w_quant.values[0][0] == 1.0);
    }
    CHECK(s.w_star.values[0][0] == doctest::Approx(0.9).epsilon(1e-15));
    TrainState z = step_pq(state_at(p, OptimizerKind::PQ, proj, 0.4), eta0, p, proj);
    CHECK(z.w_star.values[0][0] == 1.0);  // fixed point of P
  }

  SUBCASE("rpc: gradient at the continuous point, update anchored at the quantized one") {
    TrainState a = step_rpc(state_at(p, OptimizerKind::RPC, ident, 0.3), eta01, p, ident);
    CHECK(a.w_star.values[0][0] == doctest::Approx(0.27).epsilon(1e-15));
    TrainState b = step_rpc(state_at(p, OptimizerKind::RPC, proj, 0.3), eta01, p, proj);
    CHECK(b.w_star.values[0][0] == doctest::Approx(0.97).epsilon(1e-15));
    TrainState z = step_rpc(state_at(p, OptimizerKind::RPC, proj, 0.3), eta0, p, proj);
    CHECK(z.w_star.values[0][0] == 1.0);  // pure re-projection
  }

  SUBCASE("ptq: the quantizer never feeds back") {
    TrainState s = step_ptq(state_at(p, OptimizerKind::PTQ, proj, 0.3), eta01, p, proj);
    CHECK(s.w_star.values[0][0] == doctest::Approx(0.3 - 0.1 * 0.3).epsilon(1e-15));
    CHECK(s.w_quant.values[0][0] == 1.0);  // recorded for reporting only
  }

  SUBCASE("pc with projector matches bc exactly") {
    TrainState bc = step_bc(state_at(p, OptimizerKind::BC, proj, 0.3), eta01, p, proj);
    TrainState pc = step_pc(state_at(p, OptimizerKind::PC, proj, 0.3), eta01, p, proj);
    CHECK(bc.w_star.values[0][0] == pc.w_star.values[0][0]);
  }
}

TEST_CASE("ptq continuous trajectory is invariant to the quantizer choice") {
  BlobSpec spec;
  spec.seed = 5;
  spec.n_samples = 40;
  spec.n_features = 2;
  spec.n_classes = 2;
  spec.separation = 2.0;
  Dataset ds = gen_blobs(spec);
  Problem p = Problem::mlp({2, 4, 2}, Activation::Tanh, std::move(ds));
  RunConfig rc;
  rc.steps = 50;
  rc.seed = 11;
  rc.batch_size = 10;
  Trajectory a = run(p, OptimizerKind::PTQ, Quantizer::from_spec(QuantizerSpec::projector(binary_grid())),
                     StepSchedule::constant_eta(0.2), rc);
  Trajectory b = run(p, OptimizerKind::PTQ,
                     Quantizer::from_spec(QuantizerSpec::binary_relax(ternary_grid(), 2.0)),
                     StepSchedule::constant_eta(0.2), rc);
  REQUIRE(a.snaps.size() == b.snaps.size());
  for (std::size_t i = 0; i < a.snaps.size(); ++i)
    CHECK(bitwise_equal(a.snaps[i].w_star, b.snaps[i].w_star));
}

TEST_CASE("runs are deterministic and zero-step runs only project") {
  Problem p = half_square();
  Quantizer proj = Quantizer::from_spec(QuantizerSpec::projector(binary_grid()));
  RunConfig rc;
  rc.steps = 0;
  rc.seed = 3;
  WeightGroups w0;
  w0.add("w", {0.3});
  Trajectory t = run(p, OptimizerKind::BC, proj, StepSchedule::constant_eta(0.1), rc, &w0);
  CHECK(t.snaps.size() == 1);
  CHECK(t.terminal_hard.values[0][0] == 1.0);

  rc.steps = 200;
  Trajectory r1 = run(p, OptimizerKind::PC, proj, StepSchedule::polynomial_eta(0.3, 0.5), rc, &w0);
  Trajectory r2 = run(p, OptimizerKind::PC, proj, StepSchedule::polynomial_eta(0.3, 0.5), rc, &w0);
  REQUIRE(r1.snaps.size() == r2.snaps.size());
  for (std::size_t i = 0; i < r1.snaps.size(); ++i) {
    CHECK(bitwise_equal(r1.snaps[i].w_star, r2.snaps[i].w_star));
    CHECK(bitwise_equal(r1.snaps[i].w_quant, r2.snaps[i].w_quant));
  }

  rc.steps = -1;
  CHECK_THROWS(run(p, OptimizerKind::BC, proj, StepSchedule::constant_eta(0.1), rc, &w0));
}

TEST_CASE("trajectory length and schedule identities on snapshots") {
  Problem p = half_square();
  Quantizer q = Quantizer::from_spec(QuantizerSpec::binary_relax(binary_grid(), 1.0));
  RunConfig rc;
  rc.steps = 64;
  rc.seed = 1;
  Trajectory t = run(p, OptimizerKind::PC, q, StepSchedule::polynomial_eta(0.2, 0.25), rc);
  CHECK(t.snaps.size() == 65);
  double cum = 0.0;
  for (long i = 1; i <= t.steps(); ++i) {
    const auto& s = t.snaps[static_cast<std::size_t>(i)];
    cum += s.eta;
    CHECK(std::abs(1.0 / s.pi - (1.0 + cum)) <= 1e-12 * (1.0 + cum));
    CHECK(s.sharpness == doctest::Approx(1.0 / t.snaps[static_cast<std::size_t>(i) - 1].pi));
  }
}

TEST_CASE("linear sharpness ramp matches the rho schedule") {
  Problem p = half_square();
  Quantizer q = Quantizer::from_spec(QuantizerSpec::piecewise_linear(binary_grid(), 0.01, 0.01));
  StepSchedule sched = StepSchedule::constant_eta(0.1);
  sched.rho0 = 0.01;
  sched.B = 50.0;
  RunConfig rc;
  rc.steps = 120;
  rc.seed = 0;
  rc.sharpness_mode = SharpnessMode::LinearRho;
  rc.linear_B = sched.B;
  WeightGroups w0;
  w0.add("w", {0.4});
  Trajectory t = run(p, OptimizerKind::PC, q, sched, rc, &w0);
  // effective shift at step t is rho0 * s_t = rho_at(t-1)
  for (long i = 1; i <= t.steps(); ++i)
    CHECK(sched.rho0 * t.snaps[static_cast<std::size_t>(i)].sharpness ==
          doctest::Approx(rho_at(sched, i - 1)).epsilon(1e-14));
}

TEST_CASE("ergodic averaging uses the eta weights") {
  Problem p = half_square();
  Quantizer ident = Quantizer::from_spec(QuantizerSpec::identity());
  RunConfig rc;
  rc.steps = 4;
  rc.seed = 0;
  WeightGroups w0;
  w0.add("w", {1.0});
  Trajectory t = run(p, OptimizerKind::PC, ident, StepSchedule::constant_eta(0.5), rc, &w0);
  // constant eta: plain mean of the stepped quantized iterates
  double mean = 0.0;
  for (long i = 1; i <= 4; ++i) mean += t.snaps[static_cast<std::size_t>(i)].w_quant.values[0][0];
  mean /= 4.0;
  CHECK(ergodic_average(t).values[0][0] == doctest::Approx(mean).epsilon(1e-15));

  rc.steps = 0;
  Trajectory single = run(p, OptimizerKind::PC, ident, StepSchedule::constant_eta(0.5), rc, &w0);
  CHECK(ergodic_average(single).values[0][0] == 1.0);
}

TEST_CASE("rpc fixed point residual") {
  Problem p = half_square();
  Quantizer ident = Quantizer::from_spec(QuantizerSpec::identity());
  WeightGroups w;
  w.add("w", {0.4});
  // identity quantizer: residual is |eta * w|
  CHECK(rpc_fixed_point_residual(w, p, ident, 0.1, 0.5) == doctest::Approx(0.04).epsilon(1e-15));
  // eta = 0 at a fixed point of P
  Quantizer proj = Quantizer::from_spec(QuantizerSpec::projector(binary_grid()));
  WeightGroups on_grid;
  on_grid.add("w", {1.0});
  CHECK(rpc_fixed_point_residual(on_grid, p, proj, 0.0, 1.0) == 0.0);
}

TEST_CASE("a settled rpc run sits near its fixed point") {
  // l = 1/2 (w - 0.4)^2 with the identity quantizer: rPC is plain SGD
  Problem p = Problem::quadratic(Mat::identity(1), {0.4});
  Quantizer ident = Quantizer::from_spec(QuantizerSpec::identity());
  RunConfig rc;
  rc.steps = 400;
  rc.seed = 0;
  WeightGroups w0;
  w0.add("w", {0.0});
  Trajectory t = run(p, OptimizerKind::RPC, ident, StepSchedule::constant_eta(0.1), rc, &w0);
  double res = rpc_fixed_point_residual(t.tail_w_star, p, ident, 0.1,
                                        t.snaps.back().pi);
  CHECK(res <= 1e-6);
}

TEST_CASE("divergence guard aborts and flags the trajectory") {
  Problem p = half_square();
  Quantizer ident = Quantizer::from_spec(QuantizerSpec::identity());
  RunConfig rc;
  rc.steps = 500;
  rc.seed = 0;
  rc.divergence_bound = 1e3;
  WeightGroups w0;
  w0.add("w", {1.0});
  // eta = 3 makes |1 - eta| > 1: the quadratic recursion blows up
  Trajectory t = run(p, OptimizerKind::PTQ, ident, StepSchedule::constant_eta(3.0), rc, &w0);
  CHECK(t.diverged);
  CHECK(t.diverged_at > 0);

  rc.throw_on_divergence = true;
  CHECK_THROWS_AS(run(p, OptimizerKind::PTQ, ident, StepSchedule::constant_eta(3.0), rc, &w0),
                  DivergenceError);
}

TEST_CASE("early hard quantization freezes gridded groups, others keep training") {
  BlobSpec spec;
  spec.seed = 2;
  spec.n_samples = 40;
  spec.n_features = 2;
  spec.n_classes = 2;
  spec.separation = 2.5;
  Dataset ds = gen_blobs(spec);
  Problem p = Problem::mlp({2, 4, 2}, Activation::Tanh, std::move(ds));
  WeightGroups probe = p.initial_weights(0);
  std::vector<std::pair<std::string, QuantizerSpec>> members;
  for (const auto& n : probe.names) {
    bool bias = n.size() >= 5 && n.substr(n.size() - 5) == ".bias";
    members.emplace_back(n, bias ? QuantizerSpec::identity()
                                 : QuantizerSpec::piecewise_linear(binary_grid(), 0.1, 0.1));
  }
  Quantizer q = Quantizer::from_spec(QuantizerSpec::per_group(std::move(members)));
  RunConfig rc;
  rc.steps = 80;
  rc.seed = 4;
  rc.hard_quantize_step = 40;
  Trajectory t = run(p, OptimizerKind::PC, q, StepSchedule::constant_eta(0.2), rc);

  const auto& late = t.snaps[60].w_star;
  const auto& later = t.snaps[80].w_star;
  for (std::size_t g = 0; g < late.group_count(); ++g) {
    bool bias = late.names[g].find(".bias") != std::string::npos;
    if (!bias) {
      for (double x : late.values[g]) CHECK((x == 1.0 || x == -1.0));
      CHECK(bitwise_equal(WeightGroups{{late.names[g]}, {late.values[g]}},
                          WeightGroups{{later.names[g]}, {later.values[g]}}));
    }
  }
  // biases continue to move after the hard step
  bool bias_moved = false;
  for (std::size_t g = 0; g < late.group_count(); ++g)
    if (late.names[g].find(".bias") != std::string::npos)
      for (std::size_t i = 0; i < late.values[g].size(); ++i)
        bias_moved |= late.values[g][i] != later.values[g][i];
  CHECK(bias_moved);
}
