#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "proxkit/diagnostics.hpp"
#include "proxkit/rng.hpp"

using namespace proxkit;

namespace {

Problem small_quadratic() {
  Mat h(2, 2);
  h(0, 0) = 1.6;
  h(0, 1) = h(1, 0) = 0.2;
  h(1, 1) = 0.9;
  return Problem::quadratic(h, {0.5, -0.3});
}

Trajectory pc_run(const Problem& p, const RegularizerForm& form, const StepSchedule& sched,
                  long steps, std::uint64_t seed, std::size_t batch = 0) {
  RunConfig rc;
  rc.steps = steps;
  rc.seed = seed;
  rc.batch_size = batch;
  return run(p, OptimizerKind::PC, form.quantizer(), sched, rc);
}

}  // namespace

TEST_CASE("bregman divergence basics") {
  RegularizerForm form = RegularizerForm::squared_norm();
  WeightGroups w, wn, wsn;
  w.add("w", {0.7, -0.2});
  wn.add("w", {0.1, 0.4});
  // gradient pairing: w*_{tau+1} = grad r_tau(w_{tau+1}) with pi = 1
  wsn.add("w", {2.0 * 0.1, 2.0 * 0.4});

  // closed form: the Bregman of |w|^2 is the squared distance
  double expect = (0.7 - 0.1) * (0.7 - 0.1) + (-0.2 - 0.4) * (-0.2 - 0.4);
  CHECK(bregman_delta(form, 1.0, w, wn, wsn) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(bregman_delta(form, 1.0, wn, wn, wsn) == 0.0);

  // nonnegative for convex r_tau with a consistent gradient pair
  RngStream rs(5, "breg");
  for (int i = 0; i < 50; ++i) {
    double pi = 0.1 + rs.uniform(3 * static_cast<std::uint64_t>(i));
    WeightGroups a, b, gs;
    a.add("w", {rs.normal(10 + 2 * i), rs.normal(11 + 2 * i)});
    b.add("w", {rs.normal(200 + 2 * i), rs.normal(201 + 2 * i)});
    std::vector<double> g(2);
    for (int k = 0; k < 2; ++k)
      g[static_cast<std::size_t>(k)] =
          form.subgrad(b.values[0][static_cast<std::size_t>(k)]) / pi +
          b.values[0][static_cast<std::size_t>(k)];
    gs.add("w", g);
    CHECK(bregman_delta(form, pi, a, b, gs) >= -1e-12);
  }
}

TEST_CASE("telescoping identity on random sequences") {
  auto g = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += 0.5 * x * x;
    return s;
  };
  RngStream rs(3, "seq");
  const long T = 9;
  std::vector<double> eta(T + 1);
  std::vector<std::vector<double>> z(T + 1, std::vector<double>(3)),
      w_seq(T + 2, std::vector<double>(3));
  std::vector<double> w(3, 0.2), w0(3, 0.0);
  std::uint64_t c = 0;
  for (auto& e : eta) e = rs.uniform(c++);
  for (auto& v : z)
    for (auto& x : v) x = rs.normal(c++);
  for (auto& v : w_seq)
    for (auto& x : v) x = rs.normal(c++);

  CHECK(telescoping_residual(eta, z, w_seq, g, w, 1, T, w0).relative() <= 1e-9);
  CHECK(telescoping_residual(eta, z, w_seq, g, w, 0, T, w0).relative() <= 1e-9);
  // single-step window at machine precision
  CHECK(telescoping_residual(eta, z, w_seq, g, w, 4, 4, w0).residual <= 1e-12);
  // empty window
  CHECK(telescoping_residual(eta, z, w_seq, g, w, 6, 5, w0).residual == 0.0);
  // length mismatch
  std::vector<double> short_eta(eta.begin(), eta.end() - 2);
  CHECK_THROWS(telescoping_residual(short_eta, z, w_seq, g, w, 1, T, w0));
}

TEST_CASE("window bound on pc runs, empty windows, nonconvex reporting") {
  Problem p = small_quadratic();
  RegularizerForm sq = RegularizerForm::squared_norm();
  Trajectory traj = pc_run(p, sq, StepSchedule::constant_eta(0.15), 120, 7);
  WeightGroups w_cmp = comparison_point(p, sq);

  BoundReport rep = window_bound_check(traj, sq, w_cmp, 1, traj.steps());
  CHECK(rep.holds());
  CHECK(rep.lhs == doctest::Approx(rep.rhs).epsilon(1e-9));  // the bound is an identity here

  BoundReport empty = window_bound_check(traj, sq, w_cmp, traj.steps() + 1, traj.steps());
  CHECK(empty.lhs == 0.0);
  CHECK(empty.rhs == 0.0);

  // nonconvex form: evaluated and reported, no nonnegativity claim
  RegularizerForm dist = RegularizerForm::grid_dist(binary_grid());
  Trajectory dtraj = pc_run(p, dist, StepSchedule::constant_eta(0.15), 120, 7);
  BoundReport drep = window_bound_check(dtraj, dist, comparison_point(p, dist), 1, dtraj.steps());
  CHECK(std::isfinite(drep.lhs));
  CHECK(std::isfinite(drep.rhs));
  CHECK(drep.holds());
}

TEST_CASE("general-mu variant reduces to the standard one under the default coupling") {
  Problem p = small_quadratic();
  RegularizerForm sq = RegularizerForm::squared_norm();
  Trajectory traj = pc_run(p, sq, StepSchedule::polynomial_eta(0.2, 0.5), 90, 11);
  WeightGroups w_cmp = comparison_point(p, sq);
  BoundReport a = window_bound_check(traj, sq, w_cmp, 1, 90);
  BoundReport b = window_bound_check_general_mu(traj, sq, w_cmp, 1, 90);
  CHECK(a.lhs == b.lhs);
  CHECK(b.drift == 0.0);
  CHECK(a.rhs == doctest::Approx(b.rhs).epsilon(1e-12));
}

TEST_CASE("general-mu window bound holds with decaying smoothing") {
  Problem p = small_quadratic();
  RegularizerForm sq = RegularizerForm::squared_norm();
  RunConfig rc;
  rc.steps = 150;
  rc.seed = 2;
  rc.mu.kind = MuMode::Kind::Lambda;
  Trajectory traj = run(p, OptimizerKind::PC, sq.quantizer(), StepSchedule::constant_eta(0.1), rc);
  WeightGroups w_cmp = comparison_point(p, sq);
  BoundReport rep = window_bound_check_general_mu(traj, sq, w_cmp, 1, traj.steps());
  CHECK(rep.holds());
  CHECK(rep.drift != 0.0);
  CHECK(termwise_bregman_excess(traj, sq, 1, traj.steps()) <= 1e-12);
}

TEST_CASE("min-iterate and averaged-iterate bounds on convex runs") {
  Problem p = small_quadratic();
  RegularizerForm sq = RegularizerForm::squared_norm();
  Trajectory traj = pc_run(p, sq, StepSchedule::polynomial_eta(0.3, 0.5), 200, 5);
  WeightGroups w_cmp = comparison_point(p, sq);
  auto reports = convex_window_bounds(traj, p, sq, w_cmp, 1, traj.steps());
  for (const auto& r : reports) CHECK(r.holds());

  // zero-length window short-circuits to zero reports
  auto zero = convex_window_bounds(traj, p, sq, w_cmp, 10, 9);
  CHECK(zero[0].lhs == 0.0);
  CHECK(zero[0].rhs == 0.0);
}

TEST_CASE("prox of each form agrees with a fine-grid minimization oracle") {
  RngStream rs(19, "formprox");
  for (const auto& form : {RegularizerForm::squared_norm(),
                           RegularizerForm::scaled_sq_dist(ternary_grid(), 1.0),
                           RegularizerForm::grid_dist(binary_grid())}) {
    for (int i = 0; i < 8; ++i) {
      double x = 4.0 * rs.uniform(static_cast<std::uint64_t>(i)) - 2.0;
      double m = 0.3 + 2.0 * rs.uniform(50 + static_cast<std::uint64_t>(i));
      double got = form.prox(x, m);
      double best = 0.0, best_val = 1e300;
      const int n = 30001;
      for (int k = 0; k < n; ++k) {
        double z = -3.0 + 6.0 * k / (n - 1.0);
        double v = (z - x) * (z - x) / (2.0 * m) + form.value(z);
        if (v < best_val) {
          best_val = v;
          best = z;
        }
      }
      CHECK(std::abs(got - best) <= 4e-4);  // grid resolution
    }
  }
}

TEST_CASE("form proxes match the paired quantizer specs") {
  // scaled squared distance <-> the identity/projector average family
  RegularizerForm br = RegularizerForm::scaled_sq_dist(ternary_grid(), 1.0);
  QuantizerSpec br_spec = QuantizerSpec::binary_relax(ternary_grid(), 1.0);
  // grid distance <-> unit-shift piecewise linear map
  RegularizerForm dist = RegularizerForm::grid_dist(ternary_grid());
  QuantizerSpec plq_spec = QuantizerSpec::piecewise_linear(ternary_grid(), 1.0, 1.0, false);
  for (double m : {0.1, 0.4}) {
    for (double x : linspace(-0.95, 0.95, 301)) {
      CHECK(br.prox(x, m) == doctest::Approx(apply_scalar(br_spec, x, m, 0)).epsilon(1e-13));
      CHECK(dist.prox(x, m) == doctest::Approx(apply_scalar(plq_spec, x, m, 0)).epsilon(1e-13));
    }
  }
  RegularizerForm sq = RegularizerForm::squared_norm();
  for (double x : {-1.2, 0.3, 2.0}) CHECK(sq.prox(x, 3.0) == x / 4.0);
}

TEST_CASE("comparison point is the projected continuous optimum") {
  Problem p = small_quadratic();
  WeightGroups opt = *p.analytic_optimum();
  RegularizerForm sq = RegularizerForm::squared_norm();
  CHECK(bitwise_equal(comparison_point(p, sq), opt));
  RegularizerForm gridded = RegularizerForm::scaled_sq_dist(binary_grid(), 1.0);
  WeightGroups projected = comparison_point(p, gridded);
  for (double x : projected.values[0]) CHECK((x == 1.0 || x == -1.0));
}

TEST_CASE("window bound report matches an independent recomputation") {
  Problem p = small_quadratic();
  RegularizerForm form = RegularizerForm::squared_norm();
  Trajectory traj = pc_run(p, form, StepSchedule::constant_eta(0.2), 25, 17);
  WeightGroups w;
  w.add("w", {0.3, -0.4});
  const long s = 2, t = 20;
  BoundReport rep = window_bound_check(traj, form, w, s, t);

  // plain-loop recomputation, no shared helpers
  auto r_tau = [&](double pi, const std::vector<double>& v) {
    double r = 0.0, n2 = 0.0;
    for (double x : v) {
      r += 0.5 * x * x;
      n2 += x * x;
    }
    return r / pi + 0.5 * n2;
  };
  auto delta_tau = [&](double pi, const std::vector<double>& x, const std::vector<double>& wn,
                       const std::vector<double>& wsn) {
    double ip = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ip += (x[i] - wn[i]) * wsn[i];
    return r_tau(pi, x) - r_tau(pi, wn) - ip;
  };
  auto quant_at = [&](long tau) -> const std::vector<double>& {
    return tau <= traj.steps() ? traj.snaps[(std::size_t)tau].w_quant.values[0]
                               : traj.tail_w_quant.values[0];
  };
  auto star_at = [&](long tau) -> const std::vector<double>& {
    return tau <= traj.steps() ? traj.snaps[(std::size_t)tau].w_star.values[0]
                               : traj.tail_w_star.values[0];
  };
  const std::vector<double>& wv = w.values[0];
  double lhs = 0.0;
  for (long tau = s; tau <= t; ++tau) {
    const auto& sn = traj.snaps[(std::size_t)tau];
    double ip = 0.0, rq = 0.0, rw = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) {
      ip += (sn.w_quant.values[0][i] - wv[i]) * sn.grad.values[0][i];
      rq += 0.5 * sn.w_quant.values[0][i] * sn.w_quant.values[0][i];
      rw += 0.5 * wv[i] * wv[i];
    }
    lhs += sn.eta * (ip + rq - rw);
  }
  double rhs = delta_tau(traj.snaps[(std::size_t)(s - 1)].pi, wv, quant_at(s), star_at(s)) -
               delta_tau(traj.snaps[(std::size_t)t].pi, wv, quant_at(t + 1), star_at(t + 1));
  for (long tau = s; tau <= t; ++tau)
    rhs += delta_tau(traj.snaps[(std::size_t)tau].pi, traj.snaps[(std::size_t)tau].w_quant.values[0],
                     quant_at(tau + 1), star_at(tau + 1));

  CHECK(rep.lhs == doctest::Approx(lhs).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("bound checks reject a trajectory from a different quantizer") {
  Problem p = small_quadratic();
  RegularizerForm sq = RegularizerForm::squared_norm();
  RunConfig rc;
  rc.steps = 10;
  rc.seed = 0;
  Trajectory traj = run(p, OptimizerKind::PC,
                        Quantizer::from_spec(QuantizerSpec::projector(binary_grid())),
                        StepSchedule::constant_eta(0.1), rc);
  CHECK_THROWS(window_bound_check(traj, sq, comparison_point(p, sq), 1, 10));
}

TEST_CASE("pathwise bound also holds with minibatch gradients") {
  BlobSpec spec;
  spec.seed = 8;
  spec.n_samples = 48;
  spec.n_features = 2;
  spec.n_classes = 2;
  spec.separation = 2.0;
  Problem p = Problem::logistic(gen_blobs(spec), 0.1);
  RegularizerForm sq = RegularizerForm::squared_norm();
  Trajectory traj = pc_run(p, sq, StepSchedule::constant_eta(0.2), 150, 13, 12);
  BoundReport rep = window_bound_check(traj, sq, comparison_point(p, sq), 1, traj.steps());
  CHECK(rep.holds());
}
