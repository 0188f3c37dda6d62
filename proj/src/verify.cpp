#include "proxkit/verify.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "proxkit/checkpoint.hpp"
#include "proxkit/diagnostics.hpp"
#include "proxkit/experiment.hpp"
#include "proxkit/gcg.hpp"
#include "proxkit/rng.hpp"

namespace proxkit {

namespace {

using Clock = std::chrono::steady_clock;

struct SuiteBuilder {
  SuiteResult result;
  Clock::time_point start = Clock::now();

  explicit SuiteBuilder(std::string name) { result.suite = std::move(name); }

  void check(const std::string& name, bool pass, const std::string& detail = "") {
    result.lines.push_back({name, pass, detail});
  }
  void check_le(const std::string& name, double value, double bound) {
    std::ostringstream d;
    d << value << " <= " << bound;
    check(name, value <= bound, d.str());
  }
  void check_ge(const std::string& name, double value, double bound) {
    std::ostringstream d;
    d << value << " >= " << bound;
    check(name, value >= bound, d.str());
  }
  SuiteResult finish() {
    result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Problem seeded_quadratic(std::size_t dim, std::uint64_t seed) {
  RngStream rs(seed, "spd");
  Mat a(dim, dim);
  for (std::size_t i = 0; i < dim * dim; ++i) a.a[i] = rs.normal(i);
  Mat h(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += a(k, i) * a(k, j);
      h(i, j) = s / static_cast<double>(dim) + (i == j ? 0.5 : 0.0);
    }
  std::vector<double> b(dim);
  for (std::size_t i = 0; i < dim; ++i) b[i] = rs.normal(dim * dim + i);
  return Problem::quadratic(std::move(h), std::move(b));
}

Problem blobs_logistic(std::uint64_t seed, double l2) {
  BlobSpec spec;
  spec.seed = seed;
  spec.n_samples = 64;
  spec.n_features = 2;
  spec.n_classes = 2;
  spec.separation = 2.0;
  return Problem::logistic(gen_blobs(spec), l2);
}

// two informative dimensions plus noise features the quantized first layer
// cannot simply downweight
Problem blobs_mlp(std::uint64_t seed, std::size_t hidden = 12, std::size_t features = 6,
                  double separation = 2.5) {
  BlobSpec spec;
  spec.seed = seed;
  spec.n_samples = 240;
  spec.n_features = features;
  spec.n_classes = 2;
  spec.separation = separation;
  Dataset ds = gen_blobs(spec);
  return Problem::mlp({ds.d, hidden, ds.classes}, Activation::Tanh, std::move(ds));
}

QuantizerSpec mlp_per_group(const Problem& problem, const QuantizerSpec& weights_spec) {
  WeightGroups probe = problem.initial_weights(0);
  std::vector<std::pair<std::string, QuantizerSpec>> members;
  for (const auto& name : probe.names) {
    bool is_bias = name.size() >= 5 && name.substr(name.size() - 5) == ".bias";
    members.emplace_back(name, is_bias ? QuantizerSpec::identity() : weights_spec);
  }
  return QuantizerSpec::per_group(std::move(members));
}

// ---------------------------------------------------------------- criterion 1

SuiteResult suite_axioms(const VerifyOptions& opts) {
  SuiteBuilder sb("axioms");
  const std::vector<double> probes = linspace(-2.0, 2.0, 10000);

  struct Named {
    std::string name;
    QuantizerSpec spec;
  };
  std::vector<Named> specs;
  specs.push_back({"identity", QuantizerSpec::identity()});
  for (auto [gname, grid] : {std::pair{std::string("binary"), binary_grid()},
                             {std::string("ternary"), ternary_grid()},
                             {std::string("quaternary"), quaternary_grid()}}) {
    specs.push_back({"projector_" + gname, QuantizerSpec::projector(grid)});
    specs.push_back({"plq_" + gname + "_rv", QuantizerSpec::piecewise_linear(grid, 0.2, 0.2)});
    specs.push_back({"binary_relax_" + gname, QuantizerSpec::binary_relax(grid, 1.0)});
  }
  specs.push_back({"plq_ternary_h", QuantizerSpec::piecewise_linear(ternary_grid(), 0.2, 0.0)});
  specs.push_back({"plq_ternary_v", QuantizerSpec::piecewise_linear(ternary_grid(), 0.0, 0.25)});
  specs.push_back({"plq_ternary_open",
                   QuantizerSpec::piecewise_linear(ternary_grid(), 0.2, 0.1, false)});
  specs.push_back({"soft_sign", QuantizerSpec::soft_sign(0.5, 1.0)});
  specs.push_back({"average_br",
                   QuantizerSpec::average({{0.5, QuantizerSpec::identity()},
                                           {0.5, QuantizerSpec::projector(binary_grid())}})});
  specs.push_back(
      {"random_select",
       QuantizerSpec::random_select({QuantizerSpec::projector(binary_grid()),
                                     QuantizerSpec::binary_relax(binary_grid(), 2.0)},
                                    7)});

  for (const auto& [name, spec] : specs) {
    AxiomReport rep = check_prox_axioms(spec, probes);
    sb.check("monotone_" + name, rep.monotonicity_violations == 0,
             "violations=" + std::to_string(rep.monotonicity_violations));
    sb.check("closed_graph_" + name, rep.values_finite && rep.unattained_jumps == 0,
             "jumps=" + std::to_string(rep.jump_count) +
                 " unattained=" + std::to_string(rep.unattained_jumps));
  }

  // fixed points: every level exactly, and plateau constancy for rho > 0
  for (auto grid : {binary_grid(), ternary_grid(), quaternary_grid()}) {
    QuantizerSpec plq = QuantizerSpec::piecewise_linear(grid, 0.1, 0.1);
    bool fixed_ok = true, plateau_ok = true;
    for (double q : grid.levels) {
      if (apply_scalar(plq, q, 1.0, 0) != q) fixed_ok = false;
      for (double d : {-0.09, -0.05, 0.05, 0.09}) {
        double x = q + d;
        if (x < grid.lo() || x > grid.hi()) continue;
        if (apply_scalar(plq, x, 1.0, 0) != q) plateau_ok = false;
      }
    }
    sb.check("fixed_points_" + std::to_string(grid.size()), fixed_ok);
    sb.check("plateau_" + std::to_string(grid.size()), plateau_ok);
  }

  // decreasing map is not a proximal map
  AxiomReport neg = check_prox_axioms([](double x) { return -x; }, probes);
  sb.check("negative_control_detects", neg.monotonicity_violations > 0);

  if (opts.mutation == "plq_slope_flip") {
    // deliberately sign-flipped middle slope; the suite must catch it
    QuantizationGrid grid = ternary_grid();
    auto broken = [grid](double w) {
      w = std::clamp(w, grid.lo(), grid.hi());
      auto it = std::upper_bound(grid.levels.begin(), grid.levels.end(), w);
      std::size_t k = it == grid.levels.begin() ? 0 : static_cast<std::size_t>(it - grid.levels.begin()) - 1;
      if (k + 1 >= grid.levels.size()) k = grid.levels.size() - 2;
      double qk = grid.levels[k], pm = grid.midpoints[k];
      double qk_plus = std::min(pm, qk + 0.2);
      if (w <= qk_plus) return qk;
      if (w < pm) return qk - (w - qk_plus) * (pm - qk) / (pm - qk_plus);
      return grid.levels[k + 1];
    };
    AxiomReport rep = check_prox_axioms(broken, probes);
    sb.check("mutated_plq_slope", rep.monotonicity_violations == 0,
             "violations=" + std::to_string(rep.monotonicity_violations));
  } else if (!opts.mutation.empty()) {
    sb.check("mutation_known", false, "unknown mutation '" + opts.mutation + "'");
  }
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 2

SuiteResult suite_special_cases(const VerifyOptions&) {
  SuiteBuilder sb("special_cases");
  // binary-relax equivalence: rho = 0, varrho = mu/(2(1+mu)) on unit-spaced grids
  for (double mu : {0.1, 1.0, 10.0}) {
    for (auto grid : {ternary_grid(), make_grid({0.0, 1.0})}) {
      double varrho = mu / (2.0 * (1.0 + mu));
      QuantizerSpec plq = QuantizerSpec::piecewise_linear(grid, 0.0, varrho, false);
      double worst = 0.0;
      for (double w : linspace(grid.lo() - 1.0, grid.hi() + 1.0, 4001)) {
        double lhs = apply_scalar(plq, w, 1.0, 0);
        double rhs = (w + mu * project(grid, w)) / (1.0 + mu);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      sb.check_le("binary_relax_mu" + fmt(mu) + "_b" + std::to_string(grid.size()), worst, 1e-12);
    }
  }
  // projector limit at huge shifts, off-midpoints
  for (auto grid : {binary_grid(), ternary_grid(), quaternary_grid()}) {
    QuantizerSpec plq = QuantizerSpec::piecewise_linear(grid, 1e6, 1e6);
    double worst = 0.0;
    for (double w : linspace(-2.0, 2.0, 9973)) {
      bool near_mid = false;
      for (double m : grid.midpoints) near_mid |= std::abs(w - m) < 1e-9;
      if (near_mid) continue;
      worst = std::max(worst, std::abs(apply_scalar(plq, w, 1.0, 0) - project(grid, w)));
    }
    sb.check_le("projector_limit_b" + std::to_string(grid.size()), worst, 0.0);
  }
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 3

SuiteResult suite_telescoping(const VerifyOptions&) {
  SuiteBuilder sb("telescoping");
  auto g_sq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += 0.5 * x * x;
    return s;
  };
  QuantizationGrid grid = ternary_grid();
  auto g_dist = [grid](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x - project(grid, x));
    return s;
  };

  double worst_rel = 0.0;
  const long T = 9;  // sequences of 10 steps (0..9), dim 3
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rs(static_cast<std::uint64_t>(trial), "telescoping");
    std::vector<double> eta(T + 1);
    std::vector<std::vector<double>> z(T + 1, std::vector<double>(3)),
        w_seq(T + 2, std::vector<double>(3));
    std::vector<double> w(3), w0(3);
    std::uint64_t c = 0;
    for (auto& e : eta) e = rs.uniform(c++);
    for (auto& v : z)
      for (auto& x : v) x = rs.normal(c++);
    for (auto& v : w_seq)
      for (auto& x : v) x = rs.normal(c++);
    for (auto& x : w) x = rs.normal(c++);
    for (auto& x : w0) x = rs.normal(c++);

    const auto& g = (trial % 2 == 0) ? std::function<double(const std::vector<double>&)>(g_sq)
                                     : std::function<double(const std::vector<double>&)>(g_dist);
    for (auto [s, t] : {std::pair<long, long>{1, T}, {0, T}, {3, 5}, {4, 4}}) {
      TelescopingResult res = telescoping_residual(eta, z, w_seq, g, w, s, t, w0);
      worst_rel = std::max(worst_rel, res.relative());
    }
    // empty window
    TelescopingResult empty = telescoping_residual(eta, z, w_seq, g, w, 5, 4, w0);
    if (empty.residual != 0.0) worst_rel = std::max(worst_rel, 1.0);
  }
  sb.check_le("identity_residual_rel", worst_rel, 1e-9);
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 4

SuiteResult suite_moreau_identities(const VerifyOptions&) {
  SuiteBuilder sb("moreau_identities");
  std::vector<ConjugateRegularizer> regs = {
      ConjugateRegularizer::squared_norm(1.0),
      ConjugateRegularizer::squared_norm(2.5),
      ConjugateRegularizer::grid_squared_distance(binary_grid(), 1.0),
      ConjugateRegularizer::grid_squared_distance(ternary_grid(), 0.7),
      ConjugateRegularizer::boxed_quadratic(-1.0, 1.0, 1.0),
      ConjugateRegularizer::boxed_quadratic(-0.5, 2.0, 3.0)};
  for (const auto& reg : regs) {
    double worst_routes = 0.0, worst_fd = 0.0, worst_conj = 0.0;
    for (double mu : {0.3, 1.0, 3.0}) {
      RngStream rs(fnv1a64(reg.name()), "probes");
      for (int i = 0; i < 100; ++i) {
        double y = 6.0 * rs.uniform(static_cast<std::uint64_t>(i)) - 3.0;
        double g_env = reg.moreau_conj_grad_envelope(y, mu);
        double g_prox = reg.moreau_conj_grad_prox(y, mu);
        worst_routes = std::max(worst_routes, std::abs(g_env - g_prox));
        const double h = 1e-6;
        double fd = (reg.moreau_conj_value(y + h, mu) - reg.moreau_conj_value(y - h, mu)) / (2 * h);
        worst_fd = std::max(worst_fd, std::abs(fd - g_prox) / std::max(1.0, std::abs(g_prox)));
        // (M^mu_{r*})* = r** + (mu/2)|.|^2, checked by maximizing x*w - M(x)
        // pointwise where r** is finite
        double w_pt = 2.4 * rs.uniform(1000 + static_cast<std::uint64_t>(i)) - 1.2;
        if (reg.kind() == ConjugateRegularizer::Kind::BoxedQuadratic) {
          double u = rs.uniform(2000 + static_cast<std::uint64_t>(i));
          w_pt = -0.45 + u * (0.45 + 0.45);  // interior of every boxed domain used here
        }
        double best = -1e300;
        for (double x : linspace(-30.0, 30.0, 20001))
          best = std::max(best, x * w_pt - reg.moreau_conj_value(x, mu));
        double expect = reg.biconj_value(w_pt) + 0.5 * mu * w_pt * w_pt;
        worst_conj = std::max(worst_conj, std::abs(best - expect));
      }
    }
    sb.check_le("routes_" + reg.name(), worst_routes, 1e-10);
    sb.check_le("fd_" + reg.name(), worst_fd, 1e-6);
    sb.check_le("moreau_conj_identity_" + reg.name(), worst_conj, 2e-3);
  }
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 5

SuiteResult suite_equivalence_chain(const VerifyOptions&) {
  SuiteBuilder sb("da_equivalence");
  auto lambda_fn = [](long t) { return t == 0 ? 0.0 : 1.0 / static_cast<double>(t + 1); };

  struct Instance {
    std::string name;
    Problem problem;
    ConjugateRegularizer reg;
  };
  std::vector<Instance> instances;
  instances.push_back({"quad1d_sqnorm", Problem::quadratic(Mat::identity(1), {1.0}),
                       ConjugateRegularizer::squared_norm(1.0)});
  instances.push_back({"quad3d_griddist", seeded_quadratic(3, 11),
                       ConjugateRegularizer::grid_squared_distance(binary_grid(), 1.0)});
  instances.push_back({"quad3d_boxed", seeded_quadratic(3, 12),
                       ConjugateRegularizer::boxed_quadratic(-1.0, 1.0, 1.0)});

  for (const auto& inst : instances) {
    SmoothConvexObjective obj = objective_from(inst.problem);
    RngStream rs(fnv1a64(inst.name), "w0");
    std::vector<double> w0(obj.dim);
    for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = rs.normal(i);
    double dev = da_equivalence_check(obj, inst.reg, w0, lambda_fn, 100);
    sb.check_le("chain_" + inst.name, dev, 1e-12);
    double zero_dev = da_equivalence_check(obj, inst.reg, w0, lambda_fn, 0);
    sb.check_le("zero_steps_" + inst.name, zero_dev, 0.0);
    double neg = da_equivalence_check(obj, inst.reg, w0, lambda_fn, 100, 1.001);
    sb.check_ge("negative_control_" + inst.name, neg, 1e-6);
  }
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 6

SuiteResult suite_projector_containment(const VerifyOptions&) {
  SuiteBuilder sb("projector_containment");
  Problem problem = blobs_mlp(3);
  QuantizerSpec proj = mlp_per_group(problem, QuantizerSpec::projector(binary_grid()));
  Quantizer q = Quantizer::from_spec(proj);
  StepSchedule sched = StepSchedule::constant_eta(0.1);
  RunConfig rc;
  rc.steps = 1000;
  rc.seed = 42;
  rc.batch_size = 32;
  Trajectory bc = run(problem, OptimizerKind::BC, q, sched, rc);
  Trajectory pc = run(problem, OptimizerKind::PC, q, sched, rc);
  bool identical = bc.snaps.size() == pc.snaps.size();
  for (std::size_t i = 0; identical && i < bc.snaps.size(); ++i)
    identical = bitwise_equal(bc.snaps[i].w_star, pc.snaps[i].w_star) &&
                bitwise_equal(bc.snaps[i].w_quant, pc.snaps[i].w_quant);
  sb.check("bc_equals_pc_projector_bitwise", identical,
           std::to_string(bc.snaps.size()) + " snapshots compared");
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 7

SuiteResult suite_dichotomy(const VerifyOptions&) {
  SuiteBuilder sb("dichotomy");
  Problem problem = Problem::quadratic(Mat::identity(1), {0.0});  // 1/2 w^2
  WeightGroups w0;
  w0.add("w", {0.9});
  Quantizer q = Quantizer::from_spec(QuantizerSpec::soft_sign(0.5, 1.0));
  const long T = 10000;

  // fixed smoothing, constant step: the quantized iterate stays bounded away
  // from the optimum; the continuous iterate oscillates without settling
  RunConfig rc;
  rc.steps = T;
  rc.seed = 0;
  Trajectory bc = run(problem, OptimizerKind::BC, q, StepSchedule::constant_eta(0.1), rc, &w0);
  long quant_reentries = 0, star_reentries = 0, sign_flips = 0;
  double prev = 0.0;
  for (long t = 3 * T / 4; t <= T; ++t) {
    const auto& s = bc.snaps[static_cast<std::size_t>(t)];
    double wq = s.w_quant.values[0][0];
    double ws = s.w_star.values[0][0];
    if (std::abs(wq) > 0.3) ++quant_reentries;
    if (std::abs(ws) > 0.03) ++star_reentries;
    if (t > 3 * T / 4 && ws * prev < 0.0) ++sign_flips;
    prev = ws;
  }
  sb.check_ge("bc_fixed_mu_quantized_reentries_gt_0.3", static_cast<double>(quant_reentries),
              1.0);
  sb.check_ge("bc_fixed_mu_star_reentries_gt_0.03", static_cast<double>(star_reentries), 1.0);
  sb.check_ge("bc_fixed_mu_sign_flips", static_cast<double>(sign_flips), 100.0);

  // diverging sharpness with diminishing steps: ergodic average of the
  // quantized iterates settles at the optimum
  Trajectory pc = run(problem, OptimizerKind::PC, q, StepSchedule::polynomial_eta(0.1, 0.5), rc,
                      &w0);
  WeightGroups avg = ergodic_average(pc);
  sb.check_le("pc_ergodic_average_abs", std::abs(avg.values[0][0]), 0.05);
  double sharp_end = pc.snaps.back().sharpness;
  sb.check_ge("pc_sharpness_diverges", sharp_end, 10.0);
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 8

SuiteResult suite_bounds_matrix(const VerifyOptions&) {
  SuiteBuilder sb("bounds_matrix");
  const std::vector<StepSchedule> schedules = {StepSchedule::constant_eta(0.1),
                                               StepSchedule::polynomial_eta(0.2, 0.5),
                                               StepSchedule::gcg_lambda_inv_t()};
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  for (int prob_id = 0; prob_id < 2; ++prob_id) {
    Problem problem = prob_id == 0 ? seeded_quadratic(3, 21) : blobs_logistic(21, 0.1);
    std::string pname = prob_id == 0 ? "quadratic" : "logistic";
    std::size_t batch = prob_id == 0 ? 0 : 16;

    for (int form_id = 0; form_id < 2; ++form_id) {
      RegularizerForm form = form_id == 0 ? RegularizerForm::squared_norm()
                                          : RegularizerForm::scaled_sq_dist(binary_grid(), 1.0);
      Quantizer q = form.quantizer();
      WeightGroups w_cmp = comparison_point(problem, form);

      int sched_id = 0;
      for (const auto& sched : schedules) {
        std::string cell = pname + "_" + form.name() + "_s" + std::to_string(sched_id++);
        double worst51 = -1e300, worstA3 = -1e300, worst52 = -1e300;
        double sum_lhs29 = 0, sum_rhs29 = 0, sum_lhs31 = 0, sum_rhs31 = 0;
        bool reduction_ok = true;
        for (std::uint64_t seed : seeds) {
          RunConfig rc;
          rc.steps = 300;
          rc.seed = seed;
          rc.batch_size = batch;
          Trajectory traj = run(problem, OptimizerKind::PC, q, sched, rc);
          long t_end = traj.steps();

          BoundReport r51 = window_bound_check(traj, form, w_cmp, 1, t_end);
          worst51 = std::max(worst51, (r51.lhs - r51.rhs) / r51.scale());
          BoundReport rA3 = window_bound_check_general_mu(traj, form, w_cmp, 1, t_end);
          reduction_ok &= std::abs(rA3.lhs - r51.lhs) <= 1e-9 * r51.scale() &&
                          std::abs(rA3.rhs - r51.rhs) <= 1e-9 * r51.scale();

          // general-mu iterates with the recommended smoothing decay
          RunConfig rcg = rc;
          rcg.mu.kind = form.sigma0() > 0.0 ? MuMode::Kind::Lambda : MuMode::Kind::SqrtLambda;
          rcg.mu.c = 1.0;
          Trajectory gtraj = run(problem, OptimizerKind::PC, q, sched, rcg);
          BoundReport rg = window_bound_check_general_mu(gtraj, form, w_cmp, 1, gtraj.steps());
          worstA3 = std::max(worstA3, (rg.lhs - rg.rhs) / rg.scale());
          if (form.sigma0() > 0.0) {
            double excess = termwise_bregman_excess(gtraj, form, 1, gtraj.steps());
            worstA3 = std::max(worstA3, excess);
          }

          auto reports = convex_window_bounds(traj, problem, form, w_cmp, 1, t_end);
          if (batch == 0) {
            worst52 = std::max(worst52, (reports[0].lhs - reports[0].rhs) / reports[0].scale());
            if (form.convex()) {
              worst52 = std::max(worst52, (reports[1].lhs - reports[1].rhs) / reports[1].scale());
              worst52 = std::max(worst52, (reports[2].lhs - reports[2].rhs) / reports[2].scale());
            }
          } else {
            sum_lhs29 += reports[0].lhs;
            sum_rhs29 += reports[0].rhs;
            if (form.convex()) {
              sum_lhs31 += reports[2].lhs;
              sum_rhs31 += reports[2].rhs;
            }
          }
        }
        sb.check_le("window_" + cell, worst51, 1e-9);
        sb.check("general_mu_reduces_" + cell, reduction_ok);
        sb.check_le("general_mu_" + cell, worstA3, 1e-9);
        if (batch == 0) {
          sb.check_le("convex_bounds_" + cell, worst52, 1e-9);
        } else {
          sb.check_le("convex_bounds_mean_min_" + cell, sum_lhs29 - sum_rhs29, 1e-9 * seeds.size());
          if (sum_rhs31 != 0.0)
            sb.check_le("convex_bounds_mean_avg_" + cell, sum_lhs31 - sum_rhs31, 1e-9 * seeds.size());
        }
      }
    }

    // dual-side gap bounds: three lambda schedules, both conjugate forms
    SmoothConvexObjective obj = objective_from(problem);
    std::vector<std::function<double(long)>> lambdas = {
        [](long t) { return 1.0 / static_cast<double>(t + 1); },
        [](long t) { return 2.0 / static_cast<double>(t + 2); },
        [](long t) { return t == 0 ? 1.0 : 0.05; }};
    for (int reg_id = 0; reg_id < 2; ++reg_id) {
      ConjugateRegularizer reg = reg_id == 0
                                     ? ConjugateRegularizer::squared_norm(1.0)
                                     : ConjugateRegularizer::grid_squared_distance(binary_grid(), 1.0);
      double worst41 = -1e300, worst42 = -1e300;
      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        for (std::uint64_t seed : seeds) {
          GcgOptions go;
          go.steps = 200;
          go.lambda_at = lambdas[li];
          if (!std::isfinite(reg.native_smoothness())) go.mu = 0.5;
          RngStream rs(seed, "gcg_gap_w0");
          std::vector<double> ws0(obj.dim);
          for (std::size_t i = 0; i < ws0.size(); ++i) ws0[i] = rs.normal(i);
          GcgTrace trace = gcg_run(obj, reg, ws0, go);
          std::vector<double> w_cmp(obj.dim, 0.0);
          for (std::size_t i = 0; i < w_cmp.size(); ++i)
            w_cmp[i] = 0.5 * rs.normal(100 + i);
          GcgBound b41 = gcg_gap_bound(trace, obj, reg, w_cmp);
          double scale41 = std::max({1.0, std::abs(b41.lhs), std::abs(b41.rhs)});
          worst41 = std::max(worst41, (b41.lhs - b41.rhs) / scale41);
          GcgBound b42 = gcg_averaged_gap_bound(trace, obj, reg, w_cmp);
          double scale42 = std::max({1.0, std::abs(b42.lhs), std::abs(b42.rhs)});
          worst42 = std::max(worst42, (b42.lhs - b42.rhs) / scale42);
        }
      }
      sb.check_le("gcg_gap_" + pname + "_" + reg.name(), worst41, 1e-9);
      sb.check_le("gcg_avg_gap_" + pname + "_" + reg.name(), worst42, 1e-9);
    }
  }
  return sb.finish();
}

// ---------------------------------------------------------------- criterion 9

SuiteResult suite_rates(const VerifyOptions&) {
  SuiteBuilder sb("rates");

  // averaged-gap rate under lambda_t = 1/(t+1) on a smooth dual instance
  {
    Mat h(2, 2);
    h(0, 0) = 1.7;
    h(1, 1) = 0.6;
    std::vector<double> b = {1.0, -0.6};
    Problem problem = Problem::quadratic(h, b);
    SmoothConvexObjective obj = objective_from(problem);
    ConjugateRegularizer reg = ConjugateRegularizer::squared_norm(1.0);
    GcgOptions go;
    go.steps = 10000;
    go.lambda_at = [](long t) { return 1.0 / static_cast<double>(t + 1); };
    GcgTrace trace = gcg_run(obj, reg, {1.5, 1.5}, go);
    // argmin of l + r**: (H + I) w = b
    Mat hp = h;
    hp(0, 0) += 1.0;
    hp(1, 1) += 1.0;
    std::vector<double> w_opt = solve_dense(hp, b);
    std::vector<double> gaps = gcg_averaged_gap_series(trace, obj, reg, w_opt);
    std::vector<double> ts, ys;
    for (long t = 100; t <= 10000; t += 25) {
      double gap = gaps[static_cast<std::size_t>(t)];
      if (gap > 1e-300) {
        ts.push_back(static_cast<double>(t));
        ys.push_back(gap);
      }
    }
    double slope = loglog_slope(ts, ys);
    sb.check_le("averaged_gap_exponent", slope, -0.8);
  }

  // min-iterate rate under constant eta for the PC iterates
  {
    Problem problem = Problem::quadratic(Mat::identity(1), {1.0});  // 1/2 (w-1)^2 up to const
    RegularizerForm form = RegularizerForm::squared_norm();
    Quantizer q = form.quantizer();
    RunConfig rc;
    rc.steps = 10000;
    rc.seed = 9;
    WeightGroups w0;
    w0.add("w", {2.0});
    Trajectory traj = run(problem, OptimizerKind::PC, q, StepSchedule::constant_eta(0.1), rc, &w0);
    WeightGroups w_cmp;
    w_cmp.add("w", {0.5});  // argmin of 1/2(w-1)^2 + 1/2 w^2
    double f_cmp = composite_value(problem, form, w_cmp);
    std::vector<double> ts, ys;
    double run_min = 1e300;
    for (long t = 1; t <= traj.steps(); ++t) {
      run_min = std::min(run_min,
                         composite_value(problem, form, traj.snaps[static_cast<std::size_t>(t)].w_quant) - f_cmp);
      if (t >= 100 && t % 25 == 0 && run_min > 1e-300) {
        ts.push_back(static_cast<double>(t));
        ys.push_back(run_min);
      }
    }
    double slope = loglog_slope(ts, ys);
    sb.check_le("min_iterate_gap_exponent", slope, -0.4);
  }
  return sb.finish();
}

// --------------------------------------------------------------- criterion 10

struct DeskRun {
  double initial_acc = 0.0;
  double final_acc = 0.0;
};

DeskRun desk_run(OptimizerKind kind, const QuantizerSpec& spec, std::uint64_t seed, long steps,
                 SharpnessMode smode, double B, bool per_group = true) {
  Problem problem = blobs_mlp(seed);
  bool wrap = per_group && spec.kind != QuantizerSpec::Kind::Identity;
  Quantizer q = Quantizer::from_spec(wrap ? mlp_per_group(problem, spec) : spec);
  RunConfig rc;
  rc.steps = steps;
  rc.seed = seed;
  rc.batch_size = 0;
  rc.sharpness_mode = smode;
  rc.linear_B = B;
  Trajectory traj = run(problem, kind, q, StepSchedule::constant_eta(0.3), rc);
  DeskRun out;
  out.initial_acc = problem.accuracy(traj.snaps.front().w_quant);
  out.final_acc = problem.accuracy(traj.terminal_hard);
  return out;
}

SuiteResult suite_desk_reproduction(const VerifyOptions&) {
  SuiteBuilder sb("desk_reproduction");
  const long steps = 3000;
  const double B = 250.0;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  struct GridCase {
    std::string name;
    QuantizationGrid grid;
  };
  const std::vector<GridCase> grids = {{"binary", binary_grid()},
                                       {"ternary", ternary_grid()},
                                       {"quaternary", quaternary_grid()}};

  double fp_mean = 0.0;
  for (std::uint64_t s : seeds)
    fp_mean += desk_run(OptimizerKind::PTQ, QuantizerSpec::identity(), s, steps,
                        SharpnessMode::PiInverse, B)
                   .final_acc;
  fp_mean /= static_cast<double>(seeds.size());
  sb.check_ge("full_precision_mean", fp_mean, 0.9);

  for (const auto& gc : grids) {
    double pc_mean = 0.0, ptq_mean = 0.0;
    for (std::uint64_t s : seeds) {
      QuantizerSpec plq = QuantizerSpec::piecewise_linear(gc.grid, 0.05, 0.05);
      pc_mean += desk_run(OptimizerKind::PC, plq, s, steps, SharpnessMode::LinearRho, B).final_acc;
      ptq_mean += desk_run(OptimizerKind::PTQ, QuantizerSpec::projector(gc.grid), s, steps,
                           SharpnessMode::PiInverse, B)
                      .final_acc;
    }
    pc_mean /= static_cast<double>(seeds.size());
    ptq_mean /= static_cast<double>(seeds.size());
    sb.check_ge("pc_vs_ptq_" + gc.name, pc_mean - ptq_mean, 0.0);
    if (gc.name == "binary")
      sb.check_ge("pc_binary_vs_full_precision", pc_mean - (fp_mean - 0.10), 0.0);
  }

  // proximal gradient with the bare projector is pinned to the grid: every
  // update is projected straight back, so accuracy never moves
  double worst_gain = 0.0;
  for (std::uint64_t s : seeds) {
    DeskRun r = desk_run(OptimizerKind::PQ, QuantizerSpec::projector(binary_grid()), s, steps,
                         SharpnessMode::PiInverse, B, false);
    worst_gain = std::max(worst_gain, r.final_acc - r.initial_acc);
  }
  sb.check_le("pq_projector_stall_gain", worst_gain, 0.01);
  return sb.finish();
}

// --------------------------------------------------------------- criterion 11

SuiteResult suite_persistence(const VerifyOptions& opts) {
  SuiteBuilder sb("persistence");
  namespace fs = std::filesystem;
  fs::path root = opts.work_dir.empty()
                      ? fs::temp_directory_path() / "proxkit_persistence"
                      : fs::path(opts.work_dir);
  fs::remove_all(root);
  fs::create_directories(root);

  KeyValueConfig cfg = KeyValueConfig::from_string(R"(
problem.kind = mlp
dataset.kind = blobs
dataset.samples = 60
dataset.features = 2
dataset.classes = 2
dataset.separation = 3.0
dataset.seed = 7
mlp.hidden = 4
optimizer.kind = pc
quantizer.kind = piecewise_linear
quantizer.grid = ternary
quantizer.rho = 0.05
quantizer.varrho = 0.05
schedule.kind = constant
schedule.eta0 = 0.3
run.steps = 60
run.seed = 7
run.batch = 16
)");

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  cmd_run(cfg, (root / "a").string());
  cmd_run(cfg, (root / "b").string());
  sb.check("rerun_metrics_identical",
           slurp(root / "a" / "metrics.csv") == slurp(root / "b" / "metrics.csv"));
  sb.check("rerun_checkpoint_identical",
           slurp(root / "a" / "checkpoint.txt") == slurp(root / "b" / "checkpoint.txt"));

  // split run: 30 steps, then resume for the remaining 30
  KeyValueConfig half = cfg;
  half.set("run.steps", "30");
  cmd_run(half, (root / "half").string());
  cmd_run(cfg, (root / "resumed").string(), (root / "half" / "checkpoint.txt").string());
  sb.check("resume_checkpoint_bit_exact",
           slurp(root / "a" / "checkpoint.txt") == slurp(root / "resumed" / "checkpoint.txt"));

  // straight CSV == first-half rows + resumed rows
  std::string straight = slurp(root / "a" / "metrics.csv");
  std::string part1 = slurp(root / "half" / "metrics.csv");
  std::string part2 = slurp(root / "resumed" / "metrics.csv");
  std::string header = std::string(kMetricsHeader) + "\n";
  std::string merged = part1 + part2.substr(header.size());
  sb.check("resume_rows_match", merged == straight);

  // checkpoint round-trip is bit-exact
  Checkpoint before = load_checkpoint((root / "a" / "checkpoint.txt").string());
  save_checkpoint(before, (root / "roundtrip.txt").string());
  Checkpoint after = load_checkpoint((root / "roundtrip.txt").string());
  bool same = before.step == after.step && before.seed == after.seed &&
              before.sched.t == after.sched.t && before.sched.pi_t == after.sched.pi_t &&
              before.sched.cumulative_eta == after.sched.cumulative_eta &&
              bitwise_equal(before.w_star, after.w_star) &&
              bitwise_equal(before.w_quant, after.w_quant);
  sb.check("checkpoint_roundtrip_bit_exact", same);
  return sb.finish();
}

// ------------------------------------------------------------- extra suites

SuiteResult suite_combinators(const VerifyOptions&) {
  SuiteBuilder sb("combinators");
  // averaged map equals the weighted sum of member maps exactly
  QuantizerSpec avg = QuantizerSpec::average({{0.25, QuantizerSpec::identity()},
                                              {0.75, QuantizerSpec::projector(ternary_grid())}});
  double worst = 0.0;
  for (double w : linspace(-2.0, 2.0, 2001)) {
    double lhs = apply_scalar(avg, w, 1.0, 0);
    double rhs = 0.25 * w + 0.75 * project(ternary_grid(), w);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  sb.check_le("average_exact", worst, 0.0);

  // averaged map of valid quantizers stays a proximal map
  AxiomReport rep = check_prox_axioms(avg, linspace(-2.0, 2.0, 4001));
  sb.check("average_monotone", rep.pass());

  // product map applies members to their groups
  WeightGroups w;
  w.add("a", {0.6, -0.2});
  w.add("b", {0.6, -0.2});
  QuantizerSpec prod = QuantizerSpec::per_group(
      {{"a", QuantizerSpec::projector(binary_grid())}, {"b", QuantizerSpec::identity()}});
  WeightGroups out = apply(prod, w, 1.0, 0);
  sb.check("product_map", out.values[0][0] == 1.0 && out.values[0][1] == -1.0 &&
                              out.values[1][0] == 0.6 && out.values[1][1] == -0.2);

  // seeded random selection is reproducible and draw-addressed
  QuantizerSpec rsel = QuantizerSpec::random_select(
      {QuantizerSpec::projector(binary_grid()), QuantizerSpec::identity()}, 99);
  bool reproducible = true;
  for (std::uint64_t draw = 0; draw < 64; ++draw)
    reproducible &= apply_scalar(rsel, 0.3, 1.0, draw) == apply_scalar(rsel, 0.3, 1.0, draw);
  bool varies = false;
  for (std::uint64_t draw = 1; draw < 64; ++draw)
    varies |= apply_scalar(rsel, 0.3, 1.0, draw) != apply_scalar(rsel, 0.3, 1.0, 0);
  sb.check("random_select_seeded", reproducible && varies);
  return sb.finish();
}

SuiteResult suite_schedules(const VerifyOptions&) {
  SuiteBuilder sb("schedules");
  for (auto sched : {StepSchedule::constant_eta(0.3), StepSchedule::polynomial_eta(0.5, 0.5),
                     StepSchedule::gcg_lambda_inv_t(), StepSchedule::gcg_lambda_two_over()}) {
    ScheduleState st = ScheduleState::initial();
    double worst = 0.0;
    double prev_pi = st.pi_t;
    bool decreasing = true;
    for (int t = 1; t <= 2000; ++t) {
      st = advance(st, sched);
      double lhs = 1.0 / st.pi_t;
      double rhs = 1.0 + st.cumulative_eta;
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
      double lam = st.eta_t / (1.0 + st.cumulative_eta);
      worst = std::max(worst, std::abs(lam - st.lambda_t));
      if (st.eta_t > 0.0 && st.pi_t >= prev_pi) decreasing = false;
      prev_pi = st.pi_t;
    }
    sb.check_le("identity_" + to_string(sched.kind), worst, 1e-12);
    sb.check("pi_decreasing_" + to_string(sched.kind), decreasing);
  }

  // ergodic weights: lambda_t = 1/(t+1) makes eta_tau constant, so the
  // averaging weights are uniform over the stepped iterates
  {
    StepSchedule sched = StepSchedule::gcg_lambda_inv_t();
    ScheduleState st = ScheduleState::initial();
    double worst = 0.0;
    for (int t = 1; t <= 100; ++t) {
      st = advance(st, sched);
      worst = std::max(worst, std::abs(st.eta_t - 1.0));
    }
    sb.check_le("inv_t_uniform_weights", worst, 1e-12);
  }
  // lambda_t = 2/(t+2): pi_t = 2/((t+1)(t+2)); with the lambda_0 = 1
  // convention the total weight H_t is (t+1)(t+2)/2
  {
    StepSchedule sched = StepSchedule::gcg_lambda_two_over();
    ScheduleState st = ScheduleState::initial();
    double worst_pi = 0.0, worst_h = 0.0;
    for (int t = 1; t <= 200; ++t) {
      st = advance(st, sched);
      double pi_expect = 2.0 / (static_cast<double>(t + 1) * static_cast<double>(t + 2));
      worst_pi = std::max(worst_pi, std::abs(st.pi_t - pi_expect) / pi_expect);
      // with lambda_0 = 1 the tau = 0 term contributes 1
      double h_total = 1.0 + st.cumulative_eta;
      double h_expect = 0.5 * static_cast<double>(t + 1) * static_cast<double>(t + 2);
      worst_h = std::max(worst_h, std::abs(h_total - h_expect) / h_expect);
    }
    sb.check_le("two_over_pi", worst_pi, 1e-12);
    sb.check_le("two_over_H", worst_h, 1e-12);
  }
  return sb.finish();
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"axioms",        "special_cases", "telescoping",   "moreau_identities",
          "da_equivalence", "projector_containment", "dichotomy", "bounds_matrix",
          "rates",         "desk_reproduction", "persistence", "combinators",
          "schedules"};
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& opts) {
  if (name == "axioms") return suite_axioms(opts);
  if (name == "special_cases") return suite_special_cases(opts);
  if (name == "telescoping") return suite_telescoping(opts);
  if (name == "moreau_identities") return suite_moreau_identities(opts);
  if (name == "da_equivalence") return suite_equivalence_chain(opts);
  if (name == "projector_containment") return suite_projector_containment(opts);
  if (name == "dichotomy") return suite_dichotomy(opts);
  if (name == "bounds_matrix") return suite_bounds_matrix(opts);
  if (name == "rates") return suite_rates(opts);
  if (name == "desk_reproduction") return suite_desk_reproduction(opts);
  if (name == "persistence") return suite_persistence(opts);
  if (name == "combinators") return suite_combinators(opts);
  if (name == "schedules") return suite_schedules(opts);
  std::string known;
  for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown suite '" + name + "'; available: " + known);
}

std::vector<SuiteResult> run_all_suites(const VerifyOptions& opts) {
  std::vector<SuiteResult> out;
  for (const auto& n : suite_names()) out.push_back(run_suite(n, opts));
  return out;
}

}  // namespace proxkit
