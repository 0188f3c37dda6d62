#include "proxkit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace proxkit {

double BoundReport::scale() const {
  double m = 1.0;
  for (double v : {lhs, rhs, delta_pre, delta_end, delta_sum, grad_energy, drift})
    m = std::max(m, std::abs(v));
  return m;
}

namespace {

double r_tau_value(const RegularizerForm& form, double pi_tau, double mu_next,
                   const WeightGroups& w) {
  return form.value(w) / pi_tau + 0.5 * (mu_next / pi_tau) * sq_norm(w);
}

struct TrajView {
  const Trajectory* traj;

  const Snapshot& snap(long tau) const { return traj->snaps[static_cast<std::size_t>(tau)]; }
  const WeightGroups& w_quant(long tau) const {
    if (tau <= traj->steps()) return snap(tau).w_quant;
    return traj->tail_w_quant;
  }
  const WeightGroups& w_star(long tau) const {
    if (tau <= traj->steps()) return snap(tau).w_star;
    return traj->tail_w_star;
  }
  double mu(long tau) const {
    if (tau <= traj->steps()) return snap(tau).mu;
    return traj->tail_mu;
  }
};

}  // namespace

double bregman_delta(const RegularizerForm& form, double pi_tau, double mu_next,
                     const WeightGroups& w, const WeightGroups& w_next,
                     const WeightGroups& w_star_next) {
  WeightGroups diff = w;
  axpy_inplace(-1.0, w_next, diff);
  return r_tau_value(form, pi_tau, mu_next, w) - r_tau_value(form, pi_tau, mu_next, w_next) -
         dot(diff, w_star_next);
}

double bregman_delta(const RegularizerForm& form, double pi_tau, const WeightGroups& w,
                     const WeightGroups& w_next, const WeightGroups& w_star_next) {
  return bregman_delta(form, pi_tau, pi_tau, w, w_next, w_star_next);
}

TelescopingResult telescoping_residual(const std::vector<double>& eta,
                                const std::vector<std::vector<double>>& z_star,
                                const std::vector<std::vector<double>>& w_seq,
                                const std::function<double(const std::vector<double>&)>& g,
                                const std::vector<double>& w, long s, long t,
                                const std::vector<double>& w_star0) {
  if (s > t) return {0.0, 1.0};
  if (s < 0 || static_cast<std::size_t>(t) >= eta.size() || z_star.size() != eta.size())
    throw std::invalid_argument("lemma_a1: inconsistent sequence lengths");
  if (w_seq.size() < static_cast<std::size_t>(t) + 2)
    throw std::invalid_argument("lemma_a1: w sequence must reach index t+1");

  const std::size_t dim = w.size();
  const std::size_t T = static_cast<std::size_t>(t);

  // running sw*_{tau+1} = sw*_tau + eta_tau z*_tau
  std::vector<std::vector<double>> sw(T + 2, w_star0);
  for (std::size_t tau = 0; tau <= T; ++tau) {
    sw[tau + 1] = sw[tau];
    for (std::size_t i = 0; i < dim; ++i) sw[tau + 1][i] += eta[tau] * z_star[tau][i];
  }

  // 1/pi_tau = 1 + sum_{1..tau} eta; extended to tau = -1 as 1 - eta_0
  std::vector<double> inv_pi(T + 1, 1.0);
  for (std::size_t tau = 1; tau <= T; ++tau) inv_pi[tau] = inv_pi[tau - 1] + eta[tau];
  auto inv_pi_at = [&](long tau) {
    if (tau >= 0) return inv_pi[static_cast<std::size_t>(tau)];
    return 1.0 - eta[0];
  };

  auto delta = [&](long tau, const std::vector<double>& x) {
    double ip = inv_pi_at(tau);
    const std::vector<double>& wn = w_seq[static_cast<std::size_t>(tau) + 1];
    const std::vector<double>& swn = sw[static_cast<std::size_t>(tau) + 1];
    NeumaierSum inner;
    for (std::size_t i = 0; i < dim; ++i) inner.add((x[i] - wn[i]) * swn[i]);
    return ip * g(x) - ip * g(wn) - inner.value();
  };

  NeumaierSum lhs, scale;
  for (long tau = s; tau <= t; ++tau) {
    const auto& wt = w_seq[static_cast<std::size_t>(tau)];
    NeumaierSum inner;
    for (std::size_t i = 0; i < dim; ++i) inner.add((wt[i] - w[i]) * -z_star[static_cast<std::size_t>(tau)][i]);
    double term = eta[static_cast<std::size_t>(tau)] * (inner.value() + g(wt) - g(w));
    lhs.add(term);
    scale.add(std::abs(term));
  }
  NeumaierSum rhs;
  rhs.add(delta(s - 1, w));
  rhs.add(-delta(t, w));
  for (long tau = s; tau <= t; ++tau) rhs.add(delta(tau, w_seq[static_cast<std::size_t>(tau)]));

  TelescopingResult res;
  res.residual = std::abs(lhs.value() - rhs.value());
  res.scale = std::max({1.0, scale.value(), std::abs(rhs.value())});
  return res;
}

namespace {

BoundReport window_bound(const Trajectory& traj, const RegularizerForm& form,
                         const WeightGroups& w, long s, long t, bool general_mu) {
  if (s < 1) throw std::invalid_argument("bound window must start at s >= 1");
  if (t > traj.steps()) throw std::invalid_argument("bound window end beyond trajectory");
  // the Bregman terms are only meaningful against the trajectory's own prox
  if (traj.quantizer_label != "prox_" + form.name())
    throw std::invalid_argument("trajectory quantizer '" + traj.quantizer_label +
                                "' does not match form '" + form.name() + "'");
  BoundReport rep;
  rep.s = s;
  rep.t = t;
  if (s > t) return rep;

  TrajView v{&traj};
  const double r_w = form.value(w);
  const double w_sq = sq_norm(w);

  NeumaierSum lhs;
  for (long tau = s; tau <= t; ++tau) {
    const Snapshot& sn = v.snap(tau);
    WeightGroups diff = sn.w_quant;
    axpy_inplace(-1.0, w, diff);
    lhs.add(sn.eta * (dot(diff, sn.grad) + form.value(sn.w_quant) - r_w));
  }
  rep.lhs = lhs.value();

  auto mu_next = [&](long tau) {
    return general_mu ? v.mu(tau + 1) : v.snap(tau).pi;
  };

  rep.delta_pre = bregman_delta(form, v.snap(s - 1).pi, mu_next(s - 1), w, v.w_quant(s),
                                v.w_star(s));
  rep.delta_end = -bregman_delta(form, v.snap(t).pi, mu_next(t), w, v.w_quant(t + 1),
                                 v.w_star(t + 1));
  NeumaierSum dsum;
  for (long tau = s; tau <= t; ++tau)
    dsum.add(bregman_delta(form, v.snap(tau).pi, mu_next(tau), v.snap(tau).w_quant,
                           v.w_quant(tau + 1), v.w_star(tau + 1)));
  rep.delta_sum = dsum.value();

  if (general_mu) {
    NeumaierSum drift;
    double prev_ratio = -1.0;
    for (long tau = s; tau <= t; ++tau) {
      double ratio_next = v.mu(tau + 1) / v.snap(tau).pi;
      double ratio_cur = v.mu(tau) / v.snap(tau - 1).pi;
      drift.add(0.5 * (ratio_next - ratio_cur) * (w_sq - sq_norm(v.snap(tau).w_quant)));
      if (prev_ratio >= 0.0 && ratio_cur < prev_ratio - 1e-12) rep.mu_drift_monotone = false;
      prev_ratio = ratio_cur;
    }
    rep.drift = drift.value();
  }
  rep.rhs = rep.delta_pre + rep.delta_end + rep.delta_sum + rep.drift;
  return rep;
}

}  // namespace

BoundReport window_bound_check(const Trajectory& traj, const RegularizerForm& form,
                        const WeightGroups& w, long s, long t) {
  return window_bound(traj, form, w, s, t, false);
}

BoundReport window_bound_check_general_mu(const Trajectory& traj, const RegularizerForm& form,
                        const WeightGroups& w, long s, long t) {
  return window_bound(traj, form, w, s, t, true);
}

// Delta_tau(w_tau) <= |grad r_tau(w_tau) - w*_{tau+1}|^2 / (2m) with
// m = (sigma0 + mu_{tau+1})/pi_tau, the strong-convexity modulus of r_tau.
// This is the exact Bregman duality bound; the difference grad r_tau(w_tau) -
// w*_{tau+1} expands to eta(grad l + grad r) plus the mu-drift contribution,
// since the prox optimality pins w*_tau to grad r_{tau-1}, not grad r_tau.
double termwise_bregman_excess(const Trajectory& traj, const RegularizerForm& form, long s, long t) {
  if (form.sigma0() <= 0.0)
    throw std::invalid_argument("a58: strongly convex form required");
  TrajView v{&traj};
  double worst = -std::numeric_limits<double>::infinity();
  for (long tau = s; tau <= t; ++tau) {
    const Snapshot& sn = v.snap(tau);
    const double mu_next = v.mu(tau + 1);
    double delta = bregman_delta(form, sn.pi, mu_next, sn.w_quant, v.w_quant(tau + 1),
                                 v.w_star(tau + 1));
    const WeightGroups& ws_next = v.w_star(tau + 1);
    double m = (form.sigma0() + mu_next) / sn.pi;
    NeumaierSum nrm2;
    for (std::size_t g = 0; g < sn.w_quant.group_count(); ++g)
      for (std::size_t i = 0; i < sn.w_quant.values[g].size(); ++i) {
        double wt = sn.w_quant.values[g][i];
        double grad_rtau = form.subgrad(wt) / sn.pi + (mu_next / sn.pi) * wt;
        double d = grad_rtau - ws_next.values[g][i];
        nrm2.add(d * d);
      }
    double bound = nrm2.value() / (2.0 * m);
    worst = std::max(worst, delta - bound);
  }
  return worst;
}

double composite_value(const Problem& problem, const RegularizerForm& form,
                       const WeightGroups& w) {
  return problem.loss(w) + form.value(w);
}

std::array<BoundReport, 3> convex_window_bounds(const Trajectory& traj, const Problem& problem,
                                      const RegularizerForm& form, const WeightGroups& w,
                                      long s, long t) {
  if (!problem.convex()) throw std::invalid_argument("cor52: convex loss required");
  BoundReport base = window_bound_check(traj, form, w, s, t);
  std::array<BoundReport, 3> out{base, base, base};
  if (s > t) return out;

  TrajView v{&traj};
  const double f_cmp = composite_value(problem, form, w);
  double eta_total = 0.0;
  NeumaierSum energy;
  double min_gap = std::numeric_limits<double>::infinity();
  for (long tau = s; tau <= t; ++tau) {
    const Snapshot& sn = v.snap(tau);
    eta_total += sn.eta;
    energy.add(0.5 * sn.eta * sn.eta * sn.grad_norm * sn.grad_norm);
    min_gap = std::min(min_gap, composite_value(problem, form, sn.w_quant) - f_cmp);
  }
  if (eta_total <= 0.0) throw std::invalid_argument("cor52: zero step mass on window");

  // min-iterate gap against the Bregman right-hand side
  out[0].lhs = min_gap;
  out[0].rhs = base.rhs / eta_total;
  out[0].grad_energy = 0.0;

  // min-iterate gap against the gradient-energy right-hand side
  out[1].lhs = min_gap;
  out[1].grad_energy = energy.value();
  out[1].rhs = (base.delta_pre + out[1].grad_energy) / eta_total;

  // averaged-iterate gap
  WeightGroups wbar = ergodic_average(traj, s, t);
  out[2].lhs = composite_value(problem, form, wbar) - f_cmp;
  out[2].grad_energy = energy.value();
  out[2].rhs = (base.delta_pre + out[2].grad_energy) / eta_total;
  return out;
}

WeightGroups comparison_point(const Problem& problem, const RegularizerForm& form) {
  WeightGroups w;
  if (auto opt = problem.analytic_optimum()) {
    w = *opt;
  } else {
    // plain full-batch descent to near-stationarity
    w = problem.initial_weights(12345);
    for (auto& vv : w.values) std::fill(vv.begin(), vv.end(), 0.0);
    for (int it = 0; it < 20000; ++it) {
      WeightGroups g = problem.grad(w);
      if (l2_norm(g) < 1e-10) break;
      axpy_inplace(-0.5, g, w);
    }
  }
  if (auto grid = form.grid()) {
    for (auto& vv : w.values)
      for (double& x : vv) x = project(*grid, x);
  }
  return w;
}

}  // namespace proxkit
