#include "proxkit/gcg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxkit {

SmoothConvexObjective objective_from(const Problem& problem) {
  if (!problem.convex()) throw std::invalid_argument("objective_from: convex problem required");
  SmoothConvexObjective obj;
  WeightGroups probe = problem.initial_weights(0);
  if (probe.group_count() != 1)
    throw std::invalid_argument("objective_from: single-group problem required");
  obj.dim = probe.values[0].size();
  std::string group = probe.names[0];
  obj.value = [problem, group](const std::vector<double>& x) {
    WeightGroups w;
    w.add(group, x);
    return problem.loss(w);
  };
  obj.grad = [problem, group](const std::vector<double>& x) {
    WeightGroups w;
    w.add(group, x);
    return problem.grad(w).values[0];
  };
  return obj;
}

double moreau_value(const ConjugateRegularizer& reg, double mu,
                    const std::vector<double>& w_star) {
  if (mu <= 0.0) throw std::invalid_argument("moreau_value: mu must be positive");
  NeumaierSum s;
  for (double y : w_star) s.add(reg.moreau_conj_value(y, mu));
  return s.value();
}

std::vector<double> moreau_gradient(const ConjugateRegularizer& reg, double mu,
                                    const std::vector<double>& w_star) {
  if (mu <= 0.0) throw std::invalid_argument("moreau_gradient: mu must be positive");
  std::vector<double> g(w_star.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = reg.moreau_conj_grad_prox(w_star[i], mu);
  return g;
}

namespace {

std::vector<double> primal_image(const ConjugateRegularizer& reg, const std::vector<double>& ws,
                                 double mu) {
  std::vector<double> w(ws.size());
  if (mu <= 0.0) {
    if (!std::isfinite(reg.native_smoothness()))
      throw std::invalid_argument("gcg: nonsmooth conjugate requires Moreau smoothing");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = reg.grad_conj(ws[i]);
  } else {
    // envelope-theorem route, (w* - P^mu_{r*}(w*)) / mu
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = reg.moreau_conj_grad_envelope(ws[i], mu);
  }
  return w;
}

}  // namespace

DualIterate gcg_step(const DualIterate& it, double lambda, const SmoothConvexObjective& loss,
                     const ConjugateRegularizer& reg, double mu) {
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("gcg_step: lambda outside [0,1]");
  DualIterate next;
  next.w = primal_image(reg, it.w_star, mu);
  std::vector<double> g = loss.grad(next.w);
  next.z_star.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) next.z_star[i] = -g[i];
  next.w_star.resize(it.w_star.size());
  for (std::size_t i = 0; i < it.w_star.size(); ++i)
    next.w_star[i] = (1.0 - lambda) * it.w_star[i] + lambda * next.z_star[i];
  return next;
}

GcgTrace gcg_run(const SmoothConvexObjective& loss, const ConjugateRegularizer& reg,
                 std::vector<double> w_star0, const GcgOptions& opts) {
  if (opts.steps < 0) throw std::invalid_argument("gcg_run: steps must be nonnegative");
  GcgTrace trace;
  trace.lambda0 = opts.lambda_at(0);
  std::vector<double> ws = std::move(w_star0);
  double pi_prev = opts.time_varying_mu ? 1.0 / (1.0 - trace.lambda0) : 1.0;  // pi_{-1}
  if (opts.time_varying_mu && trace.lambda0 >= 1.0)
    throw std::invalid_argument("gcg_run: lambda_0 = 1 with time-varying smoothing");
  double pi = 1.0;  // pi_0
  for (long t = 0; t <= opts.steps; ++t) {
    double lambda = opts.lambda_at(t);
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("gcg_run: lambda outside [0,1]");
    if (t > 0) {
      if (lambda >= 1.0) throw std::invalid_argument("gcg_run: lambda_t = 1 after t = 0");
      pi_prev = pi;
      pi *= (1.0 - lambda);
    }
    double mu = opts.time_varying_mu ? opts.mu_perturb * pi_prev : opts.mu;

    GcgSnapshot snap;
    snap.t = t;
    snap.lambda = lambda;
    snap.pi = pi;
    snap.mu = mu;
    snap.w_star = ws;
    snap.w = primal_image(reg, ws, mu);
    std::vector<double> g = loss.grad(snap.w);
    snap.z_star.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) snap.z_star[i] = -g[i];
    trace.snaps.push_back(snap);

    if (t == opts.steps) break;
    for (std::size_t i = 0; i < ws.size(); ++i)
      ws[i] = (1.0 - lambda) * ws[i] + lambda * snap.z_star[i];
  }
  return trace;
}

namespace {

double objective_F(const SmoothConvexObjective& loss, const ConjugateRegularizer& reg,
                   const std::vector<double>& w, double mu) {
  NeumaierSum s;
  s.add(loss.value(w));
  for (double x : w) s.add(reg.biconj_value(x) + 0.5 * mu * x * x);
  return s.value();
}

double bregman_R(const ConjugateRegularizer& reg, double mu, const std::vector<double>& w,
                 const std::vector<double>& w0, const std::vector<double>& ws0) {
  NeumaierSum s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double rw = reg.biconj_value(w[i]) + 0.5 * mu * w[i] * w[i];
    double rw0 = reg.biconj_value(w0[i]) + 0.5 * mu * w0[i] * w0[i];
    s.add(rw - rw0 - (w[i] - w0[i]) * ws0[i]);
  }
  return s.value();
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  NeumaierSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - b[i]) * (a[i] - b[i]));
  return s.value();
}

}  // namespace

GcgBound gcg_gap_bound(const GcgTrace& trace, const SmoothConvexObjective& loss,
                          const ConjugateRegularizer& reg, const std::vector<double>& w_cmp) {
  if (trace.snaps.empty()) throw std::invalid_argument("thm41: empty trace");
  const double mu = trace.snaps.front().mu;
  for (const auto& s : trace.snaps)
    if (s.mu != mu) throw std::invalid_argument("thm41: fixed smoothing required");
  const double L = mu > 0.0 ? 1.0 / mu : reg.native_smoothness();
  if (!std::isfinite(L)) throw std::invalid_argument("thm41: conjugate is not smooth");

  GcgBound b;
  const double f_cmp = objective_F(loss, reg, w_cmp, mu);
  NeumaierSum lhs, energy;
  for (const auto& s : trace.snaps) {
    double weight = s.lambda / s.pi;
    lhs.add(weight * (objective_F(loss, reg, s.w, mu) - f_cmp));
    energy.add(0.5 * weight * s.lambda * L * sq_dist(s.w_star, s.z_star));
  }
  const auto& s0 = trace.snaps.front();
  b.delta0 = (1.0 - trace.lambda0) * bregman_R(reg, mu, w_cmp, s0.w, s0.w_star);
  b.energy = energy.value();
  b.lhs = lhs.value();
  b.rhs = b.delta0 + b.energy;
  return b;
}

GcgBound gcg_averaged_gap_bound(const GcgTrace& trace, const SmoothConvexObjective& loss,
                          const ConjugateRegularizer& reg, const std::vector<double>& w_cmp) {
  if (trace.snaps.empty()) throw std::invalid_argument("cor42: empty trace");
  const double mu = trace.snaps.front().mu;
  const double L = mu > 0.0 ? 1.0 / mu : reg.native_smoothness();
  if (!std::isfinite(L)) throw std::invalid_argument("cor42: conjugate is not smooth");

  double H = 0.0;
  std::vector<double> wbar(trace.snaps.front().w.size(), 0.0);
  NeumaierSum energy;
  for (const auto& s : trace.snaps) {
    double weight = s.lambda / s.pi;
    H += weight;
    for (std::size_t i = 0; i < wbar.size(); ++i) wbar[i] += weight * s.w[i];
  }
  if (H <= 0.0) throw std::invalid_argument("cor42: zero total weight");
  for (double& x : wbar) x /= H;
  for (const auto& s : trace.snaps) {
    double lam_weight = s.lambda * (s.lambda / s.pi) / H;
    energy.add(0.5 * L * lam_weight * sq_dist(s.w_star, s.z_star));
  }
  GcgBound b;
  const auto& s0 = trace.snaps.front();
  b.delta0 = (1.0 - trace.lambda0) * bregman_R(reg, mu, w_cmp, s0.w, s0.w_star) / H;
  b.energy = energy.value();
  b.lhs = objective_F(loss, reg, wbar, mu) - objective_F(loss, reg, w_cmp, mu);
  b.rhs = b.delta0 + b.energy;
  return b;
}

std::vector<double> gcg_averaged_gap_series(const GcgTrace& trace, const SmoothConvexObjective& loss,
                                     const ConjugateRegularizer& reg,
                                     const std::vector<double>& w_cmp) {
  const double mu = trace.snaps.front().mu;
  const double f_cmp = objective_F(loss, reg, w_cmp, mu);
  std::vector<double> gaps;
  gaps.reserve(trace.snaps.size());
  double H = 0.0;
  std::vector<double> acc(trace.snaps.front().w.size(), 0.0);
  for (const auto& s : trace.snaps) {
    double weight = s.lambda / s.pi;
    H += weight;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * s.w[i];
    if (H <= 0.0) {
      gaps.push_back(objective_F(loss, reg, s.w, mu) - f_cmp);
      continue;
    }
    std::vector<double> wbar(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) wbar[i] = acc[i] / H;
    gaps.push_back(objective_F(loss, reg, wbar, mu) - f_cmp);
  }
  return gaps;
}

double da_equivalence_check(const SmoothConvexObjective& loss, const ConjugateRegularizer& reg,
                            const std::vector<double>& w_star0,
                            const std::function<double(long)>& lambda_at, long steps,
                            double mu_perturb) {
  const double lambda0 = lambda_at(0);
  if (lambda0 >= 1.0) throw std::invalid_argument("da_equivalence: lambda_0 must be below 1");

  // shared coefficient arrays so the three forms see identical floats
  std::vector<double> lambda(static_cast<std::size_t>(steps) + 1);
  std::vector<double> pi(lambda.size());       // pi_t
  std::vector<double> pi_prev(lambda.size());  // pi_{t-1}
  std::vector<double> eta(lambda.size());
  double p = 1.0, p_prev = 1.0 / (1.0 - lambda0);
  for (long t = 0; t <= steps; ++t) {
    lambda[static_cast<std::size_t>(t)] = lambda_at(t);
    if (t > 0) {
      if (lambda_at(t) >= 1.0) throw std::invalid_argument("da_equivalence: lambda_t = 1");
      p_prev = p;
      p *= (1.0 - lambda_at(t));
    }
    pi[static_cast<std::size_t>(t)] = p;
    pi_prev[static_cast<std::size_t>(t)] = p_prev;
    eta[static_cast<std::size_t>(t)] = lambda_at(t) / p;
  }

  const std::size_t dim = w_star0.size();
  std::vector<double> v = w_star0;                       // (a) raw dual variable
  std::vector<double> sw(dim);                           // (b) rescaled variable
  for (std::size_t i = 0; i < dim; ++i) sw[i] = w_star0[i] * (1.0 - lambda0);
  std::vector<double> wpc = sw;                          // (c) PC variable

  double max_dev = 0.0;
  for (long t = 0; t <= steps; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    const double mu = pi_prev[ti];

    // (a) GCG on the smoothed dual, envelope-theorem gradient
    std::vector<double> wa(dim);
    for (std::size_t i = 0; i < dim; ++i)
      wa[i] = reg.moreau_conj_grad_envelope(v[i], mu_perturb * mu);
    // (b) dual-averaging form, prox of the biconjugate on the rescaled point
    std::vector<double> wb(dim);
    for (std::size_t i = 0; i < dim; ++i)
      wb[i] = reg.prox_biconj(pi_prev[ti] * sw[i] / mu, 1.0 / mu);
    // (c) PC form with the sharpened quantizer
    std::vector<double> wc(dim);
    for (std::size_t i = 0; i < dim; ++i) wc[i] = reg.prox_biconj(wpc[i], 1.0 / mu);

    for (std::size_t i = 0; i < dim; ++i) {
      max_dev = std::max(max_dev, std::abs(wa[i] - wb[i]));
      max_dev = std::max(max_dev, std::abs(wa[i] - wc[i]));
      max_dev = std::max(max_dev, std::abs(wb[i] - wc[i]));
    }
    if (t == steps) break;

    std::vector<double> ga = loss.grad(wa);
    std::vector<double> gb = loss.grad(wb);
    std::vector<double> gc = loss.grad(wc);
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] = (1.0 - lambda[ti]) * v[i] - lambda[ti] * ga[i];
      sw[i] -= eta[ti] * gb[i];
      wpc[i] -= eta[ti] * gc[i];
    }
  }
  return max_dev;
}

double loglog_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
  if (ts.size() != ys.size() || ts.size() < 2)
    throw std::invalid_argument("loglog_slope: need matching series");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0) || !(ys[i] > 0.0)) continue;
    double x = std::log(ts[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("loglog_slope: too few positive points");
  double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace proxkit
