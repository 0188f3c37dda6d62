#include "proxkit/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proxkit/rng.hpp"

namespace proxkit {

namespace {

double sign_tie_upper(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

double plq_apply(const QuantizationGrid& g, double rho, double varrho, bool clip,
                 MidpointPolicy policy, double w) {
  if (!std::isfinite(w)) throw std::invalid_argument("non-finite input to quantizer");
  if (rho < 0.0 || varrho < 0.0) throw std::invalid_argument("negative shift");
  const auto& q = g.levels;
  const auto& p = g.midpoints;

  if (w <= q.front()) {
    if (clip || w == q.front()) return q.front();
    if (w >= q.front() - rho) return q.front();
    // extend the first rising piece below the outer plateau
    double q1_plus = std::min(p.front(), q.front() + rho);
    double p2_minus = std::max(q.front(), p.front() - varrho);
    double denom = p.front() - q1_plus;
    if (denom <= 0.0) return q.front();
    return q.front() + (w - (q.front() - rho)) * (p2_minus - q.front()) / denom;
  }
  if (w >= q.back()) {
    if (clip || w == q.back()) return q.back();
    if (w <= q.back() + rho) return q.back();
    // extend the last rising piece above the outer plateau
    double qb_minus = std::max(p.back(), q.back() - rho);
    double pb_plus = std::min(q.back(), p.back() + varrho);
    double denom = qb_minus - p.back();
    if (denom <= 0.0) return q.back();
    return q.back() + (w - (q.back() + rho)) * (q.back() - pb_plus) / denom;
  }

  // interior cell: q[k] <= w <= q[k+1]
  std::size_t k = static_cast<std::size_t>(
      std::upper_bound(q.begin(), q.end(), w) - q.begin());
  if (k > 0) --k;
  if (k + 1 >= q.size()) k = q.size() - 2;
  const double qk = q[k], qk1 = q[k + 1], pm = p[k];

  const double qk_plus = std::min(pm, qk + rho);
  const double qk1_minus = std::max(pm, qk1 - rho);
  const double pm_minus = std::max(qk, pm - varrho);
  const double pm_plus = std::min(qk1, pm + varrho);

  if (w == pm)
    return policy == MidpointPolicy::Upper ? pm_plus : pm_minus;
  if (w < pm) {
    if (w <= qk_plus) return qk;
    return qk + (w - qk_plus) * (pm_minus - qk) / (pm - qk_plus);
  }
  if (w >= qk1_minus) return qk1;
  return pm_plus + (w - pm) * (qk1 - pm_plus) / (qk1_minus - pm);
}

double soft_sign_map(double epsilon, double mu, double w) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("soft_sign: epsilon must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("soft_sign: mu must be positive");
  if (!std::isfinite(w)) throw std::invalid_argument("non-finite input to quantizer");
  w = std::clamp(w, -1.0, 1.0);
  double inv_mu = 1.0 / mu;
  return sign_tie_upper(w) * (epsilon * std::abs(w) + inv_mu) / (epsilon + inv_mu);
}

QuantizerSpec QuantizerSpec::identity() { return QuantizerSpec{}; }

QuantizerSpec QuantizerSpec::projector(QuantizationGrid grid) {
  QuantizerSpec s;
  s.kind = Kind::Projector;
  s.grid = std::move(grid);
  return s;
}

QuantizerSpec QuantizerSpec::piecewise_linear(QuantizationGrid grid, double rho, double varrho,
                                              bool clip, MidpointPolicy policy) {
  QuantizerSpec s;
  s.kind = Kind::PiecewiseLinear;
  s.grid = std::move(grid);
  s.rho = rho;
  s.varrho = varrho;
  s.clip = clip;
  s.midpoint_policy = policy;
  return s;
}

QuantizerSpec QuantizerSpec::binary_relax(QuantizationGrid grid, double mu) {
  QuantizerSpec s;
  s.kind = Kind::BinaryRelax;
  s.grid = std::move(grid);
  s.mu = mu;
  return s;
}

QuantizerSpec QuantizerSpec::soft_sign(double epsilon, double mu) {
  QuantizerSpec s;
  s.kind = Kind::SoftSign;
  s.epsilon = epsilon;
  s.mu = mu;
  return s;
}

QuantizerSpec QuantizerSpec::average(std::vector<std::pair<double, QuantizerSpec>> terms) {
  QuantizerSpec s;
  s.kind = Kind::Average;
  for (auto& [a, child] : terms) {
    s.average_weights.push_back(a);
    s.children.push_back(std::move(child));
  }
  s.validate();
  return s;
}

QuantizerSpec QuantizerSpec::per_group(std::vector<std::pair<std::string, QuantizerSpec>> members) {
  QuantizerSpec s;
  s.kind = Kind::PerGroup;
  for (auto& [name, child] : members) {
    s.group_names.push_back(name);
    s.children.push_back(std::move(child));
  }
  return s;
}

QuantizerSpec QuantizerSpec::random_select(std::vector<QuantizerSpec> choices, std::uint64_t seed) {
  QuantizerSpec s;
  s.kind = Kind::RandomSelect;
  s.children = std::move(choices);
  s.select_seed = seed;
  if (s.children.empty()) throw std::invalid_argument("random_select: no choices");
  return s;
}

void QuantizerSpec::validate() const {
  if (kind == Kind::Average) {
    if (average_weights.size() != children.size() || children.empty())
      throw std::invalid_argument("average: weights and children mismatch");
    double sum = 0.0;
    for (double a : average_weights) {
      if (a < 0.0) throw std::invalid_argument("average: negative weight");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("average: weights must sum to 1");
  }
  for (const auto& c : children) c.validate();
}

double apply_scalar(const QuantizerSpec& spec, double w, double s, std::uint64_t draw) {
  if (!std::isfinite(w)) throw std::invalid_argument("non-finite input to quantizer");
  switch (spec.kind) {
    case QuantizerSpec::Kind::Identity:
      return w;
    case QuantizerSpec::Kind::Projector:
      return project(spec.grid, w);
    case QuantizerSpec::Kind::PiecewiseLinear:
      return plq_apply(spec.grid, spec.rho * s, spec.varrho * s, spec.clip,
                       spec.midpoint_policy, w);
    case QuantizerSpec::Kind::BinaryRelax: {
      double m = spec.mu * s;
      return (w + m * project(spec.grid, w)) / (1.0 + m);
    }
    case QuantizerSpec::Kind::SoftSign: {
      // the stored mu is the fixed smoothing at sharpness 1
      double inv = s / spec.mu;
      if (!(inv > 0.0)) throw std::invalid_argument("soft_sign: nonpositive sharpness");
      return soft_sign_map(spec.epsilon, 1.0 / inv, w);
    }
    case QuantizerSpec::Kind::Average: {
      double out = 0.0;
      for (std::size_t i = 0; i < spec.children.size(); ++i)
        out += spec.average_weights[i] * apply_scalar(spec.children[i], w, s, draw);
      return out;
    }
    case QuantizerSpec::Kind::RandomSelect: {
      RngStream stream(spec.select_seed, "quantizer_select");
      std::size_t i = static_cast<std::size_t>(stream.index(draw, spec.children.size()));
      return apply_scalar(spec.children[i], w, s, draw);
    }
    case QuantizerSpec::Kind::PerGroup:
      throw std::invalid_argument("per_group spec is not univariate");
  }
  throw std::logic_error("unreachable");
}

WeightGroups apply(const QuantizerSpec& spec, const WeightGroups& w, double s,
                   std::uint64_t draw) {
  WeightGroups out = w;
  if (spec.kind == QuantizerSpec::Kind::PerGroup) {
    if (spec.group_names.size() != w.group_count())
      throw std::invalid_argument("per_group: group count mismatch");
    for (std::size_t g = 0; g < w.group_count(); ++g) {
      bool found = false;
      for (std::size_t m = 0; m < spec.group_names.size(); ++m) {
        if (spec.group_names[m] == w.names[g]) {
          for (double& x : out.values[g]) x = apply_scalar(spec.children[m], x, s, draw);
          found = true;
          break;
        }
      }
      if (!found) throw std::invalid_argument("per_group: no spec for group " + w.names[g]);
    }
    return out;
  }
  for (auto& v : out.values)
    for (double& x : v) x = apply_scalar(spec, x, s, draw);
  return out;
}

Quantizer Quantizer::from_spec(QuantizerSpec spec) {
  spec.validate();
  Quantizer q;
  q.spec_ = std::make_shared<const QuantizerSpec>(std::move(spec));
  q.sharpness_invariant_ = (q.spec_->kind == QuantizerSpec::Kind::Identity ||
                            q.spec_->kind == QuantizerSpec::Kind::Projector);
  switch (q.spec_->kind) {
    case QuantizerSpec::Kind::Identity: q.label_ = "identity"; break;
    case QuantizerSpec::Kind::Projector: q.label_ = "projector"; break;
    case QuantizerSpec::Kind::PiecewiseLinear: q.label_ = "piecewise_linear"; break;
    case QuantizerSpec::Kind::BinaryRelax: q.label_ = "binary_relax"; break;
    case QuantizerSpec::Kind::SoftSign: q.label_ = "soft_sign"; break;
    case QuantizerSpec::Kind::Average: q.label_ = "average"; break;
    case QuantizerSpec::Kind::PerGroup: q.label_ = "per_group"; break;
    case QuantizerSpec::Kind::RandomSelect: q.label_ = "random_select"; break;
  }
  return q;
}

Quantizer Quantizer::from_scalar_prox(std::string label,
                                      std::function<double(double, double)> prox,
                                      std::optional<QuantizationGrid> hard) {
  Quantizer q;
  q.prox_ = std::move(prox);
  q.prox_hard_ = std::move(hard);
  q.label_ = std::move(label);
  return q;
}

WeightGroups Quantizer::operator()(const WeightGroups& w, double sharpness,
                                   std::uint64_t draw) const {
  if (!all_finite(w)) throw std::invalid_argument("non-finite weights");
  if (spec_) return apply(*spec_, w, sharpness, draw);
  WeightGroups out = w;
  for (auto& v : out.values)
    for (double& x : v) x = prox_(x, sharpness);
  return out;
}

double Quantizer::scalar(double x, double sharpness, std::uint64_t draw) const {
  if (spec_) return apply_scalar(*spec_, x, sharpness, draw);
  return prox_(x, sharpness);
}

namespace {

std::optional<QuantizationGrid> spec_hard_grid(const QuantizerSpec& spec,
                                               const std::string& group) {
  switch (spec.kind) {
    case QuantizerSpec::Kind::Identity:
      return std::nullopt;
    case QuantizerSpec::Kind::Projector:
    case QuantizerSpec::Kind::PiecewiseLinear:
    case QuantizerSpec::Kind::BinaryRelax:
      return spec.grid;
    case QuantizerSpec::Kind::SoftSign:
      return binary_grid();
    case QuantizerSpec::Kind::Average:
    case QuantizerSpec::Kind::RandomSelect:
      for (const auto& c : spec.children)
        if (auto g = spec_hard_grid(c, group)) return g;
      return std::nullopt;
    case QuantizerSpec::Kind::PerGroup:
      for (std::size_t m = 0; m < spec.group_names.size(); ++m)
        if (spec.group_names[m] == group) return spec_hard_grid(spec.children[m], group);
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<QuantizationGrid> Quantizer::hard_grid(const std::string& group) const {
  if (spec_) return spec_hard_grid(*spec_, group);
  return prox_hard_;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

AxiomReport check_prox_axioms(const std::function<double(double)>& map,
                              const std::vector<double>& probes) {
  AxiomReport rep;
  std::vector<double> xs = probes;
  std::sort(xs.begin(), xs.end());
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = map(xs[i]);
    if (!std::isfinite(ys[i])) rep.values_finite = false;
  }
  const double tol = 1e-12;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double gap = ys[i] - ys[i + 1];
    if (gap > tol) {
      ++rep.monotonicity_violations;
      rep.worst_violation = std::max(rep.worst_violation, gap);
    }
  }
  if (!rep.values_finite) return rep;

  // closed-graph surrogate: at each detected jump, the value must attain one
  // of the one-sided limits
  double span = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) span = std::max(span, xs[i + 1] - xs[i]);
  const double jump_threshold = std::max(100.0 * span, 1e-6);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (std::abs(ys[i + 1] - ys[i]) <= jump_threshold) continue;
    ++rep.jump_count;
    // bisect for the jump location
    double lo = xs[i], hi = xs[i + 1];
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
      double mid = 0.5 * (lo + hi);
      if (std::abs(map(mid) - ys[i]) < std::abs(map(mid) - ys[i + 1]))
        lo = mid;
      else
        hi = mid;
    }
    double x_jump = 0.5 * (lo + hi);
    double left = map(x_jump - 1e-9);
    double right = map(x_jump + 1e-9);
    double at = map(x_jump);
    if (std::abs(at - left) > 1e-6 && std::abs(at - right) > 1e-6) ++rep.unattained_jumps;
  }
  return rep;
}

AxiomReport check_prox_axioms(const QuantizerSpec& spec, const std::vector<double>& probes,
                              double sharpness) {
  return check_prox_axioms(
      [&](double x) { return apply_scalar(spec, x, sharpness, 0); }, probes);
}

}  // namespace proxkit
