#pragma once

#include <functional>
#include <vector>

#include "proxkit/problems.hpp"
#include "proxkit/regularizers.hpp"
#include "proxkit/schedule.hpp"

namespace proxkit {

// Smooth convex loss adapter for the dual-side algorithms: needs values and
// gradients only (conjugates of the loss never appear explicitly because
// (grad l*)^{-1} = grad l** = grad l for the convex instances used here).
struct SmoothConvexObjective {
  std::function<double(const std::vector<double>&)> value;
  std::function<std::vector<double>(const std::vector<double>&)> grad;
  std::size_t dim = 0;
};

SmoothConvexObjective objective_from(const Problem& problem);

struct DualIterate {
  std::vector<double> w_star;  // dual point
  std::vector<double> w;       // primal image
  std::vector<double> z_star;  // linearization direction
};

struct GcgSnapshot {
  long t = 0;
  double lambda = 0.0, pi = 1.0, mu = 0.0;
  std::vector<double> w_star, w, z_star;
};

struct GcgTrace {
  std::vector<GcgSnapshot> snaps;
  double lambda0 = 0.0;
};

struct GcgOptions {
  long steps = 100;
  std::function<double(long)> lambda_at;  // lambda_t, t >= 0
  // mu = 0: direct path w_t = grad r*(w*_t) (requires smooth r*)
  // mu > 0: Moreau-smoothed path with fixed mu
  // time_varying_mu: mu_t = pi_{t-1}, overrides fixed mu
  double mu = 0.0;
  bool time_varying_mu = false;
  double mu_perturb = 1.0;  // negative-control knob; 1 = exact coupling
};

// One convex-combination step on the dual problem.
DualIterate gcg_step(const DualIterate& it, double lambda, const SmoothConvexObjective& loss,
                     const ConjugateRegularizer& reg, double mu);

GcgTrace gcg_run(const SmoothConvexObjective& loss, const ConjugateRegularizer& reg,
                 std::vector<double> w_star0, const GcgOptions& opts);

// Moreau envelope of r* evaluated coordinatewise on a vector.
double moreau_value(const ConjugateRegularizer& reg, double mu, const std::vector<double>& w_star);
std::vector<double> moreau_gradient(const ConjugateRegularizer& reg, double mu,
                                    const std::vector<double>& w_star);

// Runs (a) GCG on the smoothed dual, (b) the rescaled dual-averaging form,
// (c) the PC form with exact biconjugates, all with mu_t = pi_{t-1}, and
// returns the max pairwise deviation of the primal iterates. mu_perturb != 1
// breaks the coupling in path (a) only (negative control).
double da_equivalence_check(const SmoothConvexObjective& loss, const ConjugateRegularizer& reg,
                            const std::vector<double>& w_star0,
                            const std::function<double(long)>& lambda_at, long steps,
                            double mu_perturb = 1.0);

struct GcgBound {
  double lhs = 0.0, rhs = 0.0;
  double delta0 = 0.0, energy = 0.0;
  bool holds(double tol) const { return lhs <= rhs + tol; }
};

// Both sides of the weighted-suboptimality bound for a GCG trace against a
// comparison point w. L is 1/mu on the smoothed path, the native constant
// otherwise. The objective F is l + r** (+ mu/2 |.|^2 on the smoothed path).
GcgBound gcg_gap_bound(const GcgTrace& trace, const SmoothConvexObjective& loss,
                          const ConjugateRegularizer& reg, const std::vector<double>& w_cmp);

// Averaged-iterate gap bound; also returns the series of averaged gaps for
// rate fitting.
GcgBound gcg_averaged_gap_bound(const GcgTrace& trace, const SmoothConvexObjective& loss,
                          const ConjugateRegularizer& reg, const std::vector<double>& w_cmp);
std::vector<double> gcg_averaged_gap_series(const GcgTrace& trace, const SmoothConvexObjective& loss,
                                     const ConjugateRegularizer& reg,
                                     const std::vector<double>& w_cmp);

// Least-squares slope of log(y) against log(t) over the index window.
double loglog_slope(const std::vector<double>& ts, const std::vector<double>& ys);

}  // namespace proxkit
