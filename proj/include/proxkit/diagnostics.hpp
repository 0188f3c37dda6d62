#pragma once

#include <array>
#include <functional>
#include <vector>

#include "proxkit/forms.hpp"
#include "proxkit/optimizer.hpp"
#include "proxkit/problems.hpp"

namespace proxkit {

struct BoundReport {
  double lhs = 0.0, rhs = 0.0;
  double delta_pre = 0.0;    // Delta_{s-1}(w)
  double delta_end = 0.0;    // -Delta_t(w)
  double delta_sum = 0.0;    // sum Delta_tau(w_tau)
  double grad_energy = 0.0;  // sum (eta^2/2)|grad|^2
  double drift = 0.0;        // general-mu correction term
  long s = 0, t = 0;
  bool mu_drift_monotone = true;

  double scale() const;
  bool holds(double rel_tol = 1e-9) const { return lhs <= rhs + rel_tol * scale(); }
};

// Bregman divergence Delta_tau(w) induced by r_tau(v) = r(v)/pi + (mu_next/(2 pi)) |v|^2
// at base point w_next with gradient w_star_next.
double bregman_delta(const RegularizerForm& form, double pi_tau, double mu_next,
                     const WeightGroups& w, const WeightGroups& w_next,
                     const WeightGroups& w_star_next);

// PC coupling mu_{tau+1} = pi_tau.
double bregman_delta(const RegularizerForm& form, double pi_tau, const WeightGroups& w,
                     const WeightGroups& w_next, const WeightGroups& w_star_next);

struct TelescopingResult {
  double residual = 0.0;
  double scale = 1.0;
  double relative() const { return residual / scale; }
};

// Exact telescoping identity for iterates sw*_{t+1} = sw*_t + eta_t z*_t:
// the weighted gap sum over [s, t] equals delta_{s-1}(w) - delta_t(w) +
// sum delta_tau(w_tau). w_seq must supply w_0..w_{t+1}.
TelescopingResult telescoping_residual(const std::vector<double>& eta,
                                const std::vector<std::vector<double>>& z_star,
                                const std::vector<std::vector<double>>& w_seq,
                                const std::function<double(const std::vector<double>&)>& g,
                                const std::vector<double>& w, long s, long t,
                                const std::vector<double>& w_star0);

// Both sides of the window bound for a PC trajectory paired with its form.
BoundReport window_bound_check(const Trajectory& traj, const RegularizerForm& form,
                        const WeightGroups& w, long s, long t);

// General-mu variant with the drift correction; reduces to window_bound_check when
// the trajectory was produced with the standard coupling.
BoundReport window_bound_check_general_mu(const Trajectory& traj, const RegularizerForm& form,
                        const WeightGroups& w, long s, long t);

// Termwise Delta_tau(w_tau) <= pi eta^2 / (2 (sigma0 + mu_next)) |grad|^2 for
// strongly convex forms; returns the worst violation (<= 0 means all hold).
double termwise_bregman_excess(const Trajectory& traj, const RegularizerForm& form, long s, long t);

// Three reports: min-iterate gap against the Bregman right-hand side
// (general r), and min-iterate / averaged-iterate gaps against the
// gradient-energy right-hand side (convex r).
std::array<BoundReport, 3> convex_window_bounds(const Trajectory& traj, const Problem& problem,
                                      const RegularizerForm& form, const WeightGroups& w,
                                      long s, long t);

// Full-batch composite objective f = loss + r.
double composite_value(const Problem& problem, const RegularizerForm& form,
                       const WeightGroups& w);

// Default comparison point: optimum of the continuous problem (analytic for
// quadratics, gradient descent otherwise), hard-projected when the form
// carries a grid.
WeightGroups comparison_point(const Problem& problem, const RegularizerForm& form);

}  // namespace proxkit
