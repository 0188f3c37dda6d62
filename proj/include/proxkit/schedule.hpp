#pragma once

#include <string>
#include <vector>

namespace proxkit {

// Coupled step-size sequences. The state tracks eta_t, lambda_t, pi_t, mu_t
// with the reparameterization identities
//
//   1/pi_t = 1 + sum_{tau=1..t} eta_tau,   lambda_t = eta_t * pi_t,
//
// maintained exactly: pi is recomputed from the cumulative sum each step.
// By convention lambda_0 = eta_0 = 0: step 0 is the initial snapshot and
// gradient updates start at t = 1, so pi_{-1} = 1 and the quantizer
// sharpness 1/pi_{t-1} starts at 1.
struct StepSchedule {
  enum class Kind { ConstantEta, PolynomialEta, GcgLambdaInvT, GcgLambdaTwoOver, Explicit };

  Kind kind = Kind::ConstantEta;
  double eta0 = 0.1;
  double p = 0.5;                     // PolynomialEta exponent, in [0, 1/2]
  std::vector<double> explicit_etas;  // Explicit, indexed by t-1

  double rho0 = 0.0;  // sharpness ramp base
  double B = 100.0;   // sharpness doubling horizon (steps)

  static StepSchedule constant_eta(double eta0);
  static StepSchedule polynomial_eta(double eta0, double p);
  static StepSchedule gcg_lambda_inv_t();
  static StepSchedule gcg_lambda_two_over();
  static StepSchedule explicit_etas_of(std::vector<double> etas);

  void validate() const;
};

struct ScheduleState {
  long t = 0;
  double eta_t = 0.0;
  double lambda_t = 0.0;
  double pi_t = 1.0;
  double mu_t = 1.0;  // pi_{t-1}, the default smoothing coupling
  double cumulative_eta = 0.0;

  // quantizer sharpness for the step at this t, i.e. 1/pi_{t-1}
  double sharpness() const { return 1.0 / mu_t; }

  static ScheduleState initial() { return ScheduleState{}; }
};

ScheduleState advance(const ScheduleState& state, const StepSchedule& schedule);

// Linear ramp rho_t = (1 + t/B) * rho0, applied per gradient step.
double rho_at(const StepSchedule& schedule, long t);

// Recommended smoothing mu_{t+1}: c*sqrt(lambda_t) when sigma0 = 0,
// c*lambda_t when sigma0 > 0.
double mu_rate_for(double sigma0, double lambda_t, double c);

std::string to_string(StepSchedule::Kind kind);

}  // namespace proxkit
