#include "proxkit/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace proxkit {

StepSchedule StepSchedule::constant_eta(double eta0) {
  StepSchedule s;
  s.kind = Kind::ConstantEta;
  s.eta0 = eta0;
  s.validate();
  return s;
}

StepSchedule StepSchedule::polynomial_eta(double eta0, double p) {
  StepSchedule s;
  s.kind = Kind::PolynomialEta;
  s.eta0 = eta0;
  s.p = p;
  s.validate();
  return s;
}

StepSchedule StepSchedule::gcg_lambda_inv_t() {
  StepSchedule s;
  s.kind = Kind::GcgLambdaInvT;
  return s;
}

StepSchedule StepSchedule::gcg_lambda_two_over() {
  StepSchedule s;
  s.kind = Kind::GcgLambdaTwoOver;
  return s;
}

StepSchedule StepSchedule::explicit_etas_of(std::vector<double> etas) {
  StepSchedule s;
  s.kind = Kind::Explicit;
  s.explicit_etas = std::move(etas);
  s.validate();
  return s;
}

void StepSchedule::validate() const {
  if (kind == Kind::ConstantEta || kind == Kind::PolynomialEta) {
    if (eta0 < 0.0) throw std::invalid_argument("schedule: eta0 must be nonnegative");
  }
  if (kind == Kind::PolynomialEta) {
    if (p < 0.0 || p > 0.5) throw std::invalid_argument("schedule: p must lie in [0, 1/2]");
  }
  if (kind == Kind::Explicit) {
    for (double e : explicit_etas)
      if (e < 0.0) throw std::invalid_argument("schedule: explicit eta must be nonnegative");
  }
}

ScheduleState advance(const ScheduleState& state, const StepSchedule& schedule) {
  ScheduleState next;
  next.t = state.t + 1;
  const long t = next.t;

  double eta = 0.0, lambda = -1.0;
  switch (schedule.kind) {
    case StepSchedule::Kind::ConstantEta:
      eta = schedule.eta0;
      break;
    case StepSchedule::Kind::PolynomialEta:
      eta = schedule.eta0 * std::pow(static_cast<double>(t), -schedule.p);
      break;
    case StepSchedule::Kind::GcgLambdaInvT:
      lambda = 1.0 / static_cast<double>(t + 1);
      break;
    case StepSchedule::Kind::GcgLambdaTwoOver:
      lambda = 2.0 / static_cast<double>(t + 2);
      break;
    case StepSchedule::Kind::Explicit: {
      std::size_t i = static_cast<std::size_t>(t - 1);
      if (i >= schedule.explicit_etas.size())
        throw std::out_of_range("schedule: explicit eta list exhausted");
      eta = schedule.explicit_etas[i];
      break;
    }
  }
  if (lambda >= 0.0) {
    // lambda-driven kinds: eta_t = lambda_t / pi_t with pi_t = pi_{t-1}(1 - lambda_t)
    if (lambda >= 1.0) throw std::invalid_argument("schedule: lambda_t = 1 after t = 0");
    eta = lambda / (state.pi_t * (1.0 - lambda));
  }

  next.eta_t = eta;
  next.cumulative_eta = state.cumulative_eta + eta;
  if (!std::isfinite(next.cumulative_eta))
    throw std::overflow_error("schedule: cumulative eta overflow");
  next.pi_t = 1.0 / (1.0 + next.cumulative_eta);
  next.lambda_t = eta * next.pi_t;
  next.mu_t = state.pi_t;  // mu_t = pi_{t-1}
  return next;
}

double rho_at(const StepSchedule& schedule, long t) {
  if (schedule.B <= 0.0) throw std::invalid_argument("rho_at: B must be positive");
  return (1.0 + static_cast<double>(t) / schedule.B) * schedule.rho0;
}

double mu_rate_for(double sigma0, double lambda_t, double c) {
  if (sigma0 < 0.0) throw std::invalid_argument("mu_rate_for: sigma0 must be nonnegative");
  if (sigma0 == 0.0) return c * std::sqrt(lambda_t);
  return c * lambda_t;
}

std::string to_string(StepSchedule::Kind kind) {
  switch (kind) {
    case StepSchedule::Kind::ConstantEta: return "constant";
    case StepSchedule::Kind::PolynomialEta: return "polynomial";
    case StepSchedule::Kind::GcgLambdaInvT: return "gcg_inv_t";
    case StepSchedule::Kind::GcgLambdaTwoOver: return "gcg_two_over";
    case StepSchedule::Kind::Explicit: return "explicit";
  }
  return "unknown";
}

}  // namespace proxkit
