#include "proxkit/forms.hpp"

#include <cmath>
#include <stdexcept>

namespace proxkit {

RegularizerForm RegularizerForm::squared_norm() {
  RegularizerForm f;
  f.kind_ = Kind::SquaredNorm;
  f.name_ = "squared_norm";
  return f;
}

RegularizerForm RegularizerForm::scaled_sq_dist(QuantizationGrid grid, double weight) {
  if (weight <= 0.0) throw std::invalid_argument("scaled_sq_dist: weight must be positive");
  RegularizerForm f;
  f.kind_ = Kind::ScaledSqDist;
  f.grid_ = std::move(grid);
  f.weight_ = weight;
  f.name_ = "scaled_sq_dist";
  return f;
}

RegularizerForm RegularizerForm::grid_dist(QuantizationGrid grid) {
  RegularizerForm f;
  f.kind_ = Kind::GridDist;
  f.grid_ = std::move(grid);
  f.name_ = "dist";
  return f;
}

double RegularizerForm::value(double w) const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return 0.5 * w * w;
    case Kind::ScaledSqDist: {
      double d = w - project(grid_, w);
      return 0.5 * weight_ * d * d;
    }
    case Kind::GridDist:
      return std::abs(w - project(grid_, w));
  }
  return 0.0;
}

double RegularizerForm::value(const WeightGroups& w) const {
  NeumaierSum s;
  for (const auto& v : w.values)
    for (double x : v) s.add(value(x));
  return s.value();
}

double RegularizerForm::subgrad(double w) const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return w;
    case Kind::ScaledSqDist:
      return weight_ * (w - project(grid_, w));
    case Kind::GridDist: {
      double d = w - project(grid_, w);
      return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
  }
  return 0.0;
}

double RegularizerForm::prox(double x, double m) const {
  if (m < 0.0) throw std::invalid_argument("prox: negative parameter");
  switch (kind_) {
    case Kind::SquaredNorm:
      return x / (1.0 + m);
    case Kind::ScaledSqDist: {
      double ms = m * weight_;
      return (x + ms * project(grid_, x)) / (1.0 + ms);
    }
    case Kind::GridDist: {
      double q = project(grid_, x);
      double d = x - q;
      double shrunk = std::abs(d) <= m ? 0.0 : d - (d > 0.0 ? m : -m);
      return q + shrunk;
    }
  }
  return x;
}

Quantizer RegularizerForm::quantizer() const {
  RegularizerForm self = *this;
  return Quantizer::from_scalar_prox(
      "prox_" + name_, [self](double x, double m) { return self.prox(x, m); }, grid());
}

std::optional<QuantizationGrid> RegularizerForm::grid() const {
  if (kind_ == Kind::SquaredNorm) return std::nullopt;
  return grid_;
}

}  // namespace proxkit
