#include "proxkit/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace proxkit {

ConjugateRegularizer ConjugateRegularizer::squared_norm(double scale) {
  if (scale <= 0.0) throw std::invalid_argument("squared_norm: scale must be positive");
  ConjugateRegularizer r;
  r.kind_ = Kind::SquaredNorm;
  r.scale_ = scale;
  r.name_ = "squared_norm";
  return r;
}

ConjugateRegularizer ConjugateRegularizer::grid_squared_distance(QuantizationGrid grid,
                                                                 double scale) {
  if (scale <= 0.0) throw std::invalid_argument("grid_squared_distance: scale must be positive");
  ConjugateRegularizer r;
  r.kind_ = Kind::GridSquaredDistance;
  r.grid_ = std::move(grid);
  r.scale_ = scale;
  r.lo_ = r.grid_.lo();
  r.hi_ = r.grid_.hi();
  r.name_ = "grid_squared_distance";
  return r;
}

ConjugateRegularizer ConjugateRegularizer::boxed_quadratic(double lo, double hi, double kappa) {
  if (!(lo < hi)) throw std::invalid_argument("boxed_quadratic: lo must be below hi");
  if (kappa <= 0.0) throw std::invalid_argument("boxed_quadratic: kappa must be positive");
  ConjugateRegularizer r;
  r.kind_ = Kind::BoxedQuadratic;
  r.lo_ = lo;
  r.hi_ = hi;
  r.scale_ = kappa;
  r.name_ = "boxed_quadratic";
  return r;
}

double ConjugateRegularizer::value(double w) const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return 0.5 * scale_ * w * w;
    case Kind::GridSquaredDistance: {
      double d = std::abs(w - project(grid_, w));
      return 0.5 * scale_ * d * d;
    }
    case Kind::BoxedQuadratic:
      if (w < lo_ || w > hi_) return std::numeric_limits<double>::infinity();
      return 0.5 * scale_ * w * w;
  }
  return 0.0;
}

double ConjugateRegularizer::biconj_value(double w) const {
  switch (kind_) {
    case Kind::SquaredNorm:
    case Kind::BoxedQuadratic:
      return value(w);
    case Kind::GridSquaredDistance: {
      // squared distance to the convex hull [q_1, q_b]
      double d = w < lo_ ? lo_ - w : (w > hi_ ? w - hi_ : 0.0);
      return 0.5 * scale_ * d * d;
    }
  }
  return 0.0;
}

double ConjugateRegularizer::conj_value(double y) const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return y * y / (2.0 * scale_);
    case Kind::GridSquaredDistance:
      return y * y / (2.0 * scale_) + std::max(lo_ * y, hi_ * y);
    case Kind::BoxedQuadratic: {
      double w = std::clamp(y / scale_, lo_, hi_);
      return y * w - 0.5 * scale_ * w * w;
    }
  }
  return 0.0;
}

double ConjugateRegularizer::prox(double x, double m) const {
  if (m < 0.0) throw std::invalid_argument("prox: negative parameter");
  switch (kind_) {
    case Kind::SquaredNorm:
      return x / (1.0 + m * scale_);
    case Kind::GridSquaredDistance: {
      double ms = m * scale_;
      return (x + ms * project(grid_, x)) / (1.0 + ms);
    }
    case Kind::BoxedQuadratic:
      return std::clamp(x / (1.0 + m * scale_), lo_, hi_);
  }
  return x;
}

double ConjugateRegularizer::prox_biconj(double x, double m) const {
  if (kind_ != Kind::GridSquaredDistance) return prox(x, m);
  if (x >= lo_ && x <= hi_) return x;
  double ms = m * scale_;
  if (x > hi_) return (x + ms * hi_) / (1.0 + ms);
  return (x + ms * lo_) / (1.0 + ms);
}

double ConjugateRegularizer::prox_conj(double y, double mu) const {
  if (mu <= 0.0) throw std::invalid_argument("prox_conj: parameter must be positive");
  switch (kind_) {
    case Kind::SquaredNorm:
      return scale_ * y / (scale_ + mu);
    case Kind::GridSquaredDistance: {
      // minimize (z-y)^2/(2 mu) + z^2/(2s) + max(q_1 z, q_b z)
      if (y > mu * hi_) return scale_ * (y - mu * hi_) / (scale_ + mu);
      if (y < mu * lo_) return scale_ * (y - mu * lo_) / (scale_ + mu);
      return 0.0;
    }
    case Kind::BoxedQuadratic: {
      double a = (scale_ + mu) * lo_, b = (scale_ + mu) * hi_;
      if (y > b) return y - mu * hi_;
      if (y < a) return y - mu * lo_;
      return scale_ * y / (scale_ + mu);
    }
  }
  return y;
}

double ConjugateRegularizer::grad_conj(double y) const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return y / scale_;
    case Kind::GridSquaredDistance:
      // kink at 0; upper selection
      return y / scale_ + (y >= 0.0 ? hi_ : lo_);
    case Kind::BoxedQuadratic:
      return std::clamp(y / scale_, lo_, hi_);
  }
  return y;
}

double ConjugateRegularizer::moreau_conj_value(double y, double mu) const {
  double z = prox_conj(y, mu);
  double d = y - z;
  return d * d / (2.0 * mu) + conj_value(z);
}

double ConjugateRegularizer::moreau_conj_grad_envelope(double y, double mu) const {
  return (y - prox_conj(y, mu)) / mu;
}

double ConjugateRegularizer::moreau_conj_grad_prox(double y, double mu) const {
  return prox_biconj(y / mu, 1.0 / mu);
}

double ConjugateRegularizer::native_smoothness() const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return 1.0 / scale_;
    case Kind::GridSquaredDistance:
      return std::numeric_limits<double>::infinity();
    case Kind::BoxedQuadratic:
      return 1.0 / scale_;
  }
  return std::numeric_limits<double>::infinity();
}

double ConjugateRegularizer::strong_convexity() const {
  switch (kind_) {
    case Kind::SquaredNorm:
      return scale_;
    case Kind::GridSquaredDistance:
      return 0.0;
    case Kind::BoxedQuadratic:
      return scale_;
  }
  return 0.0;
}

double ConjugateRegularizer::value(const WeightGroups& w) const {
  NeumaierSum s;
  for (const auto& v : w.values)
    for (double x : v) s.add(value(x));
  return s.value();
}

double ConjugateRegularizer::biconj_value(const WeightGroups& w) const {
  NeumaierSum s;
  for (const auto& v : w.values)
    for (double x : v) s.add(biconj_value(x));
  return s.value();
}

}  // namespace proxkit
