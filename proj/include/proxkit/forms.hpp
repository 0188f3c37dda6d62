#pragma once

#include <optional>
#include <string>

#include "proxkit/grid.hpp"
#include "proxkit/quantizer.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

// Regularizers whose proximal maps match the built-in quantizers:
//   squared_norm          r(w) = 1/2 w^2          prox: shrink toward 0
//   scaled_sq_dist(Q, s)  r(w) = (s/2) dist^2(w,Q) prox: the Example-3.3 map
//   dist(Q)               r(w) = dist(w, Q)        prox: unit-slope shift map
class RegularizerForm {
 public:
  enum class Kind { SquaredNorm, ScaledSqDist, GridDist };

  static RegularizerForm squared_norm();
  static RegularizerForm scaled_sq_dist(QuantizationGrid grid, double weight);
  static RegularizerForm grid_dist(QuantizationGrid grid);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool convex() const { return kind_ == Kind::SquaredNorm; }
  double sigma0() const { return kind_ == Kind::SquaredNorm ? 1.0 : 0.0; }

  double value(double w) const;
  double value(const WeightGroups& w) const;

  // a subgradient selection (exact gradient away from midpoints/levels)
  double subgrad(double w) const;

  // P^m_r, closed form, prox parameter m
  double prox(double x, double m) const;

  // quantizer whose sharpness argument is the prox parameter
  Quantizer quantizer() const;

  std::optional<QuantizationGrid> grid() const;

 private:
  Kind kind_ = Kind::SquaredNorm;
  QuantizationGrid grid_;
  double weight_ = 1.0;
  std::string name_;
};

}  // namespace proxkit
