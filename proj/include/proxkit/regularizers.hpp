#pragma once

#include <cmath>
#include <string>

#include "proxkit/grid.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

// Coordinatewise regularizers with closed-form conjugate machinery: values of
// r, r*, r**, the proximal maps of r* and r**, and the Moreau envelope of r*.
// Conjugates exist only as these closed forms; there is no numeric
// conjugation anywhere.
//
//   squared_norm(s):            r(w) = (s/2) w^2
//   grid_squared_distance(Q,s): r(w) = (s/2) dist^2(w, Q)
//                               r*(y) = y^2/(2s) + max(q_1 y, q_b y)
//                               r**(w) = (s/2) dist^2(w, [q_1, q_b])
//   boxed_quadratic(lo,hi,k):   r(w) = i_[lo,hi](w) + (k/2) w^2
class ConjugateRegularizer {
 public:
  enum class Kind { SquaredNorm, GridSquaredDistance, BoxedQuadratic };

  static ConjugateRegularizer squared_norm(double scale);
  static ConjugateRegularizer grid_squared_distance(QuantizationGrid grid, double scale);
  static ConjugateRegularizer boxed_quadratic(double lo, double hi, double kappa);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool convex() const { return kind_ != Kind::GridSquaredDistance; }

  double value(double w) const;         // r
  double biconj_value(double w) const;  // r**
  double conj_value(double y) const;    // r*

  double prox(double x, double m) const;         // P^m_r (coincides with prox_biconj if convex)
  double prox_biconj(double x, double m) const;   // P^m_{r**}
  double prox_conj(double y, double mu) const;    // P^mu_{r*}
  double grad_conj(double y) const;               // d/dy r*, upper selection at kinks

  // Moreau envelope of r*: value by closed-form inner minimization, gradient
  // by two independent routes (envelope theorem vs prox-of-biconjugate).
  double moreau_conj_value(double y, double mu) const;
  double moreau_conj_grad_envelope(double y, double mu) const;
  double moreau_conj_grad_prox(double y, double mu) const;

  // Lipschitz constant of grad r*, or +inf when r* is nonsmooth.
  double native_smoothness() const;
  // Strong convexity modulus of r (0 for the nonconvex grid distance).
  double strong_convexity() const;

  // sums over all groups / coordinates
  double value(const WeightGroups& w) const;
  double biconj_value(const WeightGroups& w) const;

 private:
  Kind kind_ = Kind::SquaredNorm;
  double scale_ = 1.0;   // s or kappa
  double lo_ = -1.0, hi_ = 1.0;
  QuantizationGrid grid_;
  std::string name_;
};

}  // namespace proxkit
