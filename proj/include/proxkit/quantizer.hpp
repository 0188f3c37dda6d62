#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proxkit/grid.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

enum class MidpointPolicy { Upper, Lower };

// Piecewise-linear proximal quantizer. The horizontal shift rho controls the
// width of the exact plateau around each level; the vertical shift varrho
// controls the slope of the connecting pieces. rho = varrho = 0 is the
// identity, rho = varrho -> inf is the projector.
struct PiecewiseLinearQuantizer {
  QuantizationGrid grid;
  double rho = 0.0;
  double varrho = 0.0;
  bool clip = true;
  MidpointPolicy midpoint_policy = MidpointPolicy::Upper;
};

// Evaluates the three-piece map with explicit shifts (rho, varrho).
double plq_apply(const QuantizationGrid& grid, double rho, double varrho, bool clip,
                 MidpointPolicy policy, double w);

inline double apply_plq(const PiecewiseLinearQuantizer& q, double w) {
  return plq_apply(q.grid, q.rho, q.varrho, q.clip, q.midpoint_policy, w);
}

// sign(w) * (eps|w| + 1/mu) / (eps + 1/mu), inputs clipped to [-1, 1].
// sign(0) is taken as +1 to match the projector tie rule.
double soft_sign_map(double epsilon, double mu, double w);

// Composable quantizer description. Sharpness semantics per variant:
//   identity, projector          ignore sharpness
//   piecewise_linear             shifts scale to (rho*s, varrho*s)
//   binary_relax(grid, mu0)      effective mu = mu0 * s
//   soft_sign(eps, mu0)          effective prox parameter = s / mu0
//   average, random_select       sharpness passed through to children
struct QuantizerSpec {
  enum class Kind {
    Identity,
    Projector,
    PiecewiseLinear,
    BinaryRelax,
    SoftSign,
    Average,
    PerGroup,
    RandomSelect
  };

  Kind kind = Kind::Identity;
  QuantizationGrid grid;  // Projector, PiecewiseLinear, BinaryRelax
  double rho = 0.0;
  double varrho = 0.0;
  bool clip = true;
  MidpointPolicy midpoint_policy = MidpointPolicy::Upper;
  double mu = 1.0;        // BinaryRelax / SoftSign base parameter
  double epsilon = 0.5;   // SoftSign
  std::vector<double> average_weights;
  std::vector<QuantizerSpec> children;       // Average, RandomSelect, PerGroup
  std::vector<std::string> group_names;      // PerGroup, parallel to children
  std::uint64_t select_seed = 0;             // RandomSelect

  static QuantizerSpec identity();
  static QuantizerSpec projector(QuantizationGrid grid);
  static QuantizerSpec piecewise_linear(QuantizationGrid grid, double rho, double varrho,
                                        bool clip = true,
                                        MidpointPolicy policy = MidpointPolicy::Upper);
  static QuantizerSpec binary_relax(QuantizationGrid grid, double mu);
  static QuantizerSpec soft_sign(double epsilon, double mu);
  static QuantizerSpec average(std::vector<std::pair<double, QuantizerSpec>> terms);
  static QuantizerSpec per_group(std::vector<std::pair<std::string, QuantizerSpec>> members);
  static QuantizerSpec random_select(std::vector<QuantizerSpec> choices, std::uint64_t seed);

  void validate() const;
};

// Univariate evaluation at sharpness s; throws for per_group specs.
double apply_scalar(const QuantizerSpec& spec, double w, double sharpness, std::uint64_t draw);

// Structured application to named weight groups.
WeightGroups apply(const QuantizerSpec& spec, const WeightGroups& w, double sharpness,
                   std::uint64_t draw);

// Runtime quantizer handle used by the optimizers: either a compiled spec or
// an injected coordinatewise proximal map (the diagnostics module pairs
// regularizer forms with their exact proxes this way).
class Quantizer {
 public:
  Quantizer() : prox_([](double x, double) { return x; }), label_("identity") {
    sharpness_invariant_ = true;
  }

  static Quantizer from_spec(QuantizerSpec spec);
  static Quantizer from_scalar_prox(std::string label,
                                    std::function<double(double x, double prox_param)> prox,
                                    std::optional<QuantizationGrid> hard = std::nullopt);

  WeightGroups operator()(const WeightGroups& w, double sharpness, std::uint64_t draw) const;
  double scalar(double x, double sharpness, std::uint64_t draw = 0) const;

  // Grid used for terminal hard quantization of a group; nullopt means the
  // group stays continuous.
  std::optional<QuantizationGrid> hard_grid(const std::string& group) const;

  bool sharpness_invariant() const { return sharpness_invariant_; }
  const std::string& label() const { return label_; }
  const QuantizerSpec* spec() const { return spec_ ? spec_.get() : nullptr; }

 private:
  std::shared_ptr<const QuantizerSpec> spec_;
  std::function<double(double, double)> prox_;
  std::optional<QuantizationGrid> prox_hard_;
  bool sharpness_invariant_ = false;
  std::string label_;
};

// Probe-based verification of the proximal-map axioms: monotone, bounded
// values, one-sided limit attainment at jumps (closed-graph surrogate).
struct AxiomReport {
  long monotonicity_violations = 0;
  double worst_violation = 0.0;
  bool values_finite = true;
  long jump_count = 0;
  long unattained_jumps = 0;

  bool pass() const {
    return monotonicity_violations == 0 && values_finite && unattained_jumps == 0;
  }
};

AxiomReport check_prox_axioms(const std::function<double(double)>& map,
                              const std::vector<double>& probes);
AxiomReport check_prox_axioms(const QuantizerSpec& spec, const std::vector<double>& probes,
                              double sharpness = 1.0);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace proxkit
