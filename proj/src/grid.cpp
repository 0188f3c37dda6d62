#include "proxkit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxkit {

QuantizationGrid make_grid(std::vector<double> levels) {
  if (levels.size() < 2) throw std::invalid_argument("grid needs at least two levels");
  for (double q : levels)
    if (!std::isfinite(q)) throw std::invalid_argument("grid levels must be finite");
  std::sort(levels.begin(), levels.end());
  for (std::size_t k = 0; k + 1 < levels.size(); ++k)
    if (levels[k] == levels[k + 1]) throw std::invalid_argument("duplicate grid level");
  QuantizationGrid g;
  g.levels = std::move(levels);
  g.midpoints.resize(g.levels.size() - 1);
  for (std::size_t k = 0; k + 1 < g.levels.size(); ++k)
    g.midpoints[k] = 0.5 * (g.levels[k] + g.levels[k + 1]);
  return g;
}

double project(const QuantizationGrid& grid, double w) {
  if (!std::isfinite(w)) throw std::invalid_argument("non-finite input to project");
  // index = number of midpoints <= w, so an exact midpoint tie maps up
  auto it = std::upper_bound(grid.midpoints.begin(), grid.midpoints.end(), w);
  std::size_t idx = static_cast<std::size_t>(it - grid.midpoints.begin());
  return grid.levels[idx];
}

QuantizationGrid binary_grid() { return make_grid({-1.0, 1.0}); }
QuantizationGrid ternary_grid() { return make_grid({-1.0, 0.0, 1.0}); }
QuantizationGrid quaternary_grid() { return make_grid({-1.0, -0.3, 0.3, 1.0}); }

}  // namespace proxkit
