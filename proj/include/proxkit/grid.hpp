#pragma once

#include <vector>

namespace proxkit {

// Ordered discrete level set with derived cell midpoints.
struct QuantizationGrid {
  std::vector<double> levels;     // strictly increasing, size >= 2
  std::vector<double> midpoints;  // midpoints[k] between levels[k] and levels[k+1]

  double lo() const { return levels.front(); }
  double hi() const { return levels.back(); }
  std::size_t size() const { return levels.size(); }
};

// Sorts the input, populates midpoints. Throws on duplicates, non-finite
// values, or fewer than two levels.
QuantizationGrid make_grid(std::vector<double> levels);

// Nearest level; exact midpoint ties resolve to the upper level (so the
// binary case matches the deterministic sign rule with sign(0) = +1).
double project(const QuantizationGrid& grid, double w);

QuantizationGrid binary_grid();      // {-1, 1}
QuantizationGrid ternary_grid();     // {-1, 0, 1}
QuantizationGrid quaternary_grid();  // {-1, -0.3, 0.3, 1}

}  // namespace proxkit
