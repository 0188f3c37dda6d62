#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxkit/common.hpp"

namespace proxkit {

// Named per-group weight vectors with deterministic (insertion) order.
struct WeightGroups {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;

  std::size_t group_count() const { return names.size(); }

  void add(std::string name, std::vector<double> v) {
    names.push_back(std::move(name));
    values.push_back(std::move(v));
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::invalid_argument("unknown weight group: " + name);
  }

  std::vector<double>& at(const std::string& name) { return values[index_of(name)]; }
  const std::vector<double>& at(const std::string& name) const { return values[index_of(name)]; }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& v : values) n += v.size();
    return n;
  }
};

inline bool same_shape(const WeightGroups& a, const WeightGroups& b) {
  if (a.names != b.names) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i].size() != b.values[i].size()) return false;
  return true;
}

inline void require_same_shape(const WeightGroups& a, const WeightGroups& b) {
  if (!same_shape(a, b)) throw std::invalid_argument("weight group shape mismatch");
}

inline WeightGroups zeros_like(const WeightGroups& a) {
  WeightGroups z;
  for (std::size_t i = 0; i < a.group_count(); ++i)
    z.add(a.names[i], std::vector<double>(a.values[i].size(), 0.0));
  return z;
}

// y += alpha * x
inline void axpy_inplace(double alpha, const WeightGroups& x, WeightGroups& y) {
  require_same_shape(x, y);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    axpy(alpha, x.values[i], y.values[i]);
}

inline double dot(const WeightGroups& a, const WeightGroups& b) {
  require_same_shape(a, b);
  NeumaierSum s;
  for (std::size_t i = 0; i < a.values.size(); ++i) s.add(dot(std::span<const double>(a.values[i]), std::span<const double>(b.values[i])));
  return s.value();
}

inline double l2_norm(const WeightGroups& a) { return std::sqrt(dot(a, a)); }

inline double sq_norm(const WeightGroups& a) { return dot(a, a); }

inline double inf_norm(const WeightGroups& a) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, inf_norm(std::span<const double>(v)));
  return m;
}

inline bool all_finite(const WeightGroups& a) {
  for (const auto& v : a.values)
    if (!all_finite(std::span<const double>(v))) return false;
  return true;
}

inline bool bitwise_equal(const WeightGroups& a, const WeightGroups& b) {
  if (!same_shape(a, b)) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    for (std::size_t j = 0; j < a.values[i].size(); ++j)
      if (a.values[i][j] != b.values[i][j]) return false;
  return true;
}

inline WeightGroups scaled(const WeightGroups& a, double alpha) {
  WeightGroups r = a;
  for (auto& v : r.values)
    for (double& x : v) x *= alpha;
  return r;
}

}  // namespace proxkit
