#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxkit/common.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

struct Dataset {
  std::size_t n = 0;        // samples
  std::size_t d = 0;        // features
  std::size_t classes = 0;  // label range [0, classes)
  std::vector<double> x;    // row major n x d
  std::vector<int> y;

  double feature(std::size_t i, std::size_t j) const { return x[i * d + j]; }
};

struct BlobSpec {
  std::uint64_t seed = 0;
  std::size_t n_samples = 100;
  std::size_t n_features = 2;
  std::size_t n_classes = 2;
  double separation = 3.0;
};

// Gaussian blobs with class means on a scaled simplex (separation * e_k);
// needs n_features >= n_classes. Bit-identical regeneration per seed.
Dataset gen_blobs(const BlobSpec& spec);

// UTF-8 comma-separated floats, final integer label column, optional single
// header row. Parse failures name the row and column.
Dataset load_csv(const std::string& path, bool header);

// Minibatch selection: per-epoch permutation keyed on (seed, epoch) so all
// schemes see identical sample streams for the same seed.
struct SampleSelector {
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;

  bool full() const { return batch_size == 0; }
  std::vector<std::size_t> indices(long step, std::size_t n) const;
};

enum class Activation { Tanh, Relu };

class Problem {
 public:
  enum class Kind { Quadratic, LeastSquares, Logistic, Mlp };

  static Problem quadratic(Mat h, std::vector<double> b);
  static Problem least_squares(Mat a, std::vector<double> y);
  static Problem logistic(Dataset data, double l2);
  static Problem mlp(std::vector<std::size_t> layer_sizes, Activation act, Dataset data);

  Kind kind() const { return kind_; }
  bool convex() const { return kind_ != Kind::Mlp; }
  std::size_t sample_count() const;
  bool classification() const { return kind_ == Kind::Logistic || kind_ == Kind::Mlp; }

  WeightGroups initial_weights(std::uint64_t seed) const;

  double loss(const WeightGroups& w) const;
  double loss(const WeightGroups& w, const std::vector<std::size_t>& batch) const;
  WeightGroups grad(const WeightGroups& w) const;
  WeightGroups grad(const WeightGroups& w, const std::vector<std::size_t>& batch) const;
  WeightGroups grad(const WeightGroups& w, const SampleSelector& sel, long step) const;

  // Fraction correct; NaN for regression objectives. Binary ties resolve to
  // class 0, argmax ties to the lowest index.
  double accuracy(const WeightGroups& w) const;

  std::optional<WeightGroups> analytic_optimum() const;  // quadratic: H^{-1} b

  const Dataset& dataset() const { return data_; }

 private:
  Kind kind_ = Kind::Quadratic;
  Mat h_;                      // Quadratic H / LeastSquares A
  std::vector<double> b_;      // Quadratic b / LeastSquares y
  Dataset data_;
  double l2_ = 0.0;
  std::vector<std::size_t> layers_;  // sizes incl. input and output
  Activation act_ = Activation::Tanh;

  double sample_loss_grad(const WeightGroups& w, const std::vector<std::size_t>& batch,
                          WeightGroups* grad_out) const;
};

}  // namespace proxkit
