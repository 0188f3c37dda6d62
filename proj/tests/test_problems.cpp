#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "proxkit/problems.hpp"
#include "proxkit/rng.hpp"

using namespace proxkit;

namespace {

WeightGroups perturbed(const Problem& p, std::uint64_t seed, double scale) {
  WeightGroups w = p.initial_weights(seed);
  RngStream rs(seed, "perturb");
  std::uint64_t c = 0;
  for (auto& v : w.values)
    for (double& x : v) x += scale * rs.normal(c++);
  return w;
}

double fd_max_rel_error(const Problem& p, const WeightGroups& w) {
  WeightGroups g = p.grad(w);
  double worst = 0.0;
  const double h = 1e-6;
  WeightGroups probe = w;
  for (std::size_t gi = 0; gi < w.group_count(); ++gi) {
    for (std::size_t i = 0; i < w.values[gi].size(); ++i) {
      double keep = probe.values[gi][i];
      probe.values[gi][i] = keep + h;
      double up = p.loss(probe);
      probe.values[gi][i] = keep - h;
      double dn = p.loss(probe);
      probe.values[gi][i] = keep;
      double fd = (up - dn) / (2.0 * h);
      double denom = std::max(1.0, std::abs(g.values[gi][i]));
      worst = std::max(worst, std::abs(fd - g.values[gi][i]) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("quadratic loss and gradient") {
  Problem p = Problem::quadratic(Mat::identity(1), {0.0});
  WeightGroups w;
  w.add("w", {0.3});
  CHECK(p.loss(w) == doctest::Approx(0.045).epsilon(1e-15));
  CHECK(p.grad(w).values[0][0] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("quadratic optimum has zero gradient") {
  Mat h(2, 2);
  h(0, 0) = 2.0;
  h(0, 1) = h(1, 0) = 0.3;
  h(1, 1) = 1.5;
  Problem p = Problem::quadratic(h, {1.0, -0.7});
  auto opt = p.analytic_optimum();
  REQUIRE(opt.has_value());
  CHECK(l2_norm(p.grad(*opt)) <= 1e-12);
}

TEST_CASE("quadratic requires a symmetric matrix") {
  Mat h(2, 2);
  h(0, 1) = 0.5;
  CHECK_THROWS(Problem::quadratic(h, {0.0, 0.0}));
}

TEST_CASE("logistic at zero weights is log 2 per sample") {
  BlobSpec s;
  s.seed = 5;
  s.n_samples = 40;
  s.n_features = 2;
  s.n_classes = 2;
  s.separation = 2.0;
  Problem p = Problem::logistic(gen_blobs(s), 0.0);
  WeightGroups w;
  w.add("w", {0.0, 0.0});
  CHECK(p.loss(w) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gradients match central differences across variants") {
  int pairs = 0;
  // quadratic instances
  for (std::uint64_t seed : {1, 2, 3}) {
    RngStream rs(seed, "h");
    Mat h(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double v = rs.normal(i * 3 + j) * 0.3;
        h(i, j) += v;
        if (i != j) h(j, i) += v;
        if (i == j) h(i, i) += 1.5;
      }
    Problem p = Problem::quadratic(h, {0.4, -0.2, 0.9});
    for (std::uint64_t ws : {10, 20}) {
      CHECK(fd_max_rel_error(p, perturbed(p, seed * 100 + ws, 0.5)) <= 1e-5);
      ++pairs;
    }
  }
  // least squares
  {
    RngStream rs(7, "ls");
    Mat a(8, 3);
    for (std::size_t i = 0; i < a.a.size(); ++i) a.a[i] = rs.normal(i);
    std::vector<double> y(8);
    for (std::size_t i = 0; i < 8; ++i) y[i] = rs.normal(100 + i);
    Problem p = Problem::least_squares(std::move(a), std::move(y));
    for (std::uint64_t ws : {1, 2, 3}) {
      CHECK(fd_max_rel_error(p, perturbed(p, ws, 1.0)) <= 1e-5);
      ++pairs;
    }
  }
  // logistic
  {
    BlobSpec s;
    s.seed = 11;
    s.n_samples = 30;
    s.n_features = 3;
    s.n_classes = 2;
    s.separation = 1.5;
    Problem p = Problem::logistic(gen_blobs(s), 0.05);
    for (std::uint64_t ws : {4, 5, 6}) {
      CHECK(fd_max_rel_error(p, perturbed(p, ws, 1.0)) <= 1e-5);
      ++pairs;
    }
  }
  // tanh mlp
  for (std::uint64_t seed : {21, 22, 23}) {
    BlobSpec s;
    s.seed = seed;
    s.n_samples = 20;
    s.n_features = 2;
    s.n_classes = 2;
    s.separation = 2.0;
    Dataset ds = gen_blobs(s);
    Problem p = Problem::mlp({2, 5, 2}, Activation::Tanh, std::move(ds));
    for (std::uint64_t ws : {1, 2, 3, 4}) {
      CHECK(fd_max_rel_error(p, perturbed(p, seed * 10 + ws, 0.3)) <= 1e-5);
      ++pairs;
    }
  }
  // relu mlp at seeded generic points
  {
    BlobSpec s;
    s.seed = 31;
    s.n_samples = 16;
    s.n_features = 2;
    s.n_classes = 2;
    s.separation = 2.0;
    Dataset ds = gen_blobs(s);
    Problem p = Problem::mlp({2, 4, 2}, Activation::Relu, std::move(ds));
    for (std::uint64_t ws : {2, 3}) {
      CHECK(fd_max_rel_error(p, perturbed(p, 600 + ws, 0.4)) <= 1e-4);
      ++pairs;
    }
  }
  CHECK(pairs >= 20);
}

TEST_CASE("blob generation is deterministic and mean-shifted by separation") {
  BlobSpec a;
  a.seed = 9;
  a.n_samples = 50;
  a.n_features = 3;
  a.n_classes = 3;
  a.separation = 0.0;
  Dataset base = gen_blobs(a);
  Dataset again = gen_blobs(a);
  CHECK(base.x == again.x);
  CHECK(base.y == again.y);

  BlobSpec b = a;
  b.separation = 5.0;
  Dataset shifted = gen_blobs(b);
  for (std::size_t i = 0; i < base.n; ++i)
    for (std::size_t j = 0; j < base.d; ++j) {
      double want = base.feature(i, j) +
                    (j == static_cast<std::size_t>(base.y[i]) ? 5.0 : 0.0);
      CHECK(shifted.feature(i, j) == want);
    }
  CHECK_THROWS(gen_blobs(BlobSpec{0, 10, 2, 3, 1.0}));  // features < classes
  CHECK_THROWS(gen_blobs(BlobSpec{0, 0, 2, 2, 1.0}));
}

TEST_CASE("well separated blobs are linearly classifiable") {
  BlobSpec s;
  s.seed = 17;
  s.n_samples = 60;
  s.n_features = 2;
  s.n_classes = 2;
  s.separation = 8.0;
  Problem p = Problem::logistic(gen_blobs(s), 0.0);
  WeightGroups w;
  w.add("w", {0.0, 0.0});
  for (int it = 0; it < 2000; ++it) axpy_inplace(-0.5, p.grad(w), w);
  CHECK(p.accuracy(w) == 1.0);
}

TEST_CASE("csv loader") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "proxkit_csv_test";
  fs::create_directories(dir);

  {
    std::ofstream f(dir / "ok.csv");
    f << "x1,x2,label\n0.5,1.25,0\n-1.0,0.25,1\n2.0,-0.75,1\n";
  }
  Dataset ds = load_csv((dir / "ok.csv").string(), true);
  CHECK(ds.n == 3);
  CHECK(ds.d == 2);
  CHECK(ds.classes == 2);
  CHECK(ds.feature(1, 0) == -1.0);
  CHECK(ds.y[2] == 1);

  {
    std::ofstream f(dir / "bad.csv");
    f << "0.5,oops,0\n";
  }
  try {
    load_csv((dir / "bad.csv").string(), false);
    CHECK(false);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  CHECK_THROWS(load_csv((dir / "missing.csv").string(), false));
}

TEST_CASE("accuracy decision rules") {
  BlobSpec s;
  s.seed = 3;
  s.n_samples = 30;  // labels 0,1,0,1,... so exactly half are class 0
  s.n_features = 2;
  s.n_classes = 2;
  s.separation = 1.0;
  Problem logit = Problem::logistic(gen_blobs(s), 0.0);
  WeightGroups zero;
  zero.add("w", {0.0, 0.0});
  CHECK(logit.accuracy(zero) == 0.5);  // ties resolve to class 0

  Dataset ds = gen_blobs(s);
  Problem net = Problem::mlp({2, 3, 2}, Activation::Tanh, std::move(ds));
  WeightGroups wz = net.initial_weights(0);
  for (auto& v : wz.values)
    for (double& x : v) x = 0.0;
  CHECK(net.accuracy(wz) == 0.5);  // zero logits argmax-tie to class 0

  Problem quad = Problem::quadratic(Mat::identity(1), {0.0});
  WeightGroups w;
  w.add("w", {0.1});
  CHECK(std::isnan(quad.accuracy(w)));
}

TEST_CASE("labels independent of features make accuracy hover at chance") {
  // separation 0: both classes share the same distribution
  double total = 0.0;
  int runs = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    BlobSpec s;
    s.seed = seed;
    s.n_samples = 400;
    s.n_features = 2;
    s.n_classes = 2;
    s.separation = 0.0;
    Dataset ds = gen_blobs(s);
    Problem p = Problem::mlp({2, 4, 2}, Activation::Tanh, std::move(ds));
    total += p.accuracy(p.initial_weights(seed));
    ++runs;
  }
  CHECK(total / runs == doctest::Approx(0.5).epsilon(0.12));
}

TEST_CASE("minibatch stream covers each epoch without replacement") {
  BlobSpec s;
  s.seed = 23;
  s.n_samples = 60;
  s.n_features = 2;
  s.n_classes = 2;
  s.separation = 2.0;
  Problem p = Problem::logistic(gen_blobs(s), 0.01);
  WeightGroups w = perturbed(p, 77, 1.0);

  SampleSelector sel{20, 99};
  // batch-mean gradients over one epoch average to the full-batch gradient
  WeightGroups acc = zeros_like(w);
  for (long step = 0; step < 3; ++step) axpy_inplace(1.0 / 3.0, p.grad(w, sel, step), acc);
  WeightGroups full = p.grad(w);
  axpy_inplace(-1.0, full, acc);
  CHECK(l2_norm(acc) <= 1e-10);

  // indices within an epoch partition the sample range
  std::vector<int> seen(60, 0);
  for (long step = 0; step < 3; ++step)
    for (std::size_t idx : sel.indices(step, 60)) seen[idx]++;
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("shape mismatches are rejected") {
  Problem p = Problem::quadratic(Mat::identity(2), {0.0, 0.0});
  WeightGroups w;
  w.add("w", {0.1, 0.2, 0.3});
  CHECK_THROWS(p.loss(w));
  WeightGroups nf;
  nf.add("w", {std::nan(""), 0.0});
  CHECK_THROWS(p.loss(nf));
}
