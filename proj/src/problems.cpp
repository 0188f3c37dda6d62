#include "proxkit/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "proxkit/rng.hpp"

namespace proxkit {

Dataset gen_blobs(const BlobSpec& spec) {
  if (spec.n_classes < 2) throw std::invalid_argument("gen_blobs: need at least two classes");
  if (spec.n_samples == 0 || spec.n_features == 0)
    throw std::invalid_argument("gen_blobs: nonpositive sizes");
  if (spec.n_features < spec.n_classes)
    throw std::invalid_argument("gen_blobs: needs n_features >= n_classes");
  Dataset ds;
  ds.n = spec.n_samples;
  ds.d = spec.n_features;
  ds.classes = spec.n_classes;
  ds.x.resize(ds.n * ds.d);
  ds.y.resize(ds.n);
  RngStream noise(spec.seed, "blobs");
  for (std::size_t i = 0; i < ds.n; ++i) {
    int cls = static_cast<int>(i % spec.n_classes);
    ds.y[i] = cls;
    for (std::size_t j = 0; j < ds.d; ++j) {
      double mean = (j == static_cast<std::size_t>(cls)) ? spec.separation : 0.0;
      ds.x[i * ds.d + j] = mean + noise.normal(i * ds.d + j);
    }
  }
  return ds;
}

Dataset load_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  Dataset ds;
  std::string line;
  std::size_t row = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && header) continue;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2)
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has fewer than 2 columns");
    std::vector<double> feats(cells.size() - 1);
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
      try {
        std::size_t pos = 0;
        feats[c] = std::stod(cells[c], &pos);
        while (pos < cells[c].size() && std::isspace(static_cast<unsigned char>(cells[c][pos]))) ++pos;
        if (pos != cells[c].size()) throw std::invalid_argument("trailing chars");
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: non-numeric cell at row " + std::to_string(row) +
                                 ", column " + std::to_string(c + 1));
      }
    }
    int label = 0;
    try {
      std::size_t pos = 0;
      label = std::stoi(cells.back(), &pos);
      if (pos != cells.back().size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw std::runtime_error("load_csv: non-integer label at row " + std::to_string(row) +
                               ", column " + std::to_string(cells.size()));
    }
    if (label < 0)
      throw std::runtime_error("load_csv: negative label at row " + std::to_string(row));
    if (!rows.empty() && feats.size() != rows.front().size())
      throw std::runtime_error("load_csv: inconsistent column count at row " + std::to_string(row));
    rows.push_back(std::move(feats));
    labels.push_back(label);
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);
  ds.n = rows.size();
  ds.d = rows.front().size();
  int max_label = 0;
  for (int l : labels) max_label = std::max(max_label, l);
  ds.classes = static_cast<std::size_t>(max_label) + 1;
  if (ds.classes < 2) ds.classes = 2;
  ds.x.resize(ds.n * ds.d);
  ds.y = std::move(labels);
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t j = 0; j < ds.d; ++j) ds.x[i * ds.d + j] = rows[i][j];
  return ds;
}

std::vector<std::size_t> SampleSelector::indices(long step, std::size_t n) const {
  if (full() || batch_size >= n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::size_t batches_per_epoch = (n + batch_size - 1) / batch_size;
  std::uint64_t epoch = static_cast<std::uint64_t>(step) / batches_per_epoch;
  std::size_t slot = static_cast<std::size_t>(step) % batches_per_epoch;
  RngStream perm_stream(seed, "minibatch", epoch);
  std::vector<std::size_t> perm = perm_stream.permutation(n);
  std::size_t lo = slot * batch_size;
  std::size_t hi = std::min(lo + batch_size, n);
  return std::vector<std::size_t>(perm.begin() + static_cast<long>(lo),
                                  perm.begin() + static_cast<long>(hi));
}

Problem Problem::quadratic(Mat h, std::vector<double> b) {
  if (h.rows != h.cols || h.rows != b.size())
    throw std::invalid_argument("quadratic: shape mismatch");
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = i + 1; j < h.cols; ++j)
      if (std::abs(h(i, j) - h(j, i)) > 1e-12)
        throw std::invalid_argument("quadratic: H must be symmetric");
  Problem p;
  p.kind_ = Kind::Quadratic;
  p.h_ = std::move(h);
  p.b_ = std::move(b);
  return p;
}

Problem Problem::least_squares(Mat a, std::vector<double> y) {
  if (a.rows != y.size()) throw std::invalid_argument("least_squares: shape mismatch");
  Problem p;
  p.kind_ = Kind::LeastSquares;
  p.h_ = std::move(a);
  p.b_ = std::move(y);
  return p;
}

Problem Problem::logistic(Dataset data, double l2) {
  if (data.classes != 2) throw std::invalid_argument("logistic: binary labels required");
  if (l2 < 0.0) throw std::invalid_argument("logistic: negative l2");
  Problem p;
  p.kind_ = Kind::Logistic;
  p.data_ = std::move(data);
  p.l2_ = l2;
  return p;
}

Problem Problem::mlp(std::vector<std::size_t> layer_sizes, Activation act, Dataset data) {
  if (layer_sizes.size() < 3) throw std::invalid_argument("mlp: need at least one hidden layer");
  if (layer_sizes.front() != data.d || layer_sizes.back() != data.classes)
    throw std::invalid_argument("mlp: layer sizes inconsistent with dataset");
  Problem p;
  p.kind_ = Kind::Mlp;
  p.layers_ = std::move(layer_sizes);
  p.act_ = act;
  p.data_ = std::move(data);
  return p;
}

std::size_t Problem::sample_count() const {
  switch (kind_) {
    case Kind::Quadratic: return 1;
    case Kind::LeastSquares: return h_.rows;
    case Kind::Logistic:
    case Kind::Mlp: return data_.n;
  }
  return 1;
}

WeightGroups Problem::initial_weights(std::uint64_t seed) const {
  WeightGroups w;
  switch (kind_) {
    case Kind::Quadratic:
    case Kind::LeastSquares:
    case Kind::Logistic: {
      std::size_t dim = kind_ == Kind::Logistic ? data_.d : h_.cols;
      std::vector<double> v(dim, 0.0);
      RngStream init(seed, "init");
      for (std::size_t i = 0; i < dim; ++i) v[i] = init.normal(i);
      w.add("w", std::move(v));
      return w;
    }
    case Kind::Mlp: {
      for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        std::size_t fan_in = layers_[l], fan_out = layers_[l + 1];
        double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        RngStream init(seed, "init", l);
        std::vector<double> weight(fan_out * fan_in);
        for (std::size_t i = 0; i < weight.size(); ++i)
          weight[i] = a * (2.0 * init.uniform(i) - 1.0);
        w.add("layer" + std::to_string(l) + ".weight", std::move(weight));
        w.add("layer" + std::to_string(l) + ".bias", std::vector<double>(fan_out, 0.0));
      }
      return w;
    }
  }
  return w;
}

namespace {

double act_forward(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// relu subgradient at 0 is 0
double act_backward(Activation a, double z) {
  if (a == Activation::Tanh) {
    double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : 0.0;
}

}  // namespace

// Shared full/minibatch evaluation; grad_out accumulates the batch-mean
// gradient when non-null. Returns the batch-mean loss.
double Problem::sample_loss_grad(const WeightGroups& w, const std::vector<std::size_t>& batch,
                                 WeightGroups* grad_out) const {
  switch (kind_) {
    case Kind::Quadratic: {
      const auto& x = w.values[0];
      std::vector<double> hx = h_.matvec(x);
      double val = 0.5 * dot(std::span<const double>(hx), std::span<const double>(x)) -
                   dot(std::span<const double>(b_), std::span<const double>(x));
      if (grad_out) {
        auto& g = grad_out->values[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = hx[i] - b_[i];
      }
      return val;
    }
    case Kind::LeastSquares: {
      const auto& x = w.values[0];
      NeumaierSum loss;
      if (grad_out) std::fill(grad_out->values[0].begin(), grad_out->values[0].end(), 0.0);
      for (std::size_t bi : batch) {
        NeumaierSum ax;
        for (std::size_t j = 0; j < h_.cols; ++j) ax.add(h_(bi, j) * x[j]);
        double r = ax.value() - b_[bi];
        loss.add(0.5 * r * r);
        if (grad_out)
          for (std::size_t j = 0; j < h_.cols; ++j)
            grad_out->values[0][j] += r * h_(bi, j) / static_cast<double>(batch.size());
      }
      return loss.value() / static_cast<double>(batch.size());
    }
    case Kind::Logistic: {
      const auto& x = w.values[0];
      NeumaierSum loss;
      if (grad_out) std::fill(grad_out->values[0].begin(), grad_out->values[0].end(), 0.0);
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      for (std::size_t bi : batch) {
        NeumaierSum sx;
        for (std::size_t j = 0; j < data_.d; ++j) sx.add(data_.feature(bi, j) * x[j]);
        double margin = (data_.y[bi] == 1 ? 1.0 : -1.0) * sx.value();
        // log(1 + exp(-m)) computed stably
        double l = margin > 0.0 ? std::log1p(std::exp(-margin))
                                : -margin + std::log1p(std::exp(margin));
        loss.add(l);
        if (grad_out) {
          double sig = margin > 0.0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                                    : 1.0 / (1.0 + std::exp(margin));
          double coef = -(data_.y[bi] == 1 ? 1.0 : -1.0) * sig * inv_b;
          for (std::size_t j = 0; j < data_.d; ++j)
            grad_out->values[0][j] += coef * data_.feature(bi, j);
        }
      }
      double val = loss.value() * inv_b + 0.5 * l2_ * dot(std::span<const double>(x), std::span<const double>(x));
      if (grad_out)
        for (std::size_t j = 0; j < x.size(); ++j) grad_out->values[0][j] += l2_ * x[j];
      return val;
    }
    case Kind::Mlp: {
      const std::size_t L = layers_.size() - 1;  // number of weight layers
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      if (grad_out)
        for (auto& v : grad_out->values) std::fill(v.begin(), v.end(), 0.0);
      NeumaierSum loss;
      std::vector<std::vector<double>> pre(L), post(L + 1);
      for (std::size_t bi : batch) {
        post[0].assign(data_.x.begin() + static_cast<long>(bi * data_.d),
                       data_.x.begin() + static_cast<long>((bi + 1) * data_.d));
        for (std::size_t l = 0; l < L; ++l) {
          const auto& wl = w.at("layer" + std::to_string(l) + ".weight");
          const auto& bl = w.at("layer" + std::to_string(l) + ".bias");
          std::size_t in = layers_[l], out = layers_[l + 1];
          pre[l].assign(out, 0.0);
          for (std::size_t i = 0; i < out; ++i) {
            NeumaierSum s;
            for (std::size_t j = 0; j < in; ++j) s.add(wl[i * in + j] * post[l][j]);
            pre[l][i] = s.value() + bl[i];
          }
          post[l + 1].resize(out);
          if (l + 1 < L)
            for (std::size_t i = 0; i < out; ++i) post[l + 1][i] = act_forward(act_, pre[l][i]);
          else
            post[l + 1] = pre[l];  // logits
        }
        // softmax cross-entropy
        const auto& logits = post[L];
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double v : logits) z += std::exp(v - mx);
        int label = data_.y[bi];
        loss.add(-(logits[static_cast<std::size_t>(label)] - mx - std::log(z)));
        if (!grad_out) continue;

        std::vector<double> delta(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
          double smx = std::exp(logits[i] - mx) / z;
          delta[i] = (smx - (static_cast<int>(i) == label ? 1.0 : 0.0)) * inv_b;
        }
        for (std::size_t l = L; l-- > 0;) {
          std::size_t in = layers_[l], out = layers_[l + 1];
          auto& gw = grad_out->at("layer" + std::to_string(l) + ".weight");
          auto& gb = grad_out->at("layer" + std::to_string(l) + ".bias");
          for (std::size_t i = 0; i < out; ++i) {
            gb[i] += delta[i];
            for (std::size_t j = 0; j < in; ++j) gw[i * in + j] += delta[i] * post[l][j];
          }
          if (l == 0) break;
          const auto& wl = w.at("layer" + std::to_string(l) + ".weight");
          std::vector<double> prev(in, 0.0);
          for (std::size_t j = 0; j < in; ++j) {
            NeumaierSum s;
            for (std::size_t i = 0; i < out; ++i) s.add(wl[i * in + j] * delta[i]);
            prev[j] = s.value() * act_backward(act_, pre[l - 1][j]);
          }
          delta = std::move(prev);
        }
      }
      return loss.value() * inv_b;
    }
  }
  throw std::logic_error("unreachable");
}

double Problem::loss(const WeightGroups& w) const {
  std::vector<std::size_t> all(sample_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return loss(w, all);
}

double Problem::loss(const WeightGroups& w, const std::vector<std::size_t>& batch) const {
  if (!all_finite(w)) throw std::invalid_argument("loss: non-finite weights");
  double v = sample_loss_grad(w, batch, nullptr);
  if (!std::isfinite(v)) throw std::runtime_error("loss: non-finite value");
  return v;
}

WeightGroups Problem::grad(const WeightGroups& w) const {
  std::vector<std::size_t> all(sample_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return grad(w, all);
}

WeightGroups Problem::grad(const WeightGroups& w, const std::vector<std::size_t>& batch) const {
  if (!all_finite(w)) throw std::invalid_argument("grad: non-finite weights");
  WeightGroups g = zeros_like(w);
  sample_loss_grad(w, batch, &g);
  return g;
}

WeightGroups Problem::grad(const WeightGroups& w, const SampleSelector& sel, long step) const {
  return grad(w, sel.indices(step, sample_count()));
}

double Problem::accuracy(const WeightGroups& w) const {
  if (!classification()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  if (kind_ == Kind::Logistic) {
    const auto& x = w.values[0];
    for (std::size_t i = 0; i < data_.n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < data_.d; ++j) s += data_.feature(i, j) * x[j];
      int pred = s > 0.0 ? 1 : 0;
      if (pred == data_.y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data_.n);
  }
  // mlp: argmax of logits, ties to the lowest class index
  const std::size_t L = layers_.size() - 1;
  std::vector<double> cur, next;
  for (std::size_t i = 0; i < data_.n; ++i) {
    cur.assign(data_.x.begin() + static_cast<long>(i * data_.d),
               data_.x.begin() + static_cast<long>((i + 1) * data_.d));
    for (std::size_t l = 0; l < L; ++l) {
      const auto& wl = w.at("layer" + std::to_string(l) + ".weight");
      const auto& bl = w.at("layer" + std::to_string(l) + ".bias");
      std::size_t in = layers_[l], out = layers_[l + 1];
      next.assign(out, 0.0);
      for (std::size_t r = 0; r < out; ++r) {
        double s = bl[r];
        for (std::size_t c = 0; c < in; ++c) s += wl[r * in + c] * cur[c];
        next[r] = (l + 1 < L) ? act_forward(act_, s) : s;
      }
      cur = next;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < cur.size(); ++c)
      if (cur[c] > cur[best]) best = c;
    if (static_cast<int>(best) == data_.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data_.n);
}

std::optional<WeightGroups> Problem::analytic_optimum() const {
  if (kind_ != Kind::Quadratic) return std::nullopt;
  try {
    std::vector<double> x = solve_dense(h_, b_);
    WeightGroups w;
    w.add("w", std::move(x));
    return w;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace proxkit
