#include "proxkit/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace proxkit {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << "PCKPT " << ckpt.version << "\n";
  out << "step " << ckpt.step << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "draw " << ckpt.draw_counter << "\n";
  out << "sched.t " << ckpt.sched.t << "\n";
  out << "sched.eta " << format_g17(ckpt.sched.eta_t) << "\n";
  out << "sched.lambda " << format_g17(ckpt.sched.lambda_t) << "\n";
  out << "sched.pi " << format_g17(ckpt.sched.pi_t) << "\n";
  out << "sched.mu " << format_g17(ckpt.sched.mu_t) << "\n";
  out << "sched.cumulative_eta " << format_g17(ckpt.sched.cumulative_eta) << "\n";
  out << "groups " << ckpt.w_star.group_count() << "\n";
  for (std::size_t g = 0; g < ckpt.w_star.group_count(); ++g) {
    const auto& star = ckpt.w_star.values[g];
    const auto& quant = ckpt.w_quant.at(ckpt.w_star.names[g]);
    out << "group " << ckpt.w_star.names[g] << " " << star.size() << "\n";
    for (std::size_t i = 0; i < star.size(); ++i)
      out << format_g17(star[i]) << (i + 1 == star.size() ? "\n" : " ");
    for (std::size_t i = 0; i < quant.size(); ++i)
      out << format_g17(quant[i]) << (i + 1 == quant.size() ? "\n" : " ");
  }
  if (!out) throw std::runtime_error("checkpoint: write failure on " + path);
}

namespace {

std::string expect_key(std::istream& in, const std::string& key) {
  std::string k, v;
  if (!(in >> k)) throw std::runtime_error("checkpoint: truncated before '" + key + "'");
  if (k != key) throw std::runtime_error("checkpoint: expected '" + key + "', got '" + k + "'");
  if (!(in >> v)) throw std::runtime_error("checkpoint: missing value for '" + key + "'");
  return v;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "PCKPT") throw std::runtime_error("checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  in >> ckpt.version;
  if (ckpt.version != 1)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ckpt.version));
  ckpt.step = std::stol(expect_key(in, "step"));
  ckpt.seed = std::stoull(expect_key(in, "seed"));
  ckpt.draw_counter = std::stoull(expect_key(in, "draw"));
  ckpt.sched.t = std::stol(expect_key(in, "sched.t"));
  ckpt.sched.eta_t = std::stod(expect_key(in, "sched.eta"));
  ckpt.sched.lambda_t = std::stod(expect_key(in, "sched.lambda"));
  ckpt.sched.pi_t = std::stod(expect_key(in, "sched.pi"));
  ckpt.sched.mu_t = std::stod(expect_key(in, "sched.mu"));
  ckpt.sched.cumulative_eta = std::stod(expect_key(in, "sched.cumulative_eta"));
  std::size_t groups = std::stoul(expect_key(in, "groups"));
  for (std::size_t g = 0; g < groups; ++g) {
    std::string tag, name;
    std::size_t count = 0;
    if (!(in >> tag >> name >> count) || tag != "group")
      throw std::runtime_error("checkpoint: malformed group header");
    std::vector<double> star(count), quant(count);
    for (auto& x : star)
      if (!(in >> x)) throw std::runtime_error("checkpoint: truncated group " + name);
    for (auto& x : quant)
      if (!(in >> x)) throw std::runtime_error("checkpoint: truncated group " + name);
    ckpt.w_star.add(name, std::move(star));
    ckpt.w_quant.add(name, std::move(quant));
  }
  return ckpt;
}

}  // namespace proxkit
